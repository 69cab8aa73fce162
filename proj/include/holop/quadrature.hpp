#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

namespace holop {

// Univariate rule over [-1,1] with respect to the uniform probability
// measure; weights sum to 1.
struct Rule1D {
  std::vector<double> nodes;
  std::vector<double> weights;
  int level = -1;
};

// n-point Gauss rule, exact for polynomials of degree <= 2n-1.
Rule1D gauss_legendre(int n);

// Nested Clenshaw-Curtis rule: 1 node at level 0, 2^l + 1 nodes for l >= 1,
// nodes cos(pi k / 2^l). Weights by the exact cosine-series formula.
Rule1D clenshaw_curtis(int level);

enum class RuleFamily { ClenshawCurtis, Gauss };

struct SparseGridRule {
  int dim = 0;
  int level = 0;
  std::vector<std::vector<double>> nodes;
  std::vector<double> weights;  // may be negative; sum to 1
  std::size_t size() const { return nodes.size(); }
};

// Isotropic Smolyak combination rule. Duplicate nodes merged (tolerance 1e-14).
SparseGridRule smolyak(int dim, int level, RuleFamily family = RuleFamily::ClenshawCurtis);

// Full tensor Gauss rule, used as the exactness reference.
SparseGridRule tensor_gauss(int dim, int n_per_dim);

// sum_i w_i f(node_i) with fixed (sorted-node, pairwise) summation order.
double integrate(const SparseGridRule& rule,
                 const std::function<double(std::span<const double>)>& f);
std::vector<double> integrate_vector(
    const SparseGridRule& rule,
    const std::function<std::vector<double>(std::span<const double>)>& f);

// Smallest level whose node count reaches 20x the largest training set,
// capped at node_cap nodes.
int test_level_for(int dim, int max_m, std::size_t node_cap = 100000);

// CSV columns x1..xd,w.
void write_rule_csv(std::ostream& os, const SparseGridRule& rule);

}  // namespace holop
