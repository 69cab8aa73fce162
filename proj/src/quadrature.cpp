#include "holop/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <stdexcept>

#include "holop/legendre.hpp"
#include "holop/util.hpp"

namespace holop {

Rule1D gauss_legendre(int n) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: n >= 1 required");
  Rule1D r;
  r.level = n - 1;
  if (n == 1) {
    r.nodes = {0.0};
    r.weights = {1.0};
    return r;
  }
  auto lr = legendre_roots(n);
  r.nodes = lr.roots;
  r.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    const double x = r.nodes[i];
    const double dp = eval_P_derivative(n, x);
    r.weights[i] = 1.0 / ((1.0 - x * x) * dp * dp);  // probability normalization
  }
  return r;
}

Rule1D clenshaw_curtis(int level) {
  if (level < 0) throw std::invalid_argument("clenshaw_curtis: level >= 0 required");
  Rule1D r;
  r.level = level;
  if (level == 0) {
    r.nodes = {0.0};
    r.weights = {1.0};
    return r;
  }
  const int N = 1 << level;  // N+1 nodes
  r.nodes.resize(N + 1);
  r.weights.resize(N + 1);
  for (int k = 0; k <= N; ++k) {
    // descending cos, then reverse for ascending node order
    r.nodes[k] = std::cos(M_PI * k / N);
    double s = 0.0;
    for (int j = 1; j <= N / 2; ++j) {
      const double bj = (j == N / 2) ? 1.0 : 2.0;
      s += bj / (4.0 * j * j - 1.0) * std::cos(2.0 * M_PI * j * k / N);
    }
    const double ck = (k == 0 || k == N) ? 1.0 : 2.0;
    r.weights[k] = 0.5 * ck / N * (1.0 - s);  // 0.5: probability normalization
  }
  std::reverse(r.nodes.begin(), r.nodes.end());
  std::reverse(r.weights.begin(), r.weights.end());
  // snap the midpoint: cos(pi/2) in floating point is ~6e-17, keep nestedness
  if (N % 2 == 0) r.nodes[N / 2] = 0.0;
  return r;
}

namespace {

Rule1D rule_for_level(RuleFamily family, int level) {
  if (family == RuleFamily::ClenshawCurtis) return clenshaw_curtis(level);
  Rule1D r = gauss_legendre(level + 1);
  r.level = level;
  return r;
}

double binomial(int n, int k) {
  double v = 1.0;
  for (int i = 1; i <= k; ++i) v = v * (n - k + i) / i;
  return v;
}

// enumerate multi-levels i in N_0^d with |i|_1 = q
void level_vectors(int d, int q, std::vector<int>& stack, std::vector<std::vector<int>>& out) {
  if (static_cast<int>(stack.size()) == d - 1) {
    stack.push_back(q);
    out.push_back(stack);
    stack.pop_back();
    return;
  }
  for (int i = 0; i <= q; ++i) {
    stack.push_back(i);
    level_vectors(d, q - i, stack, out);
    stack.pop_back();
  }
}

struct NodeLess {
  bool operator()(const std::vector<double>& a, const std::vector<double>& b) const {
    for (std::size_t j = 0; j < a.size(); ++j) {
      if (a[j] < b[j] - 1e-14) return true;
      if (a[j] > b[j] + 1e-14) return false;
    }
    return false;
  }
};

}  // namespace

SparseGridRule smolyak(int dim, int level, RuleFamily family) {
  if (dim < 1) throw std::invalid_argument("smolyak: dim >= 1 required");
  if (level < 0) throw std::invalid_argument("smolyak: level >= 0 required");
  std::map<std::vector<double>, double, NodeLess> merged;
  const int q_lo = std::max(0, level - dim + 1);
  for (int q = q_lo; q <= level; ++q) {
    const double coeff =
        ((level - q) % 2 == 0 ? 1.0 : -1.0) * binomial(dim - 1, level - q);
    std::vector<std::vector<int>> levels;
    std::vector<int> stack;
    level_vectors(dim, q, stack, levels);
    for (const auto& lv : levels) {
      std::vector<Rule1D> rules;
      rules.reserve(dim);
      for (int k = 0; k < dim; ++k) rules.push_back(rule_for_level(family, lv[k]));
      // tensor product traversal
      std::vector<std::size_t> idx(dim, 0);
      while (true) {
        std::vector<double> node(dim);
        double w = coeff;
        for (int k = 0; k < dim; ++k) {
          node[k] = rules[k].nodes[idx[k]];
          w *= rules[k].weights[idx[k]];
        }
        merged[node] += w;
        int k = 0;
        while (k < dim) {
          if (++idx[k] < rules[k].nodes.size()) break;
          idx[k] = 0;
          ++k;
        }
        if (k == dim) break;
      }
    }
  }
  SparseGridRule out;
  out.dim = dim;
  out.level = level;
  out.nodes.reserve(merged.size());
  out.weights.reserve(merged.size());
  for (const auto& [node, w] : merged) {
    out.nodes.push_back(node);
    out.weights.push_back(w);
  }
  return out;
}

SparseGridRule tensor_gauss(int dim, int n_per_dim) {
  Rule1D r1 = gauss_legendre(n_per_dim);
  SparseGridRule out;
  out.dim = dim;
  out.level = n_per_dim - 1;
  std::vector<std::size_t> idx(dim, 0);
  while (true) {
    std::vector<double> node(dim);
    double w = 1.0;
    for (int k = 0; k < dim; ++k) {
      node[k] = r1.nodes[idx[k]];
      w *= r1.weights[idx[k]];
    }
    out.nodes.push_back(std::move(node));
    out.weights.push_back(w);
    int k = 0;
    while (k < dim) {
      if (++idx[k] < r1.nodes.size()) break;
      idx[k] = 0;
      ++k;
    }
    if (k == dim) break;
  }
  return out;
}

double integrate(const SparseGridRule& rule,
                 const std::function<double(std::span<const double>)>& f) {
  std::vector<double> terms(rule.size());
  for (std::size_t i = 0; i < rule.size(); ++i)
    terms[i] = rule.weights[i] * f(rule.nodes[i]);
  return pairwise_sum(terms);
}

std::vector<double> integrate_vector(
    const SparseGridRule& rule,
    const std::function<std::vector<double>(std::span<const double>)>& f) {
  if (rule.size() == 0) return {};
  std::vector<std::vector<double>> vals(rule.size());
  for (std::size_t i = 0; i < rule.size(); ++i) vals[i] = f(rule.nodes[i]);
  const std::size_t K = vals.front().size();
  std::vector<double> out(K);
  std::vector<double> terms(rule.size());
  for (std::size_t k = 0; k < K; ++k) {
    for (std::size_t i = 0; i < rule.size(); ++i) terms[i] = rule.weights[i] * vals[i][k];
    out[k] = pairwise_sum(terms);
  }
  return out;
}

int test_level_for(int dim, int max_m, std::size_t node_cap) {
  const std::size_t target = 20ull * static_cast<std::size_t>(max_m);
  int level = 0;
  std::size_t prev = 1;
  for (;; ++level) {
    const std::size_t n = smolyak(dim, level).size();
    if (n >= target) return level;
    if (n > node_cap) return std::max(0, level - 1);
    if (level > 20) return level;  // unreachable in practice
    prev = n;
    (void)prev;
  }
}

void write_rule_csv(std::ostream& os, const SparseGridRule& rule) {
  for (int k = 0; k < rule.dim; ++k) os << 'x' << (k + 1) << ',';
  os << "w\n";
  for (std::size_t i = 0; i < rule.size(); ++i) {
    for (int k = 0; k < rule.dim; ++k) os << format_full(rule.nodes[i][k]) << ',';
    os << format_full(rule.weights[i]) << '\n';
  }
}

}  // namespace holop
