#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace holop {

// Sparse multi-index nu with finite support. Dimensions are 1-based and
// stored exponents are always >= 1; the zero index has no terms.
class MultiIndex {
 public:
  using Term = std::pair<int, int>;  // (dimension, exponent)

  MultiIndex() = default;
  explicit MultiIndex(std::vector<Term> terms);

  static MultiIndex zero() { return {}; }
  static MultiIndex unit(int dim, int exponent = 1);

  const std::vector<Term>& terms() const { return terms_; }
  int exponent(int dim) const;  // 0 if dim not in support
  int degree() const;           // |nu|_1
  int max_dim() const;          // largest active dimension, 0 for the zero index
  bool is_zero() const { return terms_.empty(); }
  // componentwise mu <= nu
  bool dominates(const MultiIndex& mu) const;

  std::string to_string() const;  // "dim:exp" pairs, space separated; "" for zero
  static MultiIndex parse(const std::string& line);

  friend bool operator==(const MultiIndex&, const MultiIndex&) = default;

 private:
  std::vector<Term> terms_;  // strictly increasing dimensions
};

// Canonical order: ascending total degree, ties broken lexicographically on
// the dense exponent vector with earlier dimensions weighted first (grlex).
// Makes e1 precede e2 and all greedy selections reproducible.
bool grlex_less(const MultiIndex& a, const MultiIndex& b);

struct WeightSystem {
  double xi = 0.0;  // v = u^(5+xi)
  bool integral_xi() const;
};

// u_nu = prod_k sqrt(2 nu_k + 1); the sup norm of the tensor Legendre basis
// function with index nu.
double u_weight(const MultiIndex& nu);
double v_weight(const MultiIndex& nu, const WeightSystem& w);

enum class WeightKind { U, V };

// Finite, deduplicated, canonically ordered collection of multi-indices.
class IndexSet {
 public:
  IndexSet() = default;
  explicit IndexSet(std::vector<MultiIndex> indices, int dim_bound = 0);

  std::size_t size() const { return indices_.size(); }
  bool empty() const { return indices_.empty(); }
  const MultiIndex& operator[](std::size_t i) const { return indices_[i]; }
  const std::vector<MultiIndex>& indices() const { return indices_; }
  int dim_bound() const { return dim_bound_; }
  bool contains(const MultiIndex& nu) const;

  auto begin() const { return indices_.begin(); }
  auto end() const { return indices_.end(); }

  // Drops indices with support beyond dimension d.
  IndexSet restrict_dims(int d) const;

 private:
  std::vector<MultiIndex> indices_;
  int dim_bound_ = 0;
};

// |S|_w = sum over S of w_nu^2 for the selected weight family.
double weighted_cardinality(const IndexSet& S, WeightKind kind, const WeightSystem& w);

// Hyperbolic cross: all nu with prod_{k: nu_k != 0} (nu_k + 1) <= n supported
// on the first n dimensions.
IndexSet hyperbolic_cross(int n);

// Greedy budgeted selection: visit Lambda in decreasing score/v^2 order
// (canonical order on ties) and keep every index that still fits |S|_v <= k.
// Indices with score <= 0 are never selected.
IndexSet truncate_to_budget(const IndexSet& Lambda, double k, const WeightSystem& w,
                            const std::vector<double>& scores);

struct StechkinResult {
  double error;  // best weighted-budget-k tail norm, greedy largest-first rule
  double bound;  // ||c||_{p,v} * k^(1/q - 1/p)
};

// Weighted Stechkin machinery over an explicit weight vector (one entry per
// coefficient). Rejects p >= q.
StechkinResult stechkin_error(const std::vector<double>& c, const std::vector<double>& v,
                              double k, double q, double p);
// Convenience overload: weights derived from an index set.
StechkinResult stechkin_error(const std::vector<double>& c, const IndexSet& support,
                              const WeightSystem& w, double k, double q, double p);

// Minimal monotone majorant z~_i = sup_{j >= i} |z_j| of a finite sequence.
std::vector<double> monotone_majorant(const std::vector<double>& z);

// Text format: one line per index, "dim:exp" pairs space-separated, an empty
// line denotes the zero index.
void write_index_set(std::ostream& os, const IndexSet& S);
IndexSet read_index_set(std::istream& is, int dim_bound = 0);

}  // namespace holop
