#include "holop/multiindex.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace holop {

MultiIndex::MultiIndex(std::vector<Term> terms) : terms_(std::move(terms)) {
  for (auto& [dim, exp] : terms_) {
    if (dim < 1) throw std::invalid_argument("MultiIndex: dimensions are 1-based");
    if (exp < 1) throw std::invalid_argument("MultiIndex: exponents must be >= 1");
  }
  std::sort(terms_.begin(), terms_.end());
  for (std::size_t i = 1; i < terms_.size(); ++i)
    if (terms_[i].first == terms_[i - 1].first)
      throw std::invalid_argument("MultiIndex: duplicate dimension");
}

MultiIndex MultiIndex::unit(int dim, int exponent) {
  return MultiIndex({{dim, exponent}});
}

int MultiIndex::exponent(int dim) const {
  for (const auto& [d, e] : terms_)
    if (d == dim) return e;
  return 0;
}

int MultiIndex::degree() const {
  int s = 0;
  for (const auto& [d, e] : terms_) s += e;
  return s;
}

int MultiIndex::max_dim() const {
  return terms_.empty() ? 0 : terms_.back().first;
}

bool MultiIndex::dominates(const MultiIndex& mu) const {
  for (const auto& [d, e] : mu.terms_)
    if (exponent(d) < e) return false;
  return true;
}

std::string MultiIndex::to_string() const {
  std::string out;
  for (const auto& [d, e] : terms_) {
    if (!out.empty()) out += ' ';
    out += std::to_string(d) + ':' + std::to_string(e);
  }
  return out;
}

MultiIndex MultiIndex::parse(const std::string& line) {
  std::vector<Term> terms;
  std::istringstream ss(line);
  std::string tok;
  while (ss >> tok) {
    auto colon = tok.find(':');
    if (colon == std::string::npos)
      throw std::invalid_argument("MultiIndex::parse: expected dim:exp, got '" + tok + "'");
    terms.emplace_back(std::stoi(tok.substr(0, colon)), std::stoi(tok.substr(colon + 1)));
  }
  return MultiIndex(std::move(terms));
}

bool grlex_less(const MultiIndex& a, const MultiIndex& b) {
  const int da = a.degree(), db = b.degree();
  if (da != db) return da < db;
  // Walk both supports in dimension order; at the first dimension where the
  // exponents differ, the larger exponent sorts first.
  auto ia = a.terms().begin(), ib = b.terms().begin();
  while (ia != a.terms().end() && ib != b.terms().end()) {
    if (ia->first != ib->first) return ia->first < ib->first;
    if (ia->second != ib->second) return ia->second > ib->second;
    ++ia;
    ++ib;
  }
  return false;  // equal
}

bool WeightSystem::integral_xi() const {
  return xi == std::floor(xi);
}

double u_weight(const MultiIndex& nu) {
  double u = 1.0;
  for (const auto& [d, e] : nu.terms()) u *= std::sqrt(2.0 * e + 1.0);
  return u;
}

double v_weight(const MultiIndex& nu, const WeightSystem& w) {
  return std::pow(u_weight(nu), 5.0 + w.xi);
}

IndexSet::IndexSet(std::vector<MultiIndex> indices, int dim_bound)
    : indices_(std::move(indices)), dim_bound_(dim_bound) {
  std::sort(indices_.begin(), indices_.end(), grlex_less);
  indices_.erase(std::unique(indices_.begin(), indices_.end()), indices_.end());
  int max_dim = 0;
  for (const auto& nu : indices_) max_dim = std::max(max_dim, nu.max_dim());
  if (dim_bound_ == 0) dim_bound_ = max_dim;
  if (max_dim > dim_bound_)
    throw std::invalid_argument("IndexSet: index support exceeds dim_bound");
}

bool IndexSet::contains(const MultiIndex& nu) const {
  auto it = std::lower_bound(indices_.begin(), indices_.end(), nu, grlex_less);
  return it != indices_.end() && *it == nu;
}

IndexSet IndexSet::restrict_dims(int d) const {
  std::vector<MultiIndex> kept;
  for (const auto& nu : indices_)
    if (nu.max_dim() <= d) kept.push_back(nu);
  return IndexSet(std::move(kept), d);
}

double weighted_cardinality(const IndexSet& S, WeightKind kind, const WeightSystem& w) {
  double total = 0.0;
  for (const auto& nu : S) {
    const double wn = kind == WeightKind::U ? u_weight(nu) : v_weight(nu, w);
    total += wn * wn;
  }
  return total;
}

namespace {

void enumerate_cross(int n, int next_dim, int budget, std::vector<MultiIndex::Term>& stack,
                     std::vector<MultiIndex>& out) {
  out.emplace_back(stack);
  for (int dim = next_dim; dim <= n; ++dim) {
    // (exp + 1) must divide into the remaining multiplicative budget
    for (int exp = 1; (exp + 1) <= budget; ++exp) {
      stack.emplace_back(dim, exp);
      enumerate_cross(n, dim + 1, budget / (exp + 1), stack, out);
      stack.pop_back();
    }
  }
}

bool fits_budget(double current, double add, double k, bool exact) {
  if (exact) return current + add <= k;
  return current + add <= k * (1.0 + 1e-12);
}

}  // namespace

IndexSet hyperbolic_cross(int n) {
  if (n < 1) throw std::invalid_argument("hyperbolic_cross: n >= 1 required");
  std::vector<MultiIndex> indices;
  std::vector<MultiIndex::Term> stack;
  enumerate_cross(n, 1, n, stack, indices);
  return IndexSet(std::move(indices), n);
}

IndexSet truncate_to_budget(const IndexSet& Lambda, double k, const WeightSystem& w,
                            const std::vector<double>& scores) {
  if (scores.size() != Lambda.size())
    throw std::invalid_argument("truncate_to_budget: one score per index required");
  std::vector<std::size_t> order(Lambda.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> v2(Lambda.size());
  for (std::size_t i = 0; i < Lambda.size(); ++i) {
    const double v = v_weight(Lambda[i], w);
    v2[i] = v * v;
  }
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const double ra = scores[a] / v2[a], rb = scores[b] / v2[b];
    if (ra != rb) return ra > rb;
    return grlex_less(Lambda[a], Lambda[b]);
  });
  const bool exact = w.integral_xi();
  std::vector<MultiIndex> chosen;
  double used = 0.0;
  for (std::size_t i : order) {
    if (scores[i] <= 0.0) continue;
    if (!fits_budget(used, v2[i], k, exact)) continue;
    used += v2[i];
    chosen.push_back(Lambda[i]);
  }
  return IndexSet(std::move(chosen), Lambda.dim_bound());
}

StechkinResult stechkin_error(const std::vector<double>& c, const std::vector<double>& v,
                              double k, double q, double p) {
  if (p >= q) throw std::invalid_argument("stechkin_error: requires p < q");
  if (q <= 0.0 || q > 2.0) throw std::invalid_argument("stechkin_error: q in (0,2]");
  if (c.size() != v.size())
    throw std::invalid_argument("stechkin_error: weights must match coefficients");
  for (double ci : c)
    if (ci < 0.0) throw std::invalid_argument("stechkin_error: entries must be >= 0");

  // Greedy largest-first on |c_i|/v_i; keep the longest feasible prefix.
  std::vector<std::size_t> order(c.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return c[a] / v[a] > c[b] / v[b];
  });
  std::vector<bool> kept(c.size(), false);
  double used = 0.0;
  for (std::size_t i : order) {
    const double v2 = v[i] * v[i];
    if (used + v2 > k) break;
    used += v2;
    kept[i] = true;
  }
  double tail_q = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i)
    if (!kept[i]) tail_q += std::pow(v[i], 2.0 - q) * std::pow(c[i], q);
  const double error = std::pow(tail_q, 1.0 / q);

  double norm_p = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i)
    norm_p += std::pow(v[i], 2.0 - p) * std::pow(c[i], p);
  norm_p = std::pow(norm_p, 1.0 / p);
  const double bound = norm_p * std::pow(k, 1.0 / q - 1.0 / p);
  return {error, bound};
}

StechkinResult stechkin_error(const std::vector<double>& c, const IndexSet& support,
                              const WeightSystem& w, double k, double q, double p) {
  if (c.size() != support.size())
    throw std::invalid_argument("stechkin_error: one coefficient per index required");
  std::vector<double> v(support.size());
  for (std::size_t i = 0; i < support.size(); ++i) v[i] = v_weight(support[i], w);
  return stechkin_error(c, v, k, q, p);
}

std::vector<double> monotone_majorant(const std::vector<double>& z) {
  std::vector<double> out(z.size());
  double running = 0.0;
  for (std::size_t i = z.size(); i-- > 0;) {
    running = std::max(running, std::abs(z[i]));
    out[i] = running;
  }
  return out;
}

void write_index_set(std::ostream& os, const IndexSet& S) {
  for (const auto& nu : S) os << nu.to_string() << '\n';
}

IndexSet read_index_set(std::istream& is, int dim_bound) {
  std::vector<MultiIndex> indices;
  std::string line;
  while (std::getline(is, line)) indices.push_back(MultiIndex::parse(line));
  return IndexSet(std::move(indices), dim_bound);
}

}  // namespace holop
