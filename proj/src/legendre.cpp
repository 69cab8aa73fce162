#include "holop/legendre.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "holop/quadrature.hpp"
#include "holop/util.hpp"

namespace holop {

double eval_P(int n, double x) {
  if (n == 0) return 1.0;
  double pm = 1.0, p = x;
  for (int k = 1; k < n; ++k) {
    const double pn = ((2.0 * k + 1.0) * x * p - k * pm) / (k + 1.0);
    pm = p;
    p = pn;
  }
  return p;
}

double eval_P_derivative(int n, double x) {
  if (n == 0) return 0.0;
  if (std::abs(std::abs(x) - 1.0) < 1e-300) {
    // P'_n(+-1) = (+-1)^(n+1) n(n+1)/2
    const double mag = 0.5 * n * (n + 1.0);
    return x > 0 ? mag : (n % 2 == 0 ? -mag : mag);
  }
  // (x^2 - 1) P'_n = n (x P_n - P_{n-1})
  return n * (x * eval_P(n, x) - eval_P(n - 1, x)) / (x * x - 1.0);
}

double eval_psi(int n, double x) {
  return std::sqrt(2.0 * n + 1.0) * eval_P(n, x);
}

double eval_Psi(const MultiIndex& nu, std::span<const double> x) {
  double prod = 1.0;
  for (const auto& [dim, exp] : nu.terms()) {
    if (dim > static_cast<int>(x.size()))
      throw std::invalid_argument("eval_Psi: index support exceeds point dimension");
    prod *= eval_psi(exp, x[dim - 1]);
  }
  return prod;
}

LegendreRoots legendre_roots(int n) {
  if (n < 1) throw std::invalid_argument("legendre_roots: n >= 1 required");
  LegendreRoots out;
  out.roots.resize(n);
  for (int i = 0; i < n; ++i) {
    // Chebyshev initial guess, descending in i
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    for (int it = 0; it < 100; ++it) {
      const double dx = eval_P(n, x) / eval_P_derivative(n, x);
      x -= dx;
      if (std::abs(dx) <= 1e-14) break;
    }
    out.roots[n - 1 - i] = x;
  }
  std::sort(out.roots.begin(), out.roots.end());
  // leading coefficient of P_n: a_0 = 1, a_k = a_{k-1} (2k-1)/k
  double lead = 1.0;
  for (int k = 1; k <= n; ++k) lead *= (2.0 * k - 1.0) / k;
  out.leading_coeff = lead;
  return out;
}

std::vector<double> VectorExpansion::eval(std::span<const double> x) const {
  std::vector<double> out(output_dim, 0.0);
  for (std::size_t i = 0; i < support.size(); ++i) {
    const double psi = eval_Psi(support[i], x);
    const auto& c = coefficients[i];
    for (int k = 0; k < output_dim; ++k) out[k] += c[k] * psi;
  }
  return out;
}

double DiscreteNorm::operator()(std::span<const double> v) const {
  switch (kind) {
    case NormKind::WeightedEuclidean: {
      double s = 0.0;
      for (std::size_t k = 0; k < v.size(); ++k) s += weights[k] * v[k] * v[k];
      return std::sqrt(s);
    }
    case NormKind::WeightedL4: {
      double s = 0.0;
      for (std::size_t k = 0; k < v.size(); ++k) {
        const double v2 = v[k] * v[k];
        s += weights[k] * v2 * v2;
      }
      return std::sqrt(std::sqrt(s));
    }
    case NormKind::Sup: {
      double m = 0.0;
      for (double vk : v) m = std::max(m, std::abs(vk));
      return m;
    }
  }
  return 0.0;
}

DiscreteNorm nodal_norm(int K, NormKind kind) {
  if (K < 2) throw std::invalid_argument("nodal_norm: K >= 2 required");
  DiscreteNorm n;
  n.kind = kind;
  n.weights.assign(K, 1.0 / (K - 1));
  n.weights.front() *= 0.5;
  n.weights.back() *= 0.5;
  return n;
}

double bochner_l2_norm(const VectorField& F, const SparseGridRule& rule,
                       const DiscreteNorm& norm, bool* clamped) {
  std::vector<double> terms(rule.size());
  for (std::size_t i = 0; i < rule.size(); ++i) {
    const double y = norm(F(rule.nodes[i]));
    terms[i] = rule.weights[i] * y * y;
  }
  double s = pairwise_sum(terms);
  if (clamped) *clamped = false;
  if (s < 0.0) {
    s = 0.0;
    if (clamped) *clamped = true;
  }
  return std::sqrt(s);
}

namespace {

// Largest eigenvalue of the implicit operator v -> sum_i w_i y_i (y_i . v)
// by power iteration with a fixed splitmix-seeded start vector.
double top_eigenvalue(const std::vector<std::vector<double>>& ys,
                      const std::vector<double>& w) {
  const std::size_t K = ys.empty() ? 0 : ys.front().size();
  if (K == 0) return 0.0;
  std::uint64_t state = 0x9e3779b97f4a7c15ULL;
  std::vector<double> v(K);
  for (auto& vi : v)
    vi = 1.0 + 1e-3 * (static_cast<double>(splitmix64(state) >> 11) * 0x1p-53 - 0.5);
  double nv = 0.0;
  for (double vi : v) nv += vi * vi;
  for (auto& vi : v) vi /= std::sqrt(nv);

  double lambda = 0.0;
  std::vector<double> mv(K);
  for (int it = 0; it < 20000; ++it) {
    std::fill(mv.begin(), mv.end(), 0.0);
    for (std::size_t i = 0; i < ys.size(); ++i) {
      double dot = 0.0;
      for (std::size_t k = 0; k < K; ++k) dot += ys[i][k] * v[k];
      const double c = w[i] * dot;
      for (std::size_t k = 0; k < K; ++k) mv[k] += c * ys[i][k];
    }
    double next = 0.0;
    for (std::size_t k = 0; k < K; ++k) next += v[k] * mv[k];  // Rayleigh quotient
    double nm = 0.0;
    for (double m : mv) nm += m * m;
    nm = std::sqrt(nm);
    if (nm == 0.0) return 0.0;
    for (std::size_t k = 0; k < K; ++k) v[k] = mv[k] / nm;
    if (it > 0 && std::abs(next - lambda) <= 1e-10 * std::abs(next)) {
      lambda = next;
      break;
    }
    lambda = next;
  }
  return std::max(lambda, 0.0);
}

}  // namespace

double pettis_l2_norm(const std::vector<std::vector<double>>& samples,
                      const SparseGridRule& rule, const DiscreteNorm& norm) {
  if (samples.size() != rule.size())
    throw std::invalid_argument("pettis_l2_norm: one sample per rule node required");
  const std::size_t K = samples.empty() ? 0 : samples.front().size();
  if (norm.kind == NormKind::Sup) {
    // dual ball = coordinate functionals
    double best = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
      double s = 0.0;
      for (std::size_t i = 0; i < samples.size(); ++i)
        s += rule.weights[i] * samples[i][k] * samples[i][k];
      best = std::max(best, s);
    }
    return std::sqrt(std::max(best, 0.0));
  }
  // mass-weighted Euclidean: scale by sqrt(mass) and take the top eigenvalue
  std::vector<std::vector<double>> ys(samples.size(), std::vector<double>(K));
  for (std::size_t i = 0; i < samples.size(); ++i)
    for (std::size_t k = 0; k < K; ++k)
      ys[i][k] = std::sqrt(norm.weights[k]) * samples[i][k];
  return std::sqrt(top_eigenvalue(ys, rule.weights));
}

double pettis_l2_norm(const VectorField& F, const SparseGridRule& rule,
                      const DiscreteNorm& norm) {
  std::vector<std::vector<double>> samples(rule.size());
  for (std::size_t i = 0; i < rule.size(); ++i) samples[i] = F(rule.nodes[i]);
  return pettis_l2_norm(samples, rule, norm);
}

double discrete_seminorm(const std::vector<std::vector<double>>& values,
                         const DiscreteNorm& norm) {
  if (values.empty()) return 0.0;
  std::vector<double> terms(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double y = norm(values[i]);
    terms[i] = y * y;
  }
  return std::sqrt(pairwise_sum(terms) / static_cast<double>(values.size()));
}

double sup_norm_estimate(const VectorField& F, int d, int n_samples, std::uint64_t seed,
                         const DiscreteNorm& norm) {
  double best = 0.0;
  const std::size_t offset = static_cast<std::size_t>(splitmix64(seed) % 8191);
  for (int i = 0; i < n_samples; ++i) {
    auto x = halton_point(offset + i, d);
    best = std::max(best, norm(F(x)));
  }
  const int corner_dims = std::min(d, 10);
  std::vector<double> x(d, 1.0);
  for (std::uint64_t mask = 0; mask < (1ULL << corner_dims); ++mask) {
    for (int j = 0; j < corner_dims; ++j) x[j] = (mask & (1ULL << j)) ? -1.0 : 1.0;
    best = std::max(best, norm(F(x)));
  }
  return best;
}

void write_expansion_csv(std::ostream& os, const VectorExpansion& p) {
  for (std::size_t i = 0; i < p.support.size(); ++i)
    os << (i ? "," : "") << p.support[i].to_string();
  os << '\n';
  for (int k = 0; k < p.output_dim; ++k) {
    for (std::size_t i = 0; i < p.support.size(); ++i)
      os << (i ? "," : "") << format_full(p.coefficients[i][k]);
    os << '\n';
  }
}

VectorExpansion read_expansion_csv(std::istream& is, int dim_bound) {
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("read_expansion_csv: empty input");
  std::vector<MultiIndex> indices;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) indices.push_back(MultiIndex::parse(cell));
  }
  std::vector<std::vector<double>> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> row;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    if (row.size() != indices.size())
      throw std::runtime_error("read_expansion_csv: ragged row");
    rows.push_back(std::move(row));
  }
  VectorExpansion p;
  const int K = static_cast<int>(rows.size());
  // The CSV stores indices in file order = canonical order (writer uses an
  // IndexSet), so coefficients can be paired positionally after re-sorting.
  IndexSet support(indices, dim_bound);
  if (support.size() != indices.size())
    throw std::runtime_error("read_expansion_csv: duplicate indices");
  p.support = support;
  p.output_dim = K;
  p.coefficients.assign(indices.size(), std::vector<double>(K));
  for (std::size_t i = 0; i < indices.size(); ++i) {
    // locate position of indices[i] in the canonical order
    std::size_t pos = 0;
    while (!(support[pos] == indices[i])) ++pos;
    for (int k = 0; k < K; ++k) p.coefficients[pos][k] = rows[k][i];
  }
  return p;
}

}  // namespace holop
