#include "holop/operators.hpp"

#include <cmath>
#include <ostream>
#include <stdexcept>

#include "holop/util.hpp"

namespace holop {

namespace {

// log-a2 family constants
constexpr double kBetaC = 1.0 / 8.0;
const double kBetaP = std::max(1.0, 2.0 * kBetaC);
const double kBeta = kBetaC / kBetaP;

double log_a2_zeta(int j) {
  const double arg = std::floor(j / 2.0) * M_PI * kBeta;
  return std::sqrt(std::sqrt(M_PI) * kBeta) * std::exp(-arg * arg / 8.0);
}

double log_a2_theta(int j, double z) {
  const double f = std::floor(j / 2.0) * M_PI * z / kBetaP;
  return (j % 2 == 0) ? std::sin(f) : std::cos(f);
}

}  // namespace

CoefficientField CoefficientField::affine_a1(int d) {
  CoefficientField f;
  f.kind = Kind::AffineA1;
  f.d = d;
  return f;
}

CoefficientField CoefficientField::log_a2(int d) {
  CoefficientField f;
  f.kind = Kind::LogA2;
  f.d = d;
  return f;
}

CoefficientField CoefficientField::custom_affine(double a0, std::vector<double> c) {
  CoefficientField f;
  f.kind = Kind::CustomAffine;
  f.d = static_cast<int>(c.size());
  f.a0 = a0;
  f.custom_c = std::move(c);
  return f;
}

double CoefficientField::r_min() const {
  switch (kind) {
    case Kind::AffineA1: {
      double s = 0.0;
      for (int j = 1; j <= d; ++j) s += std::pow(j, -1.5);
      return 2.62 - s;
    }
    case Kind::LogA2: {
      double s = std::sqrt(std::sqrt(M_PI) * kBeta / 2.0);
      for (int j = 2; j <= d; ++j) s += log_a2_zeta(j);
      return std::exp(1.0 - s);
    }
    case Kind::CustomAffine: {
      double s = 0.0;
      for (double c : custom_c) s += std::abs(c);
      return a0 - s;
    }
  }
  return 0.0;
}

std::vector<double> CoefficientField::holomorphy_b() const {
  std::vector<double> b(d);
  switch (kind) {
    case Kind::AffineA1:
      for (int j = 1; j <= d; ++j) b[j - 1] = std::pow(j, -1.5);
      break;
    case Kind::LogA2:
      b[0] = std::sqrt(std::sqrt(M_PI) * kBeta / 2.0);
      for (int j = 2; j <= d; ++j) b[j - 1] = log_a2_zeta(j);
      break;
    case Kind::CustomAffine:
      for (int j = 0; j < d; ++j) b[j] = std::abs(custom_c[j]);
      break;
  }
  return b;
}

std::string CoefficientField::kind_name() const {
  switch (kind) {
    case Kind::AffineA1: return "affine-a1";
    case Kind::LogA2: return "log-a2";
    case Kind::CustomAffine: return "custom-affine";
  }
  return "?";
}

double eval_coefficient(const CoefficientField& field, double z, std::span<const double> x) {
  const int d = std::min<int>(field.d, static_cast<int>(x.size()));
  switch (field.kind) {
    case CoefficientField::Kind::AffineA1: {
      double a = 2.62;
      for (int j = 1; j <= d; ++j) a += x[j - 1] * std::sin(M_PI * z * j) * std::pow(j, -1.5);
      return a;
    }
    case CoefficientField::Kind::LogA2: {
      double e = 1.0;
      if (d >= 1) e += x[0] * std::sqrt(std::sqrt(M_PI) * kBeta / 2.0);
      for (int j = 2; j <= d; ++j) e += log_a2_zeta(j) * log_a2_theta(j, z) * x[j - 1];
      return std::exp(e);
    }
    case CoefficientField::Kind::CustomAffine: {
      double a = field.a0;
      for (int j = 1; j <= d; ++j) a += field.custom_c[j - 1] * x[j - 1] * std::sin(M_PI * z * j);
      if (a <= 0.0) throw std::runtime_error("eval_coefficient: nonpositive custom field");
      return a;
    }
  }
  return 0.0;
}

std::vector<double> solve_diffusion_1d(const CoefficientField& field, std::span<const double> x,
                                       const std::function<double(double)>& f_rhs, int K) {
  if (K < 2) throw std::invalid_argument("solve_diffusion_1d: K >= 2 required");
  const int cells = K - 1;
  const double h = 1.0 / cells;
  auto g4 = gauss_legendre(4);

  // Gauss points per cell, mapped to [z0, z0+h]
  const int nq = static_cast<int>(g4.nodes.size());
  // First pass: cumulative source integral Fhat at cell boundaries and Gauss
  // points, plus cell integrals of 1/a and Fhat/a.
  std::vector<double> inv_a_cell(cells), fhat_over_a_cell(cells);
  std::vector<double> fhat_bound(K, 0.0);

  // cumulative integral of f up to each cell boundary
  for (int c = 0; c < cells; ++c) {
    double cell_f = 0.0;
    for (int q = 0; q < nq; ++q) {
      const double z = (c + 0.5 * (1.0 + g4.nodes[q])) * h;
      cell_f += g4.weights[q] * f_rhs(z);  // prob weights sum to 1 -> x h below
    }
    fhat_bound[c + 1] = fhat_bound[c] + h * cell_f;
  }

  for (int c = 0; c < cells; ++c) {
    double ia = 0.0, fa = 0.0;
    for (int q = 0; q < nq; ++q) {
      const double t = 0.5 * (1.0 + g4.nodes[q]);  // in (0,1)
      const double z = (c + t) * h;
      const double a = eval_coefficient(field, z, x);
      if (a <= 0.0) throw std::runtime_error("solve_diffusion_1d: nonpositive coefficient");
      // Fhat at z: boundary value plus partial cell integral of f
      double partial = 0.0;
      for (int q2 = 0; q2 < nq; ++q2) {
        const double t2 = 0.5 * (1.0 + g4.nodes[q2]) * t;  // in (0, t)
        partial += g4.weights[q2] * f_rhs((c + t2) * h);
      }
      const double fhat = fhat_bound[c] + h * t * partial;
      ia += g4.weights[q] / a;
      fa += g4.weights[q] * fhat / a;
    }
    inv_a_cell[c] = h * ia;
    fhat_over_a_cell[c] = h * fa;
  }

  double total_inv_a = 0.0, total_fa = 0.0;
  for (int c = 0; c < cells; ++c) {
    total_inv_a += inv_a_cell[c];
    total_fa += fhat_over_a_cell[c];
  }
  const double C = total_fa / total_inv_a;  // enforces u(1) = 0

  std::vector<double> u(K, 0.0);
  for (int c = 0; c < cells; ++c)
    u[c + 1] = u[c] + C * inv_a_cell[c] - fhat_over_a_cell[c];
  u[K - 1] = 0.0;  // exact by construction of C; remove rounding residue
  return u;
}

OperatorOracle diffusion_oracle(const CoefficientField& field, double source_const, int K,
                                NormKind norm_kind) {
  OperatorOracle o;
  o.input_dim = field.d;
  o.output_dim = K;
  o.holomorphy_b = field.holomorphy_b();
  o.output_norm = nodal_norm(K, norm_kind);
  o.family = field.kind_name();
  o.source = source_const;
  o.eval = [field, source_const, K](std::span<const double> x) {
    return solve_diffusion_1d(field, x, [source_const](double) { return source_const; }, K);
  };
  return o;
}

OperatorOracle synthetic_affine_family(std::vector<double> b, std::vector<double> c,
                                       std::vector<double> y, NormKind norm_kind,
                                       double c_scale) {
  if (b.size() != c.size())
    throw std::invalid_argument("synthetic_affine_family: b and c must have equal length");
  for (std::size_t i = 0; i < c.size(); ++i)
    if (std::abs(c[i]) > b[i])
      throw std::invalid_argument("synthetic_affine_family: requires |c| <= b");
  OperatorOracle o;
  o.input_dim = static_cast<int>(c.size());
  o.output_dim = static_cast<int>(y.size());
  o.holomorphy_b = std::move(b);
  o.output_norm = DiscreteNorm{norm_kind, std::vector<double>(y.size(), 1.0 / y.size())};
  o.family = "synthetic";
  o.eval = [c = std::move(c), y = std::move(y), c_scale](std::span<const double> x) {
    double s = 0.0;
    for (std::size_t i = 0; i < c.size() && i < x.size(); ++i) s += c[i] * x[i];
    const double v = std::sqrt(3.0) * c_scale * s;
    std::vector<double> out(y.size());
    for (std::size_t k = 0; k < y.size(); ++k) out[k] = v * y[k];
    return out;
  };
  return o;
}

EncoderDecoder EncoderDecoder::identity(int d_X, int d_Y) {
  EncoderDecoder ed;
  ed.d_X = d_X;
  ed.d_Y = d_Y;
  ed.input_keep = d_X;
  ed.output_keep = d_Y;
  ed.mass = nodal_norm(std::max(d_Y, 2)).weights;
  ed.mass.resize(d_Y, 0.0);
  return ed;
}

std::vector<double> EncoderDecoder::project_input(std::span<const double> x) const {
  std::vector<double> out(x.begin(), x.end());
  for (std::size_t j = input_keep; j < out.size(); ++j) out[j] = 0.0;
  return out;
}

std::vector<double> EncoderDecoder::project_output(std::span<const double> y) const {
  std::vector<double> out(y.begin(), y.end());
  for (std::size_t j = output_keep; j < out.size(); ++j) out[j] = 0.0;
  return out;
}

TrainingSet generate_training_set(const OperatorOracle& oracle, int m, double noise_level,
                                  std::uint64_t seed) {
  if (m < 1) throw std::invalid_argument("generate_training_set: m >= 1 required");
  const int d = oracle.input_dim;
  const int K = oracle.output_dim;
  TrainingSet ts;
  ts.X.resize(m, d);
  ts.Y.resize(m, K);
  ts.noise_level = noise_level;
  ts.seed = seed;
  for (int i = 0; i < m; ++i) {
    auto eng = keyed_engine(seed, static_cast<std::uint64_t>(i));
    std::vector<double> x(d);
    for (int j = 0; j < d; ++j) x[j] = uniform_pm1(eng);
    auto y = oracle.eval(x);
    if (noise_level > 0.0) {
      // direction uniform on the Y-sphere, radius eta * U^(1/K)
      std::normal_distribution<double> gauss(0.0, 1.0);
      std::vector<double> g(K);
      for (auto& gk : g) gk = gauss(eng);
      const double gn = oracle.output_norm(g);
      if (gn > 0.0) {
        const double u = std::uniform_real_distribution<double>(0.0, 1.0)(eng);
        const double radius = noise_level * std::pow(u, 1.0 / K);
        for (int k = 0; k < K; ++k) y[k] += radius * g[k] / gn;
      }
    }
    for (int j = 0; j < d; ++j) ts.X(i, j) = x[j];
    for (int k = 0; k < K; ++k) ts.Y(i, k) = y[k];
  }
  return ts;
}

EncDecErrors encoder_decoder_error_terms(const OperatorOracle& oracle,
                                         const EncoderDecoder& ed, const SparseGridRule& rule) {
  if (rule.dim != oracle.input_dim)
    throw std::invalid_argument("encoder_decoder_error_terms: rule dimension mismatch");
  EncDecErrors out;
  if (ed.input_keep >= ed.d_X && ed.output_keep >= ed.d_Y) return out;  // identity pair

  std::vector<double> tx(rule.size()), ty(rule.size());
  for (std::size_t i = 0; i < rule.size(); ++i) {
    const auto& x = rule.nodes[i];
    // input side: sup-norm deviation of the reconstructed parameter vector
    auto px = ed.project_input(x);
    double dx = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) dx = std::max(dx, std::abs(x[j] - px[j]));
    tx[i] = rule.weights[i] * dx * dx;
    auto y = oracle.eval(x);
    auto py = ed.project_output(y);
    std::vector<double> diff(y.size());
    for (std::size_t k = 0; k < y.size(); ++k) diff[k] = y[k] - py[k];
    const double dy = oracle.output_norm(diff);
    ty[i] = rule.weights[i] * dy * dy;
  }
  out.e_x2 = std::sqrt(std::max(0.0, pairwise_sum(tx)));
  out.e_y2 = std::sqrt(std::max(0.0, pairwise_sum(ty)));
  return out;
}

void write_training_set_csv(std::ostream& os, const TrainingSet& ts) {
  for (int j = 0; j < ts.X.cols(); ++j) os << 'x' << (j + 1) << ',';
  for (int k = 0; k < ts.Y.cols(); ++k) os << 'y' << (k + 1) << (k + 1 < ts.Y.cols() ? "," : "");
  os << '\n';
  for (int i = 0; i < ts.X.rows(); ++i) {
    for (int j = 0; j < ts.X.cols(); ++j) os << format_full(ts.X(i, j)) << ',';
    for (int k = 0; k < ts.Y.cols(); ++k)
      os << format_full(ts.Y(i, k)) << (k + 1 < ts.Y.cols() ? "," : "");
    os << '\n';
  }
}

void write_oracle_config(std::ostream& os, const OperatorOracle& oracle) {
  os << "family = " << oracle.family << '\n';
  os << "d = " << oracle.input_dim << '\n';
  os << "K = " << oracle.output_dim << '\n';
  os << "noise = " << format_full(oracle.noise_default) << '\n';
  const char* norm = oracle.output_norm.kind == NormKind::WeightedEuclidean ? "euclidean"
                     : oracle.output_norm.kind == NormKind::WeightedL4      ? "l4"
                                                                            : "sup";
  os << "norm = " << norm << '\n';
  os << "source = " << format_full(oracle.source) << '\n';
}

}  // namespace holop
