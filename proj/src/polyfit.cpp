#include "holop/polyfit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "holop/util.hpp"

namespace holop {

namespace {

VectorExpansion expansion_from(const IndexSet& columns, const Eigen::MatrixXd& C) {
  VectorExpansion p;
  p.support = columns;
  p.output_dim = static_cast<int>(C.cols());
  p.coefficients.assign(columns.size(), std::vector<double>(C.cols()));
  for (std::size_t i = 0; i < columns.size(); ++i)
    for (int k = 0; k < C.cols(); ++k) p.coefficients[i][k] = C(i, k);
  return p;
}

double residual_rms_of(const Eigen::MatrixXd& R, const DiscreteNorm& norm) {
  const int m = static_cast<int>(R.rows());
  std::vector<double> terms(m);
  std::vector<double> row(R.cols());
  for (int i = 0; i < m; ++i) {
    for (int k = 0; k < R.cols(); ++k) row[k] = R(i, k);
    const double y = norm(row);
    terms[i] = y * y;
  }
  return std::sqrt(pairwise_sum(terms) / m);
}

// Euclidean solve: rank-revealing QR with column pivoting. Rank-deficient
// systems get the pivoted basic solution (coefficients supported on the
// best-conditioned columns, zeros elsewhere); consistent underdetermined
// systems are still interpolated exactly.
Eigen::MatrixXd solve_euclidean(const Eigen::MatrixXd& B, const Eigen::MatrixXd& Y,
                                bool* deficient) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(B);
  qr.setThreshold(1e-12);
  if (deficient) *deficient = qr.rank() < B.cols();
  return qr.solve(Y);
}

// Gradient of 1/m sum_i ||r_i||_Y^2 with respect to the fitted values (not
// the residual), for the weighted-l4 norm. Zero rows are left at zero.
Eigen::MatrixXd loss_grad_wrt_fit(const Eigen::MatrixXd& R, const DiscreteNorm& norm) {
  const int m = static_cast<int>(R.rows());
  const int K = static_cast<int>(R.cols());
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(m, K);
  std::vector<double> row(K);
  for (int i = 0; i < m; ++i) {
    for (int k = 0; k < K; ++k) row[k] = R(i, k);
    const double ny = norm(row);
    if (ny <= 1e-300) continue;
    const double n2 = ny * ny;  // (sum w r^4)^(1/2)
    for (int k = 0; k < K; ++k) {
      const double r = R(i, k);
      G(i, k) = -2.0 * norm.weights[k] * r * r * r / (n2 * m);
    }
  }
  return G;
}

}  // namespace

DesignMatrix assemble_design(const IndexSet& Lambda, const Eigen::MatrixXd& X) {
  const int m = static_cast<int>(X.rows());
  const int N = static_cast<int>(Lambda.size());
  DesignMatrix d;
  d.columns = Lambda;
  d.m = m;
  d.A.resize(m, N);
  const double scale = 1.0 / std::sqrt(static_cast<double>(m));
  std::vector<double> x(X.cols());
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < X.cols(); ++j) x[j] = X(i, j);
    for (int c = 0; c < N; ++c) d.A(i, c) = eval_Psi(Lambda[c], x) * scale;
  }
  return d;
}

double empirical_fit_loss(const DesignMatrix& design, const Eigen::MatrixXd& Y,
                          const Eigen::MatrixXd& C, const DiscreteNorm& norm) {
  const double sm = std::sqrt(static_cast<double>(design.m));
  Eigen::MatrixXd R = Y - sm * (design.A * C);
  const double rms = residual_rms_of(R, norm);
  return rms * rms;
}

PolyFitResult least_squares_fit(const DesignMatrix& design, const Eigen::MatrixXd& Y,
                                const DiscreteNorm& norm) {
  if (Y.rows() != design.m) throw std::invalid_argument("least_squares_fit: row mismatch");
  const double sm = std::sqrt(static_cast<double>(design.m));
  PolyFitResult out;
  out.selected_set = design.columns;

  bool deficient = false;
  Eigen::MatrixXd C = solve_euclidean(sm * design.A, Y, &deficient);
  out.rank_deficient = deficient;
  out.start_loss = empirical_fit_loss(design, Y, C, norm);
  out.final_loss = out.start_loss;

  if (norm.kind != NormKind::WeightedEuclidean) {
    if (norm.kind == NormKind::Sup)
      throw std::invalid_argument("least_squares_fit: sup norm training not supported");
    // descent with backtracking from the Euclidean solution
    double loss = out.start_loss;
    double step = 1.0;
    for (int it = 0; it < 10000; ++it) {
      Eigen::MatrixXd R = Y - sm * (design.A * C);
      Eigen::MatrixXd G = sm * design.A.transpose() * loss_grad_wrt_fit(R, norm);
      const double gnorm2 = G.squaredNorm();
      if (gnorm2 <= 1e-30) { out.iterations = it; break; }
      double next_loss = loss;
      Eigen::MatrixXd Cnext = C;
      // backtracking line search (Armijo)
      bool accepted = false;
      for (int bt = 0; bt < 60; ++bt) {
        Cnext = C - step * G;
        next_loss = empirical_fit_loss(design, Y, Cnext, norm);
        if (next_loss <= loss - 1e-4 * step * gnorm2) {
          accepted = true;
          break;
        }
        step *= 0.5;
      }
      if (!accepted) { out.iterations = it; break; }
      C = Cnext;
      const double rel = std::abs(loss - next_loss) / std::max(loss, 1e-300);
      loss = next_loss;
      out.iterations = it + 1;
      if (rel <= 1e-10) break;
      step *= 2.0;  // allow growth after success
    }
    out.final_loss = loss;
  }

  out.expansion = expansion_from(design.columns, C);
  Eigen::MatrixXd R = Y - sm * (design.A * C);
  out.residual_rms = residual_rms_of(R, norm);
  return out;
}

PolyFitResult greedy_sparse_fit(const DesignMatrix& design, const Eigen::MatrixXd& Y, double k,
                                const WeightSystem& w, const DiscreteNorm& norm) {
  const std::size_t N = design.columns.size();
  std::vector<double> v2(N), v(N);
  for (std::size_t j = 0; j < N; ++j) {
    v[j] = v_weight(design.columns[j], w);
    v2[j] = v[j] * v[j];
  }
  if (!design.columns.empty() && k < 1.0)
    throw std::invalid_argument("greedy_sparse_fit: budget below the constant term");

  std::vector<bool> in_set(N, false);
  double used = 0.0;
  const bool exact = w.integral_xi();
  Eigen::MatrixXd R = Y;
  PolyFitResult fit;
  const double y_scale = residual_rms_of(Y, norm);

  while (true) {
    // best-scoring feasible column
    int best = -1;
    double best_score = 0.0;
    for (std::size_t j = 0; j < N; ++j) {
      if (in_set[j]) continue;
      const double fits = exact ? (used + v2[j] <= k) : (used + v2[j] <= k * (1.0 + 1e-12));
      if (!fits) continue;
      const double corr = (design.A.col(j).transpose() * R).norm() / v[j];
      if (corr > best_score) {
        best_score = corr;
        best = static_cast<int>(j);
      }
    }
    if (best < 0 || best_score <= 1e-14 * std::max(y_scale, 1.0)) break;
    in_set[best] = true;
    used += v2[best];

    std::vector<MultiIndex> chosen;
    for (std::size_t j = 0; j < N; ++j)
      if (in_set[j]) chosen.push_back(design.columns[j]);
    IndexSet S(chosen, design.columns.dim_bound());
    // refit on the selected set
    DesignMatrix sub;
    sub.columns = S;
    sub.m = design.m;
    sub.A.resize(design.m, S.size());
    for (std::size_t j = 0, c = 0; j < N; ++j)
      if (in_set[j]) sub.A.col(c++) = design.A.col(j);
    fit = least_squares_fit(sub, Y, norm);
    const double sm = std::sqrt(static_cast<double>(design.m));
    Eigen::MatrixXd C(S.size(), Y.cols());
    for (std::size_t i = 0; i < S.size(); ++i)
      for (int kk = 0; kk < Y.cols(); ++kk) C(i, kk) = fit.expansion.coefficients[i][kk];
    R = Y - sm * (sub.A * C);
    if (fit.residual_rms <= 1e-14 * std::max(y_scale, 1.0)) break;
  }
  if (fit.selected_set.empty() && fit.expansion.support.empty()) {
    // nothing selected: the zero fit
    fit.expansion.support = IndexSet({}, design.columns.dim_bound());
    fit.expansion.output_dim = static_cast<int>(Y.cols());
    fit.residual_rms = residual_rms_of(Y, norm);
    fit.selected_set = fit.expansion.support;
  }
  fit.selected_set = fit.expansion.support;
  return fit;
}

AlphaProbe alpha_probe(const IndexSet& Lambda, double k, const WeightSystem& w,
                       const Eigen::MatrixXd& X, int trials, std::uint64_t seed) {
  DesignMatrix design = assemble_design(Lambda, X);
  AlphaProbe out;
  out.trials = trials;
  double min_ratio = std::numeric_limits<double>::infinity();
  for (int t = 0; t < trials; ++t) {
    auto eng = keyed_engine(seed, t);
    // random budget-feasible support via randomized greedy
    std::vector<std::size_t> order(Lambda.size());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), eng);
    std::vector<std::size_t> chosen;
    double used = 0.0;
    for (std::size_t j : order) {
      const double vj = v_weight(Lambda[j], w);
      if (used + vj * vj <= k) {
        used += vj * vj;
        chosen.push_back(j);
      }
    }
    if (chosen.empty()) continue;
    Eigen::VectorXd c = Eigen::VectorXd::Zero(Lambda.size());
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (std::size_t j : chosen) c(j) = gauss(eng);
    const double cn = c.norm();
    if (cn == 0.0) continue;
    c /= cn;  // Parseval: |||p|||_{L2} = ||c||_2 = 1
    const double disc = (design.A * c).norm();
    min_ratio = std::min(min_ratio, disc);
  }
  out.alpha = std::isfinite(min_ratio) ? min_ratio : 0.0;
  return out;
}

void write_polyfit_result(std::ostream& expansion_csv, std::ostream& sidecar,
                          const PolyFitResult& fit, const WeightSystem& w) {
  write_expansion_csv(expansion_csv, fit.expansion);
  sidecar << "residual_rms = " << format_full(fit.residual_rms) << '\n';
  sidecar << "rank_deficient = " << (fit.rank_deficient ? 1 : 0) << '\n';
  sidecar << "budget_u = "
          << format_full(weighted_cardinality(fit.selected_set, WeightKind::U, w)) << '\n';
  sidecar << "budget_v = "
          << format_full(weighted_cardinality(fit.selected_set, WeightKind::V, w)) << '\n';
  if (fit.alpha_estimate)
    sidecar << "alpha_estimate = " << format_full(*fit.alpha_estimate) << '\n';
  sidecar << "selected_set =\n";
  write_index_set(sidecar, fit.selected_set);
}

RateCurve predicted_rates(const std::vector<double>& b, double p,
                          const std::vector<int>& m_values, bool hilbert) {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("predicted_rates: p in (0,1)");
  (void)b;  // shape-only curves: C(b,p,xi) = 1
  const double theta = hilbert ? 0.0 : 0.5;
  RateCurve curve;
  curve.m = m_values;
  for (int m : m_values) {
    const double lg = std::log(static_cast<double>(m));
    const double L = lg * lg * lg * lg + 1.0;
    const double base = m / L;
    curve.q2.push_back(std::pow(base, theta + 1.0 - 0.5 - 1.0 / p));
    curve.qinf.push_back(std::pow(base, theta + 1.0 - 0.0 - 1.0 / p));
  }
  return curve;
}

}  // namespace holop
