#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <vector>

#include "holop/legendre.hpp"
#include "holop/multiindex.hpp"

namespace holop {

// Rows: Psi_{nu_j}(x_i)/sqrt(m). Entry magnitude is bounded by u_nu/sqrt(m).
struct DesignMatrix {
  Eigen::MatrixXd A;
  IndexSet columns;
  int m = 0;
};

DesignMatrix assemble_design(const IndexSet& Lambda, const Eigen::MatrixXd& X);

struct PolyFitResult {
  VectorExpansion expansion;
  double residual_rms = 0.0;  // discrete seminorm of data minus fit
  IndexSet selected_set;
  bool rank_deficient = false;
  std::optional<double> alpha_estimate;
  int iterations = 0;        // iterative (non-Euclidean) mode
  double start_loss = 0.0;   // Euclidean LS loss at the iterative start
  double final_loss = 0.0;
};

// Vector-valued least squares over the full column set via rank-revealing
// QR with column pivoting. Rank deficiency is flagged and resolved by the
// pivoted basic solution (exact interpolation of consistent systems).
// Non-Euclidean norms are handled by first-order descent with backtracking
// from the Euclidean solution (relative loss change <= 1e-10 or 1e4 steps).
PolyFitResult least_squares_fit(const DesignMatrix& design, const Eigen::MatrixXd& Y,
                                const DiscreteNorm& norm);

// Orthogonal-matching-pursuit style selection under the weighted budget
// |S|_v <= k: repeatedly add the index maximizing residual correlation / v,
// refitting by least squares each step.
PolyFitResult greedy_sparse_fit(const DesignMatrix& design, const Eigen::MatrixXd& Y, double k,
                                const WeightSystem& w, const DiscreteNorm& norm);

struct AlphaProbe {
  double alpha = 0.0;
  int trials = 0;
};

// Empirical lower estimate of the discrete metric constant: min over random
// budget-feasible coefficient draws of ||p||_disc / |||p|||_{L2}.
AlphaProbe alpha_probe(const IndexSet& Lambda, double k, const WeightSystem& w,
                       const Eigen::MatrixXd& X, int trials, std::uint64_t seed);

struct RateCurve {
  std::vector<int> m;
  std::vector<double> q2;    // L2-norm rate
  std::vector<double> qinf;  // sup-norm rate
};

// Shape-only approximation-rate curves (m/L)^(theta + 1 - 1/q - 1/p) with
// L = log^4(m) + 1 and all constants set to 1.
RateCurve predicted_rates(const std::vector<double>& b, double p,
                          const std::vector<int>& m_values, bool hilbert);

// Empirical training loss of a coefficient matrix C under the given norm;
// exposed for tests and the iterative path.
double empirical_fit_loss(const DesignMatrix& design, const Eigen::MatrixXd& Y,
                          const Eigen::MatrixXd& C, const DiscreteNorm& norm);

// Expansion CSV plus a key-value sidecar (residual, selected set, budgets).
void write_polyfit_result(std::ostream& expansion_csv, std::ostream& sidecar,
                          const PolyFitResult& fit, const WeightSystem& w);

}  // namespace holop
