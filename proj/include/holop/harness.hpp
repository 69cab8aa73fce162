#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "holop/neural.hpp"
#include "holop/operators.hpp"
#include "holop/polyfit.hpp"
#include "holop/quadrature.hpp"

namespace holop {

struct ExperimentSpec {
  // oracle
  std::string family = "affine-a1";  // affine-a1 | log-a2 | synthetic
  int d = 4;
  int K = 257;
  double noise = 0.0;
  NormKind norm = NormKind::WeightedEuclidean;
  double source = 10.0;
  // method
  std::string method = "polyfit-ls";  // polyfit-ls | polyfit-greedy | mlp
  int hc_n = 8;                       // hyperbolic-cross order for polynomial methods
  double budget_k = 0.0;              // greedy v-budget (0 = unbounded)
  int depth = 4;
  int width = 40;
  Activation activation = Activation::Tanh;
  // protocol
  std::vector<int> m_values = {10, 20, 30, 40, 50, 60, 70, 80, 90, 100, 200, 300, 400, 500};
  int trials = 12;
  int test_level = -1;  // -1: smallest level with >= 20x max(m) nodes
  std::uint64_t seed_base = 0;
  int epochs = 60000;
  double slope_window_lo = 50.0;
  double slope_window_hi = 500.0;
  bool fast = false;  // reduces epochs to 10000 and trials to 3
  int jobs = 1;

  static ExperimentSpec from_config(std::istream& is);
  std::string canonical_text() const;
  std::uint64_t manifest_hash() const;
  ExperimentSpec with_fast_profile() const;
};

OperatorOracle make_oracle(const ExperimentSpec& spec);

struct ConvergenceTable {
  std::vector<int> m;
  std::vector<double> geomean;
  std::vector<double> band_lo, band_hi;  // +- one geometric std
  std::vector<std::vector<double>> per_trial;
  std::vector<int> excluded;  // failed trials per m
  double slope = 0.0;
  bool flagged = false;       // > 20% exclusions somewhere, or clamped zeros
  bool clamped_zero = false;
  std::uint64_t manifest = 0;
};

// (sum_i w_i ||F - Fhat||^2)^(1/2) / (sum_i w_i ||F||^2)^(1/2) on the rule.
double relative_test_error(const VectorField& Fhat, const OperatorOracle& oracle,
                           const SparseGridRule& rule, const DiscreteNorm& norm);

ConvergenceTable run_convergence(const ExperimentSpec& spec);

// least-squares slope of log(err) against log(m) over [m_lo, m_hi]
double fit_loglog_slope(const std::vector<int>& m, const std::vector<double>& err, double m_lo,
                        double m_hi);

std::string table_to_csv(const ConvergenceTable& table);
std::string trials_to_csv(const ConvergenceTable& table);
// appends the predicted-rate curve anchored at the smallest m
std::string theory_overlay(const ConvergenceTable& table, const std::vector<double>& b,
                           double p, bool hilbert);

struct MinimizerDemo {
  double poly_test_error = 0.0;
  double sigma_min = 0.0;
  double emulator_delta = 0.0;
  double mc_denominator = 0.0;  // (sum ||F||^2)^(1/2) over the test draw
  std::vector<double> z_scales;
  std::vector<double> residuals;     // max_i ||net(x_i) - Y_i||_Y
  std::vector<double> train_losses;
  std::vector<double> test_errors;   // Monte Carlo relative errors
  std::vector<double> param_norms;
  std::vector<double> pairwise_param_dist;  // ||theta_i - theta_j|| over pairs
};

// Zero-loss construction demo: fit a polynomial on m noiseless samples, build
// the interpolating networks for each z_scale and compare against the fit on
// a shared Monte Carlo test set.
MinimizerDemo run_minimizer_demo(const ExperimentSpec& spec, int m, int r,
                                 const std::vector<double>& z_scales, int n_test,
                                 std::uint64_t seed);

}  // namespace holop
