#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "holop/multiindex.hpp"

namespace holop {

struct SparseGridRule;  // quadrature.hpp

// Classical Legendre polynomial P_n on [-1,1], normalization P_n(1) = 1.
double eval_P(int n, double x);
double eval_P_derivative(int n, double x);

// Orthonormal (uniform probability measure) version psi_n = sqrt(2n+1) P_n.
double eval_psi(int n, double x);

// Tensor product Psi_nu(x) = prod over supp(nu) of psi_{nu_i}(x_i).
double eval_Psi(const MultiIndex& nu, std::span<const double> x);

struct LegendreRoots {
  std::vector<double> roots;  // strictly increasing, in (-1,1)
  double leading_coeff;       // leading coefficient of P_n
};

// Roots of P_n by Newton iteration from Chebyshev initial guesses.
LegendreRoots legendre_roots(int n);

// Finite Legendre expansion with coefficients in R^K.
struct VectorExpansion {
  IndexSet support;
  std::vector<std::vector<double>> coefficients;  // one length-K vector per index
  int output_dim = 0;

  std::vector<double> eval(std::span<const double> x) const;
};

enum class NormKind { WeightedEuclidean, WeightedL4, Sup };

// Discretized output-space norm. Weights are quadrature mass on the output
// grid and sum to the measure of the physical domain.
struct DiscreteNorm {
  NormKind kind = NormKind::WeightedEuclidean;
  std::vector<double> weights;

  double operator()(std::span<const double> v) const;
};

// Trapezoid mass on the uniform K-grid over [0,1].
DiscreteNorm nodal_norm(int K, NormKind kind = NormKind::WeightedEuclidean);

using VectorField = std::function<std::vector<double>(std::span<const double>)>;

// (sum_i w_i ||F(x_i)||_Y^2)^(1/2). A negative quadrature estimate (possible
// with signed Smolyak weights) is clamped at 0 and flagged.
double bochner_l2_norm(const VectorField& F, const SparseGridRule& rule,
                       const DiscreteNorm& norm, bool* clamped = nullptr);

// Pettis L2 norm for the mass-weighted Euclidean discretization: square root
// of the top eigenvalue of the second-moment matrix, by power iteration to
// relative tolerance 1e-10 with a fixed seed vector. For Sup-kind norms the
// dual ball is the coordinate functionals: max over coordinates of the
// coordinate-wise L2 norms.
double pettis_l2_norm(const std::vector<std::vector<double>>& samples,
                      const SparseGridRule& rule, const DiscreteNorm& norm);
double pettis_l2_norm(const VectorField& F, const SparseGridRule& rule,
                      const DiscreteNorm& norm);

// Root-mean-square of Y-norms over sample values.
double discrete_seminorm(const std::vector<std::vector<double>>& values,
                         const DiscreteNorm& norm);

// Sampled sup-norm surrogate: max Y-norm over n_samples low-discrepancy points
// plus the 2^min(d,10) sign-corner points.
double sup_norm_estimate(const VectorField& F, int d, int n_samples, std::uint64_t seed,
                         const DiscreteNorm& norm);

// CSV: header row of "dim:exp" labels, K data rows of coefficients.
void write_expansion_csv(std::ostream& os, const VectorExpansion& p);
VectorExpansion read_expansion_csv(std::istream& is, int dim_bound = 0);

}  // namespace holop
