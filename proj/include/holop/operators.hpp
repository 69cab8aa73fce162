#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "holop/legendre.hpp"
#include "holop/quadrature.hpp"

namespace holop {

// Parametric diffusion coefficient families on z in [0,1], x in [-1,1]^d.
struct CoefficientField {
  enum class Kind { AffineA1, LogA2, CustomAffine };
  Kind kind = Kind::AffineA1;
  int d = 4;
  double a0 = 2.62;               // custom-affine offset
  std::vector<double> custom_c;   // custom-affine coefficients of sin(pi z j)

  static CoefficientField affine_a1(int d);
  static CoefficientField log_a2(int d);
  static CoefficientField custom_affine(double a0, std::vector<double> c);

  // positive lower bound over all admissible (z, x); affine families only
  double r_min() const;
  // declared holomorphy sequence b (length d)
  std::vector<double> holomorphy_b() const;
  std::string kind_name() const;
};

double eval_coefficient(const CoefficientField& field, double z, std::span<const double> x);

// Two-point boundary value problem -(a u')' = f on (0,1), u(0) = u(1) = 0,
// solved by the flux representation u(z) = int_0^z (C - Fhat)/a with
// composite Gauss quadrature (>= 4 points per cell of the K-grid). Returns
// nodal values on the uniform K-grid.
std::vector<double> solve_diffusion_1d(const CoefficientField& field, std::span<const double> x,
                                       const std::function<double(double)>& f_rhs, int K);

// Ground truth map x in [-1,1]^d -> y in R^K with declared holomorphy data.
struct OperatorOracle {
  int input_dim = 0;
  int output_dim = 0;
  std::vector<double> holomorphy_b;
  DiscreteNorm output_norm;
  std::function<std::vector<double>(std::span<const double>)> eval;
  std::string family;
  double noise_default = 0.0;
  double source = 0.0;
};

OperatorOracle diffusion_oracle(const CoefficientField& field, double source_const, int K,
                                NormKind norm_kind = NormKind::WeightedEuclidean);

// Affine family sqrt(3) * c_scale * (sum_i c_i x_i) * y. Requires |c| <= b.
OperatorOracle synthetic_affine_family(std::vector<double> b, std::vector<double> c,
                                       std::vector<double> y,
                                       NormKind norm_kind = NormKind::WeightedEuclidean,
                                       double c_scale = 1.0);

// Truncation encoder on supp(mu) and piecewise-linear nodal decoder. keep_*
// below the full dimension model lossy pairs for error-term probes.
struct EncoderDecoder {
  int d_X = 0;
  int d_Y = 0;
  int input_keep = 0;   // coords beyond this are zeroed by D_X . E_X
  int output_keep = 0;  // nodal values beyond this are zeroed by D_Y . E_Y
  std::vector<double> mass;

  static EncoderDecoder identity(int d_X, int d_Y);
  std::vector<double> project_input(std::span<const double> x) const;
  std::vector<double> project_output(std::span<const double> y) const;
};

struct TrainingSet {
  Eigen::MatrixXd X;  // m x d
  Eigen::MatrixXd Y;  // m x K
  double noise_level = 0.0;
  std::uint64_t seed = 0;
};

// x_i uniform iid on [-1,1]^d from a counter-based generator keyed by
// (seed, i); Y_i = F(x_i) + E_i with E_i uniform on the Y-ball of radius
// noise_level.
TrainingSet generate_training_set(const OperatorOracle& oracle, int m, double noise_level,
                                  std::uint64_t seed);

struct EncDecErrors {
  double e_x2 = 0.0;
  double e_y2 = 0.0;
};

// Quadrature estimates of the ||I - D.E|| factors; exactly 0 for the
// truncation/nodal identity pair.
EncDecErrors encoder_decoder_error_terms(const OperatorOracle& oracle,
                                         const EncoderDecoder& ed, const SparseGridRule& rule);

// CSV: x columns then y columns.
void write_training_set_csv(std::ostream& os, const TrainingSet& ts);
// Key-value oracle spec (keys: family, d, K, noise, norm, source).
void write_oracle_config(std::ostream& os, const OperatorOracle& oracle);

}  // namespace holop
