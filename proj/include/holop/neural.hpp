#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <vector>

#include "holop/multiindex.hpp"
#include "holop/operators.hpp"
#include "holop/polyfit.hpp"

namespace holop {

enum class Activation { Tanh, ReLU, ELU };

const char* activation_name(Activation a);
Activation activation_from_name(const std::string& name);

// Feedforward network with explicit parameter storage. layers[l] maps
// R^{n_l} -> R^{n_{l+1}}; the activation is applied after every layer except
// the last. depth() counts hidden (activated) layers.
struct MLP {
  Activation activation = Activation::Tanh;
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;

  int input_dim() const { return weights.empty() ? 0 : static_cast<int>(weights.front().cols()); }
  int output_dim() const { return weights.empty() ? 0 : static_cast<int>(weights.back().rows()); }
  int depth() const { return static_cast<int>(weights.size()) - 1; }
  int width() const;
  std::size_t parameter_count() const;
  Eigen::VectorXd parameters_flat() const;

  Eigen::VectorXd forward(const Eigen::VectorXd& x) const;
  // rows = samples
  Eigen::MatrixXd forward_batch(const Eigen::MatrixXd& X) const;
};

// HeUniform fan-in initialization, seeded.
MLP make_fully_connected(int d_in, int d_out, int depth, int width, Activation act,
                         std::uint64_t seed);

struct TrainConfig {
  int epochs = 60000;
  double lr_init = 1e-3;
  double lr_final = 1e-4;  // exponential interpolation per epoch
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double tol = 5e-7;               // stop when the loss falls below this
  double checkpoint_ratio = 0.125; // save when current/checkpoint loss < ratio
  std::uint64_t seed = 0;
};

struct TrainResult {
  MLP net;
  std::vector<double> loss_trace;
  double final_loss = 0.0;
  bool restored_checkpoint = false;
  int epochs_run = 0;
};

// Empirical loss 1/m sum ||Y_i - D_Y(N(E_X(x_i)))||_Y^2 and its exact
// reverse-mode gradient. Sup-norm losses are rejected.
double empirical_loss(const MLP& net, const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y,
                      const DiscreteNorm& norm);
struct LossGradient {
  double loss = 0.0;
  std::vector<Eigen::MatrixXd> dW;
  std::vector<Eigen::VectorXd> db;
};
LossGradient loss_and_gradient(const MLP& net, const Eigen::MatrixXd& X,
                               const Eigen::MatrixXd& Y, const DiscreteNorm& norm);

// Full-batch Adam with the early-stopping checkpoint protocol: save when the
// current/checkpoint loss ratio drops below checkpoint_ratio or on a new best
// loss; restore the checkpoint at termination if it beats the final loss.
// Aborts with a diagnostic on non-finite loss.
TrainResult train(MLP net, const TrainingSet& data, const EncoderDecoder& ed,
                  const DiscreteNorm& norm, const TrainConfig& cfg);

struct EmulationError : std::runtime_error {
  double smallest_achieved;
  EmulationError(const std::string& what, double achieved)
      : std::runtime_error(what), smallest_achieved(achieved) {}
};

// x^2 ~ [tanh(b+hx) + tanh(b-hx) - 2 tanh(b)] / (h^2 tanh''(b)), b = 0.5,
// with h calibrated so the measured sup error on [-M, M] (4096-point grid)
// is <= delta. Throws EmulationError when delta is unreachable in double
// precision.
MLP build_square_emulator(double delta, double range_bound, double* achieved = nullptr);

// Binary tree of pairwise products via the polarization identity; odd
// leftovers pass through a calibrated near-identity tanh layer.
MLP build_product_tree(int n_factors, double delta, double per_factor_range = 1.0);

struct EmulatorReport {
  MLP net;
  MultiIndex nu;
  double target_delta = 0.0;
  double measured_error = 0.0;  // sup error over the certification grid
  int width = 0;
  int depth = 0;
};

// Tanh emulator of the tensor Legendre polynomial Psi_nu on [-1,1]^d,
// certified on a 1e5-point low-discrepancy grid.
EmulatorReport build_legendre_emulator(const MultiIndex& nu, double delta, int d);

struct FamilyNetwork {
  MLP net;
  std::vector<MLP> channels;  // depth-padded per-index emulators + zero nets
  IndexSet support;
  double width_bound = 0.0;   // k^(1 + 1/(5+xi))
};

// Parallel stack of emulators padded with zero networks, final linear layer C
// (d_Y x floor(k)). Throws on budget violation |S|_v > k.
FamilyNetwork assemble_family_network(const IndexSet& S, const Eigen::MatrixXd& C, double k,
                                      const WeightSystem& w, double delta, int d);

struct MinimizerResult {
  MLP net;
  Eigen::MatrixXd padded_X;       // m x r training inputs with padded coords
  Eigen::VectorXd z;              // null-space component actually used
  double sigma_min_B = 0.0;
  bool b_rank_deficient = false;
  double max_residual = 0.0;      // max_i ||net(x_i) - Y_i||_Y
  double train_loss = 0.0;        // 1/m sum ||..||^2
  double emulator_delta = 0.0;    // certified first-order emulator error
  int r = 0;
};

// Zero-loss interpolating construction: emulate the fitted expansion, stack r
// first-order emulators, solve the minimum-norm correction through B and add
// a seeded null-space component scaled by z_scale. Requires r > m; the
// encoder output is padded with r - d fresh uniform coordinates.
MinimizerResult build_interpolating_minimizer(const PolyFitResult& fit, const TrainingSet& data,
                                              const DiscreteNorm& norm, int r, double z_scale,
                                              std::uint64_t seed);

// Flat text format: header (dims, activation), then row-major weight/bias
// blocks with 17 significant digits.
void save_mlp(std::ostream& os, const MLP& net);
MLP load_mlp(std::istream& is);

}  // namespace holop
