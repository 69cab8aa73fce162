#include "holop/neural.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "holop/util.hpp"

namespace holop {

const char* activation_name(Activation a) {
  switch (a) {
    case Activation::Tanh: return "tanh";
    case Activation::ReLU: return "relu";
    case Activation::ELU: return "elu";
  }
  return "?";
}

Activation activation_from_name(const std::string& name) {
  if (name == "tanh") return Activation::Tanh;
  if (name == "relu") return Activation::ReLU;
  if (name == "elu") return Activation::ELU;
  throw std::invalid_argument("unknown activation: " + name);
}

namespace {

inline double act(Activation a, double x) {
  switch (a) {
    case Activation::Tanh: return std::tanh(x);
    case Activation::ReLU: return x > 0.0 ? x : 0.0;
    case Activation::ELU: return x > 0.0 ? x : std::expm1(x);
  }
  return 0.0;
}

inline double act_grad(Activation a, double x) {
  switch (a) {
    case Activation::Tanh: {
      const double t = std::tanh(x);
      return 1.0 - t * t;
    }
    case Activation::ReLU: return x > 0.0 ? 1.0 : 0.0;
    case Activation::ELU: return x > 0.0 ? 1.0 : std::exp(x);
  }
  return 0.0;
}

}  // namespace

int MLP::width() const {
  int w = 0;
  for (std::size_t l = 0; l + 1 < weights.size(); ++l)
    w = std::max(w, static_cast<int>(weights[l].rows()));
  return w;
}

std::size_t MLP::parameter_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < weights.size(); ++l)
    n += weights[l].size() + biases[l].size();
  return n;
}

Eigen::VectorXd MLP::parameters_flat() const {
  Eigen::VectorXd out(parameter_count());
  Eigen::Index pos = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    for (Eigen::Index i = 0; i < weights[l].rows(); ++i)
      for (Eigen::Index j = 0; j < weights[l].cols(); ++j) out(pos++) = weights[l](i, j);
    for (Eigen::Index i = 0; i < biases[l].size(); ++i) out(pos++) = biases[l](i);
  }
  return out;
}

Eigen::VectorXd MLP::forward(const Eigen::VectorXd& x) const {
  if (x.size() != input_dim()) throw std::invalid_argument("MLP::forward: dimension mismatch");
  Eigen::VectorXd z = x;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    Eigen::VectorXd h = weights[l] * z + biases[l];
    if (l + 1 < weights.size())
      for (Eigen::Index i = 0; i < h.size(); ++i) h(i) = act(activation, h(i));
    z = std::move(h);
  }
  return z;
}

Eigen::MatrixXd MLP::forward_batch(const Eigen::MatrixXd& X) const {
  if (X.cols() != input_dim())
    throw std::invalid_argument("MLP::forward_batch: dimension mismatch");
  Eigen::MatrixXd z = X;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    Eigen::MatrixXd h = (z * weights[l].transpose()).rowwise() + biases[l].transpose();
    if (l + 1 < weights.size())
      for (Eigen::Index i = 0; i < h.rows(); ++i)
        for (Eigen::Index j = 0; j < h.cols(); ++j) h(i, j) = act(activation, h(i, j));
    z = std::move(h);
  }
  return z;
}

MLP make_fully_connected(int d_in, int d_out, int depth, int width, Activation a,
                         std::uint64_t seed) {
  if (depth < 0 || width < 1 || d_in < 1 || d_out < 1)
    throw std::invalid_argument("make_fully_connected: bad architecture");
  MLP net;
  net.activation = a;
  std::vector<int> dims;
  dims.push_back(d_in);
  for (int l = 0; l < depth; ++l) dims.push_back(width);
  dims.push_back(d_out);
  auto eng = keyed_engine(seed, 0x48655555ULL);
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const double limit = std::sqrt(6.0 / dims[l]);
    Eigen::MatrixXd W(dims[l + 1], dims[l]);
    std::uniform_real_distribution<double> u(-limit, limit);
    for (Eigen::Index i = 0; i < W.rows(); ++i)
      for (Eigen::Index j = 0; j < W.cols(); ++j) W(i, j) = u(eng);
    net.weights.push_back(std::move(W));
    net.biases.push_back(Eigen::VectorXd::Zero(dims[l + 1]));
  }
  return net;
}

// ---------------------------------------------------------------------------
// Loss and exact reverse-mode gradient
// ---------------------------------------------------------------------------

namespace {

// Residual derivative dLoss/dOut for the supported norms. Masked output
// columns (>= keep) contribute nothing.
Eigen::MatrixXd dloss_dout(const Eigen::MatrixXd& R, const DiscreteNorm& norm, int keep,
                           double* loss_out) {
  const int m = static_cast<int>(R.rows());
  const int K = static_cast<int>(R.cols());
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(m, K);
  double loss = 0.0;
  if (norm.kind == NormKind::WeightedEuclidean) {
    for (int i = 0; i < m; ++i)
      for (int k = 0; k < K; ++k) {
        const double wr = norm.weights[k] * R(i, k);
        loss += wr * R(i, k);
        if (k < keep) G(i, k) = -2.0 * wr / m;
      }
    loss /= m;
  } else if (norm.kind == NormKind::WeightedL4) {
    for (int i = 0; i < m; ++i) {
      double s = 0.0;
      for (int k = 0; k < K; ++k) {
        const double r2 = R(i, k) * R(i, k);
        s += norm.weights[k] * r2 * r2;
      }
      const double n2 = std::sqrt(s);
      loss += n2;
      if (n2 > 1e-300)
        for (int k = 0; k < keep; ++k) {
          const double r = R(i, k);
          G(i, k) = -2.0 * norm.weights[k] * r * r * r / (n2 * m);
        }
    }
    loss /= m;
  } else {
    throw std::invalid_argument("training loss: sup norm not supported");
  }
  if (loss_out) *loss_out = loss;
  return G;
}

}  // namespace

double empirical_loss(const MLP& net, const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y,
                      const DiscreteNorm& norm) {
  Eigen::MatrixXd out = net.forward_batch(X);
  Eigen::MatrixXd R = Y - out;
  double loss = 0.0;
  dloss_dout(R, norm, 0, &loss);
  return loss;
}

LossGradient loss_and_gradient(const MLP& net, const Eigen::MatrixXd& X,
                               const Eigen::MatrixXd& Y, const DiscreteNorm& norm) {
  const std::size_t L = net.weights.size();
  // forward with cached pre-activations
  std::vector<Eigen::MatrixXd> zs(L + 1), hs(L);
  zs[0] = X;
  for (std::size_t l = 0; l < L; ++l) {
    hs[l] = (zs[l] * net.weights[l].transpose()).rowwise() + net.biases[l].transpose();
    if (l + 1 < L) {
      Eigen::MatrixXd z = hs[l];
      for (Eigen::Index i = 0; i < z.rows(); ++i)
        for (Eigen::Index j = 0; j < z.cols(); ++j) z(i, j) = act(net.activation, z(i, j));
      zs[l + 1] = std::move(z);
    } else {
      zs[l + 1] = hs[l];
    }
  }
  LossGradient lg;
  Eigen::MatrixXd R = Y - zs[L];
  Eigen::MatrixXd G = dloss_dout(R, norm, static_cast<int>(Y.cols()), &lg.loss);
  // G is dLoss/dH_{L-1} (final layer has no activation)
  lg.dW.resize(L);
  lg.db.resize(L);
  for (std::size_t l = L; l-- > 0;) {
    lg.dW[l] = G.transpose() * zs[l];
    lg.db[l] = G.colwise().sum().transpose();
    if (l > 0) {
      Eigen::MatrixXd Gprev = G * net.weights[l];
      for (Eigen::Index i = 0; i < Gprev.rows(); ++i)
        for (Eigen::Index j = 0; j < Gprev.cols(); ++j)
          Gprev(i, j) *= act_grad(net.activation, hs[l - 1](i, j));
      G = std::move(Gprev);
    }
  }
  return lg;
}

TrainResult train(MLP net, const TrainingSet& data, const EncoderDecoder& ed,
                  const DiscreteNorm& norm, const TrainConfig& cfg) {
  Eigen::MatrixXd X = data.X;
  for (int j = ed.input_keep; j < X.cols(); ++j) X.col(j).setZero();
  const Eigen::MatrixXd& Y = data.Y;
  if (net.input_dim() != X.cols() || net.output_dim() != Y.cols())
    throw std::invalid_argument("train: network dimensions do not match the data");

  // Adam state
  const std::size_t L = net.weights.size();
  std::vector<Eigen::MatrixXd> mW(L), vW(L);
  std::vector<Eigen::VectorXd> mb(L), vb(L);
  for (std::size_t l = 0; l < L; ++l) {
    mW[l] = Eigen::MatrixXd::Zero(net.weights[l].rows(), net.weights[l].cols());
    vW[l] = mW[l];
    mb[l] = Eigen::VectorXd::Zero(net.biases[l].size());
    vb[l] = mb[l];
  }

  TrainResult result;
  result.loss_trace.reserve(cfg.epochs);
  MLP checkpoint = net;
  double checkpoint_loss = std::numeric_limits<double>::infinity();
  double best_loss = std::numeric_limits<double>::infinity();
  const double lr_ratio = cfg.lr_final / cfg.lr_init;

  int epoch = 0;
  double loss = 0.0;
  for (; epoch < cfg.epochs; ++epoch) {
    LossGradient lg = loss_and_gradient(net, X, Y, norm);
    loss = lg.loss;
    if (!std::isfinite(loss))
      throw std::runtime_error("train: non-finite loss at epoch " + std::to_string(epoch));
    result.loss_trace.push_back(loss);
    const bool new_best = loss < best_loss;
    if (new_best || loss < cfg.checkpoint_ratio * checkpoint_loss) {
      checkpoint = net;
      checkpoint_loss = loss;
      best_loss = std::min(best_loss, loss);
    }
    if (loss <= cfg.tol) break;

    const double t = cfg.epochs > 1 ? static_cast<double>(epoch) / (cfg.epochs - 1) : 0.0;
    const double lr = cfg.lr_init * std::pow(lr_ratio, t);
    const double bc1 = 1.0 - std::pow(cfg.beta1, epoch + 1);
    const double bc2 = 1.0 - std::pow(cfg.beta2, epoch + 1);
    for (std::size_t l = 0; l < L; ++l) {
      mW[l] = cfg.beta1 * mW[l] + (1.0 - cfg.beta1) * lg.dW[l];
      vW[l] = cfg.beta2 * vW[l] + (1.0 - cfg.beta2) * lg.dW[l].cwiseProduct(lg.dW[l]);
      mb[l] = cfg.beta1 * mb[l] + (1.0 - cfg.beta1) * lg.db[l];
      vb[l] = cfg.beta2 * vb[l] + (1.0 - cfg.beta2) * lg.db[l].cwiseProduct(lg.db[l]);
      net.weights[l] -= (lr / bc1) * mW[l].cwiseQuotient(
                                         (vW[l] / bc2).cwiseSqrt() +
                                         Eigen::MatrixXd::Constant(mW[l].rows(), mW[l].cols(),
                                                                   cfg.eps));
      net.biases[l] -= (lr / bc1) * mb[l].cwiseQuotient(
                                        (vb[l] / bc2).cwiseSqrt() +
                                        Eigen::VectorXd::Constant(mb[l].size(), cfg.eps));
    }
  }
  result.epochs_run = epoch;
  const double final_loss = empirical_loss(net, X, Y, norm);
  if (checkpoint_loss < final_loss) {
    result.net = std::move(checkpoint);
    result.final_loss = checkpoint_loss;
    result.restored_checkpoint = true;
  } else {
    result.net = std::move(net);
    result.final_loss = final_loss;
  }
  return result;
}

// ---------------------------------------------------------------------------
// Handcrafted tanh emulators
// ---------------------------------------------------------------------------

namespace {

constexpr double kSquareOffset = 0.5;

struct Fragment {
  std::vector<Eigen::MatrixXd> W;
  std::vector<Eigen::VectorXd> b;

  int in() const { return static_cast<int>(W.front().cols()); }
  int out() const { return static_cast<int>(W.back().rows()); }
  int hidden_layers() const { return static_cast<int>(W.size()) - 1; }
};

Fragment affine_fragment(Eigen::MatrixXd W, Eigen::VectorXd b) {
  Fragment f;
  f.W.push_back(std::move(W));
  f.b.push_back(std::move(b));
  return f;
}

// g after f (g . f), merging the boundary affine maps
Fragment compose(const Fragment& f, const Fragment& g) {
  Fragment out;
  out.W = f.W;
  out.b = f.b;
  Eigen::MatrixXd merged_W = g.W.front() * out.W.back();
  Eigen::VectorXd merged_b = g.W.front() * out.b.back() + g.b.front();
  out.W.back() = std::move(merged_W);
  out.b.back() = std::move(merged_b);
  for (std::size_t l = 1; l < g.W.size(); ++l) {
    out.W.push_back(g.W[l]);
    out.b.push_back(g.b[l]);
  }
  return out;
}

// block-diagonal stack over partitioned inputs; equal hidden depth required
Fragment parallel(const std::vector<Fragment>& frs) {
  Fragment out;
  const std::size_t layers = frs.front().W.size();
  for (const auto& f : frs)
    if (f.W.size() != layers)
      throw std::logic_error("parallel: fragments must have equal depth");
  for (std::size_t l = 0; l < layers; ++l) {
    Eigen::Index rows = 0, cols = 0;
    for (const auto& f : frs) {
      rows += f.W[l].rows();
      cols += f.W[l].cols();
    }
    Eigen::MatrixXd W = Eigen::MatrixXd::Zero(rows, cols);
    Eigen::VectorXd b(rows);
    Eigen::Index r0 = 0, c0 = 0;
    for (const auto& f : frs) {
      W.block(r0, c0, f.W[l].rows(), f.W[l].cols()) = f.W[l];
      b.segment(r0, f.b[l].size()) = f.b[l];
      r0 += f.W[l].rows();
      c0 += f.W[l].cols();
    }
    out.W.push_back(std::move(W));
    out.b.push_back(std::move(b));
  }
  return out;
}

// parallel channels reading the same input: first layers stacked vertically,
// the rest block-diagonal
Fragment parallel_shared_input(const std::vector<Fragment>& frs) {
  const std::size_t layers = frs.front().W.size();
  const Eigen::Index in_dim = frs.front().W.front().cols();
  for (const auto& f : frs) {
    if (f.W.size() != layers)
      throw std::logic_error("parallel_shared_input: fragments must have equal depth");
    if (f.W.front().cols() != in_dim)
      throw std::logic_error("parallel_shared_input: input dimension mismatch");
  }
  Fragment out;
  {
    Eigen::Index rows = 0;
    for (const auto& f : frs) rows += f.W.front().rows();
    Eigen::MatrixXd W = Eigen::MatrixXd::Zero(rows, in_dim);
    Eigen::VectorXd b(rows);
    Eigen::Index r0 = 0;
    for (const auto& f : frs) {
      W.middleRows(r0, f.W.front().rows()) = f.W.front();
      b.segment(r0, f.b.front().size()) = f.b.front();
      r0 += f.W.front().rows();
    }
    out.W.push_back(std::move(W));
    out.b.push_back(std::move(b));
  }
  for (std::size_t l = 1; l < layers; ++l) {
    Eigen::Index rows = 0, cols = 0;
    for (const auto& f : frs) {
      rows += f.W[l].rows();
      cols += f.W[l].cols();
    }
    Eigen::MatrixXd W = Eigen::MatrixXd::Zero(rows, cols);
    Eigen::VectorXd b(rows);
    Eigen::Index r0 = 0, c0 = 0;
    for (const auto& f : frs) {
      W.block(r0, c0, f.W[l].rows(), f.W[l].cols()) = f.W[l];
      b.segment(r0, f.b[l].size()) = f.b[l];
      r0 += f.W[l].rows();
      c0 += f.W[l].cols();
    }
    out.W.push_back(std::move(W));
    out.b.push_back(std::move(b));
  }
  return out;
}

MLP fragment_to_mlp(const Fragment& f) {
  MLP net;
  net.activation = Activation::Tanh;
  net.weights = f.W;
  net.biases = f.b;
  return net;
}

double square_emulator_value(double h, double x) {
  const double b = kSquareOffset;
  const double tb = std::tanh(b);
  const double d2 = -2.0 * tb * (1.0 - tb * tb);  // tanh''(b)
  return (std::tanh(b + h * x) + std::tanh(b - h * x) - 2.0 * tb) / (h * h * d2);
}

// measured sup error of the square emulator on a 4096-point grid of [-M, M]
double square_emulator_error(double h, double M) {
  double worst = 0.0;
  const int n = 4096;
  for (int i = 0; i < n; ++i) {
    const double x = -M + 2.0 * M * i / (n - 1);
    worst = std::max(worst, std::abs(square_emulator_value(h, x) - x * x));
  }
  return worst;
}

double identity_emulator_error(double h, double M) {
  double worst = 0.0;
  const int n = 4096;
  for (int i = 0; i < n; ++i) {
    const double x = -M + 2.0 * M * i / (n - 1);
    worst = std::max(worst, std::abs(std::tanh(h * x) / h - x));
  }
  return worst;
}

// dyadic scan for the step h; favors the largest h meeting half the target
// (analytic branch, stable across grids), falls back to the overall best.
template <typename ErrFn>
double calibrate_step(double delta, ErrFn err, double* achieved) {
  double best_h = 1.0, best_err = std::numeric_limits<double>::infinity();
  double relaxed_h = 0.0;
  for (int j = 0; j <= 46; ++j) {
    const double h = std::ldexp(1.0, -j);
    const double e = err(h);
    if (e < best_err) {
      best_err = e;
      best_h = h;
    }
    if (relaxed_h == 0.0 && e <= 0.5 * delta) relaxed_h = h;
  }
  if (achieved) *achieved = best_err;
  if (relaxed_h > 0.0) return relaxed_h;
  if (best_err <= delta) return best_h;
  throw EmulationError("emulator calibration: target unreachable in double precision",
                       best_err);
}

// width-2 tanh square emulator fragment (scalar in, scalar out)
Fragment square_fragment(double h) {
  const double b0 = kSquareOffset;
  const double tb = std::tanh(b0);
  const double a = 1.0 / (h * h * (-2.0 * tb * (1.0 - tb * tb)));
  Eigen::MatrixXd W0(2, 1);
  W0 << h, -h;
  Eigen::VectorXd b0v(2);
  b0v << b0, b0;
  Eigen::MatrixXd W1(1, 2);
  W1 << a, a;
  Eigen::VectorXd b1v(1);
  b1v << -2.0 * tb * a;
  Fragment f;
  f.W = {W0, W1};
  f.b = {b0v, b1v};
  return f;
}

// width-4 pairwise product via the polarization identity
Fragment product_fragment(double h) {
  const double b0 = kSquareOffset;
  const double tb = std::tanh(b0);
  const double a = 1.0 / (h * h * (-2.0 * tb * (1.0 - tb * tb)));
  Eigen::MatrixXd W0(4, 2);
  W0 << h, h, -h, -h, h, -h, -h, h;
  Eigen::VectorXd b0v = Eigen::VectorXd::Constant(4, b0);
  Eigen::MatrixXd W1(1, 4);
  W1 << a / 4.0, a / 4.0, -a / 4.0, -a / 4.0;
  Eigen::VectorXd b1v = Eigen::VectorXd::Zero(1);
  Fragment f;
  f.W = {W0, W1};
  f.b = {b0v, b1v};
  return f;
}

Fragment identity_fragment(double h) {
  Eigen::MatrixXd W0(1, 1);
  W0 << h;
  Eigen::MatrixXd W1(1, 1);
  W1 << 1.0 / h;
  Fragment f;
  f.W = {W0, W1};
  f.b = {Eigen::VectorXd::Zero(1), Eigen::VectorXd::Zero(1)};
  return f;
}

Fragment zero_fragment(int in_dim, int hidden_layers) {
  Fragment f;
  f.W.push_back(Eigen::MatrixXd::Zero(1, in_dim));
  f.b.push_back(Eigen::VectorXd::Zero(1));
  for (int l = 0; l < hidden_layers; ++l) {
    f.W.push_back(Eigen::MatrixXd::Zero(1, 1));
    f.b.push_back(Eigen::VectorXd::Zero(1));
  }
  return f;
}

// constant function (all weights zero, only the final bias nonzero)?
bool is_constant_fragment(const Fragment& f) {
  for (const auto& W : f.W)
    if (W.cwiseAbs().maxCoeff() != 0.0) return false;
  for (std::size_t l = 0; l + 1 < f.b.size(); ++l)
    if (f.b[l].cwiseAbs().maxCoeff() != 0.0) return false;
  return true;
}

// padding to a common hidden depth; constants pad exactly through tanh(0)=0,
// anything else through a calibrated near-identity
Fragment pad_to_depth(Fragment f, int hidden_layers, double value_range) {
  if (f.hidden_layers() >= hidden_layers) return f;
  if (is_constant_fragment(f)) {
    const Eigen::VectorXd value = f.b.back();
    Fragment out;
    out.W.push_back(Eigen::MatrixXd::Zero(1, f.in()));
    out.b.push_back(Eigen::VectorXd::Zero(1));
    for (int l = 1; l < hidden_layers; ++l) {
      out.W.push_back(Eigen::MatrixXd::Zero(1, 1));
      out.b.push_back(Eigen::VectorXd::Zero(1));
    }
    out.W.push_back(Eigen::MatrixXd::Zero(value.size(), 1));
    out.b.push_back(value);
    return out;
  }
  while (f.hidden_layers() < hidden_layers) {
    double achieved = 0.0;
    const double h = calibrate_step(
        1e-9 * std::max(1.0, value_range),
        [&](double hh) { return identity_emulator_error(hh, std::max(1.0, value_range) * 1.5); },
        &achieved);
    f = compose(f, identity_fragment(h));
  }
  return f;
}

// product tree over n inputs in [-1.25, 1.25]; the total emulation budget
// delta/2 is split equally over the tree's nodes (errors add along the tree)
Fragment product_tree_fragment(int n, double delta) {
  const double range = 1.25;
  Fragment tree = affine_fragment(Eigen::MatrixXd::Identity(n, n), Eigen::VectorXd::Zero(n));
  int count = n;
  // n = 1: single near-identity pass-through for network validity
  if (n == 1) {
    double achieved = 0.0;
    const double h = calibrate_step(
        delta, [&](double hh) { return identity_emulator_error(hh, range); }, &achieved);
    return compose(tree, identity_fragment(h));
  }
  int total_nodes = 0;
  for (int c = n; c > 1; c = c / 2 + c % 2) total_nodes += c / 2 + c % 2;
  const double node_budget = delta / (2.0 * total_nodes);
  while (count > 1) {
    const int pairs = count / 2;
    const int leftover = count % 2;
    std::vector<Fragment> nodes;
    double achieved = 0.0;
    if (pairs > 0) {
      // product error <= half the square error on |x +- y| <= 2*range
      const double h = calibrate_step(
          2.0 * node_budget,
          [&](double hh) { return square_emulator_error(hh, 2.0 * range); }, &achieved);
      for (int p = 0; p < pairs; ++p) nodes.push_back(product_fragment(h));
    }
    if (leftover) {
      const double h = calibrate_step(
          node_budget, [&](double hh) { return identity_emulator_error(hh, range); },
          &achieved);
      nodes.push_back(identity_fragment(h));
    }
    tree = compose(tree, parallel(nodes));
    count = pairs + leftover;
  }
  return tree;
}

Fragment mlp_to_fragment(const MLP& net) {
  Fragment f;
  f.W = net.weights;
  f.b = net.biases;
  return f;
}

}  // namespace

MLP build_square_emulator(double delta, double range_bound, double* achieved) {
  if (delta <= 0.0) throw std::invalid_argument("build_square_emulator: delta > 0 required");
  double got = 0.0;
  const double h = calibrate_step(
      delta, [&](double hh) { return square_emulator_error(hh, range_bound); }, &got);
  if (achieved) *achieved = square_emulator_error(h, range_bound);
  return fragment_to_mlp(square_fragment(h));
}

MLP build_product_tree(int n_factors, double delta, double per_factor_range) {
  if (n_factors < 1) throw std::invalid_argument("build_product_tree: n >= 1 required");
  Fragment tree = product_tree_fragment(n_factors, delta);
  if (per_factor_range != 1.0) {
    // scale inputs into [-1,1], undo at the output
    const double s = 1.0 / per_factor_range;
    Fragment pre = affine_fragment(
        Eigen::MatrixXd::Identity(n_factors, n_factors) * s, Eigen::VectorXd::Zero(n_factors));
    Fragment post = affine_fragment(
        Eigen::MatrixXd::Constant(1, 1, std::pow(per_factor_range, n_factors)),
        Eigen::VectorXd::Zero(1));
    tree = compose(compose(pre, tree), post);
  }
  return fragment_to_mlp(tree);
}

EmulatorReport build_legendre_emulator(const MultiIndex& nu, double delta, int d) {
  if (nu.max_dim() > d)
    throw std::invalid_argument("build_legendre_emulator: nu support exceeds d");
  EmulatorReport report;
  report.nu = nu;
  report.target_delta = delta;

  if (nu.is_zero()) {
    MLP net;
    net.activation = Activation::Tanh;
    net.weights.push_back(Eigen::MatrixXd::Zero(1, d));
    net.biases.push_back(Eigen::VectorXd::Ones(1));
    report.net = std::move(net);
    report.width = 0;
    report.depth = 0;
    return report;
  }

  const int n = nu.degree();
  // first affine layer: scaled linear factors from the Legendre roots
  Eigen::MatrixXd A0 = Eigen::MatrixXd::Zero(n, d);
  Eigen::VectorXd b0 = Eigen::VectorXd::Zero(n);
  double scale = 1.0;
  int row = 0;
  for (const auto& [dim, exp] : nu.terms()) {
    auto lr = legendre_roots(exp);
    scale *= std::sqrt(2.0 * exp + 1.0) * lr.leading_coeff;
    for (double root : lr.roots) {
      const double s = 1.0 / (1.0 + std::abs(root));
      A0(row, dim - 1) = s;
      b0(row) = -s * root;
      scale /= s;
      ++row;
    }
  }

  auto certify = [&](const MLP& net) {
    double worst = 0.0;
    Eigen::VectorXd xe(d);
    for (int i = 0; i < 100000; ++i) {
      auto hx = halton_point(i, d);
      for (int j = 0; j < d; ++j) xe(j) = hx[j];
      const double got = net.forward(xe)(0);
      worst = std::max(worst, std::abs(got - eval_Psi(nu, hx)));
    }
    return worst;
  };

  double tree_target = 0.9 * delta / scale;
  double last_achieved = std::numeric_limits<double>::infinity();
  for (int attempt = 0; attempt < 3; ++attempt) {
    Fragment f = affine_fragment(A0, b0);
    f = compose(f, product_tree_fragment(n, tree_target));
    f.W.back() *= scale;
    f.b.back() *= scale;
    MLP net = fragment_to_mlp(f);
    const double measured = certify(net);
    last_achieved = std::min(last_achieved, measured);
    if (measured <= delta) {
      report.net = std::move(net);
      report.measured_error = measured;
      report.width = report.net.width();
      report.depth = report.net.depth();
      return report;
    }
    tree_target *= 0.25;
  }
  throw EmulationError("build_legendre_emulator: certification failed", last_achieved);
}

FamilyNetwork assemble_family_network(const IndexSet& S, const Eigen::MatrixXd& C, double k,
                                      const WeightSystem& w, double delta, int d) {
  if (weighted_cardinality(S, WeightKind::V, w) > k * (1.0 + 1e-12))
    throw std::invalid_argument("assemble_family_network: budget violation |S|_v > k");
  const int channels_total = static_cast<int>(std::floor(k));
  if (C.cols() != channels_total)
    throw std::invalid_argument("assemble_family_network: C must have floor(k) columns");
  if (static_cast<int>(S.size()) > channels_total)
    throw std::invalid_argument("assemble_family_network: |S| exceeds floor(k)");

  FamilyNetwork fam;
  fam.support = S;
  std::vector<Fragment> frs;
  int max_depth = 1;
  std::vector<double> ranges;
  for (const auto& nu : S) {
    auto rep = build_legendre_emulator(nu, delta, d);
    Fragment f = mlp_to_fragment(rep.net);
    max_depth = std::max(max_depth, f.hidden_layers());
    ranges.push_back(u_weight(nu));
    frs.push_back(std::move(f));
  }
  for (std::size_t i = 0; i < frs.size(); ++i)
    frs[i] = pad_to_depth(std::move(frs[i]), max_depth, ranges[i]);
  for (int c = static_cast<int>(S.size()); c < channels_total; ++c)
    frs.push_back(zero_fragment(d, max_depth));

  for (const auto& f : frs) fam.channels.push_back(fragment_to_mlp(f));
  Fragment stack = parallel_shared_input(frs);
  Fragment out = compose(stack, affine_fragment(C, Eigen::VectorXd::Zero(C.rows())));
  fam.net = fragment_to_mlp(out);
  fam.width_bound = std::pow(k, 1.0 + 1.0 / (5.0 + w.xi));
  return fam;
}

MinimizerResult build_interpolating_minimizer(const PolyFitResult& fit, const TrainingSet& data,
                                              const DiscreteNorm& norm, int r, double z_scale,
                                              std::uint64_t seed) {
  const int m = static_cast<int>(data.X.rows());
  const int d = static_cast<int>(data.X.cols());
  const int K = static_cast<int>(data.Y.cols());
  if (r <= m) throw std::invalid_argument("build_interpolating_minimizer: requires r > m");
  if (r < d) throw std::invalid_argument("build_interpolating_minimizer: requires r >= d");

  MinimizerResult res;
  res.r = r;
  // padded training inputs: fresh uniform coordinates are part of x ~ rho
  res.padded_X.resize(m, r);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < d; ++j) res.padded_X(i, j) = data.X(i, j);
    auto eng = keyed_engine(hash_combine(seed, 0x504144ULL), i);
    for (int j = d; j < r; ++j) res.padded_X(i, j) = uniform_pm1(eng);
  }

  // emulator accuracy: delta = 2^-m / m capped below at 1e-10; expansion
  // emulators fall back along a ladder when the product construction cannot
  // reach it in double precision
  const double delta_want = std::max(std::ldexp(1.0, -m) / m, 1e-10);
  auto build_relaxed = [&](const MultiIndex& nu, double want) {
    for (double target = want;; target *= 10.0) {
      try {
        return build_legendre_emulator(nu, target, r);
      } catch (const EmulationError&) {
        if (target > 1e-2) throw;
      }
    }
  };

  std::vector<Fragment> frs;
  int max_depth = 1;
  std::vector<double> ranges;
  double worst_delta = 0.0;
  for (const auto& nu : fit.expansion.support) {
    auto rep = build_relaxed(nu, delta_want);
    worst_delta = std::max(worst_delta, std::max(rep.measured_error, rep.target_delta));
    Fragment f = mlp_to_fragment(rep.net);
    max_depth = std::max(max_depth, f.hidden_layers());
    ranges.push_back(u_weight(nu));
    frs.push_back(std::move(f));
  }
  {
    // N_{e_j} differs from N_{e_1} only in which input column the first
    // affine layer reads; build and certify once, then remap the column
    auto rep = build_relaxed(MultiIndex::unit(1), delta_want);
    worst_delta = std::max(worst_delta, std::max(rep.measured_error, rep.target_delta));
    const Fragment base = mlp_to_fragment(rep.net);
    max_depth = std::max(max_depth, base.hidden_layers());
    for (int j = 1; j <= r; ++j) {
      Fragment f = base;
      if (j > 1) {
        f.W.front().col(j - 1) = f.W.front().col(0);
        f.W.front().col(0).setZero();
      }
      ranges.push_back(std::sqrt(3.0));
      frs.push_back(std::move(f));
    }
  }
  for (std::size_t i = 0; i < frs.size(); ++i)
    frs[i] = pad_to_depth(std::move(frs[i]), max_depth, ranges[i]);
  res.emulator_delta = worst_delta;

  const std::size_t nS = fit.expansion.support.size();
  // realized first-order matrix B
  Eigen::MatrixXd B(m, r);
  for (int j = 0; j < r; ++j) {
    MLP ch = fragment_to_mlp(frs[nS + j]);
    B.col(j) = ch.forward_batch(res.padded_X).col(0) / std::sqrt(static_cast<double>(r));
  }

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(B, Eigen::ComputeThinU | Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  res.sigma_min_B = sv(sv.size() - 1);
  res.b_rank_deficient = res.sigma_min_B < 1e-10 * sv(0);

  // e = (Ytilde - ptilde(X)) / sqrt(r); the nodal decoder is surjective onto
  // R^K, so the closest points Ytilde are the data themselves
  Eigen::MatrixXd ptilde = Eigen::MatrixXd::Zero(m, K);
  for (std::size_t i = 0; i < nS; ++i) {
    MLP ch = fragment_to_mlp(frs[i]);
    Eigen::VectorXd vals = ch.forward_batch(res.padded_X).col(0);
    for (int kk = 0; kk < K; ++kk)
      ptilde.col(kk) += vals * fit.expansion.coefficients[i][kk];
  }
  Eigen::MatrixXd e = (data.Y - ptilde) / std::sqrt(static_cast<double>(r));

  // minimum-norm B^dagger e, per output coordinate
  Eigen::MatrixXd U = svd.matrixU();
  Eigen::MatrixXd V = svd.matrixV();
  Eigen::MatrixXd corr = Eigen::MatrixXd::Zero(r, K);
  for (int s = 0; s < sv.size(); ++s) {
    if (sv(s) <= 1e-13 * sv(0)) continue;
    corr += V.col(s) * (U.col(s).transpose() * e) / sv(s);
  }

  // seeded null-space direction scaled by z_scale
  res.z = Eigen::VectorXd::Zero(r);
  if (r > m) {
    auto eng = keyed_engine(hash_combine(seed, 0x4e554cULL), 0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::VectorXd wz(r - m);
    for (int i = 0; i < r - m; ++i) wz(i) = gauss(eng);
    Eigen::VectorXd dir = V.rightCols(r - m) * wz;
    if (dir.norm() > 0) res.z = z_scale * dir / dir.norm();
  }

  // unit output direction in the Y-norm
  std::vector<double> e1(K, 0.0);
  e1[0] = 1.0;
  const double e1n = norm(e1);
  Eigen::VectorXd y = Eigen::VectorXd::Zero(K);
  y(0) = 1.0 / e1n;

  // final affine layer
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(K, nS + r);
  for (std::size_t i = 0; i < nS; ++i)
    for (int kk = 0; kk < K; ++kk) C(kk, static_cast<int>(i)) = fit.expansion.coefficients[i][kk];
  for (int j = 0; j < r; ++j)
    for (int kk = 0; kk < K; ++kk)
      C(kk, static_cast<int>(nS) + j) = corr(j, kk) + y(kk) * res.z(j);

  Fragment stack = parallel_shared_input(frs);
  Fragment full = compose(stack, affine_fragment(C, Eigen::VectorXd::Zero(K)));
  res.net = fragment_to_mlp(full);

  // realized training residuals
  Eigen::MatrixXd out = res.net.forward_batch(res.padded_X);
  std::vector<double> row(K);
  double worst = 0.0, loss = 0.0;
  for (int i = 0; i < m; ++i) {
    for (int kk = 0; kk < K; ++kk) row[kk] = data.Y(i, kk) - out(i, kk);
    const double ni = norm(row);
    worst = std::max(worst, ni);
    loss += ni * ni;
  }
  res.max_residual = worst;
  res.train_loss = loss / m;
  return res;
}

void save_mlp(std::ostream& os, const MLP& net) {
  os << "holop-mlp 1\n";
  os << "activation " << activation_name(net.activation) << '\n';
  os << "layers " << net.weights.size() << '\n';
  os << "dims " << net.input_dim();
  for (const auto& W : net.weights) os << ' ' << W.rows();
  os << '\n';
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    os << "W " << l << '\n';
    for (Eigen::Index i = 0; i < net.weights[l].rows(); ++i) {
      for (Eigen::Index j = 0; j < net.weights[l].cols(); ++j)
        os << (j ? " " : "") << format_full(net.weights[l](i, j));
      os << '\n';
    }
    os << "b " << l << '\n';
    for (Eigen::Index i = 0; i < net.biases[l].size(); ++i)
      os << (i ? " " : "") << format_full(net.biases[l](i));
    os << '\n';
  }
}

MLP load_mlp(std::istream& is) {
  std::string tag;
  int version = 0;
  is >> tag >> version;
  if (tag != "holop-mlp" || version != 1) throw std::runtime_error("load_mlp: bad header");
  std::string key, act_name;
  is >> key >> act_name;
  std::size_t layers = 0;
  is >> key >> layers;
  std::vector<Eigen::Index> dims(layers + 1);
  is >> key;
  for (auto& v : dims) is >> v;
  MLP net;
  net.activation = activation_from_name(act_name);
  for (std::size_t l = 0; l < layers; ++l) {
    std::size_t idx;
    is >> key >> idx;
    Eigen::MatrixXd W(dims[l + 1], dims[l]);
    for (Eigen::Index i = 0; i < W.rows(); ++i)
      for (Eigen::Index j = 0; j < W.cols(); ++j) is >> W(i, j);
    net.weights.push_back(std::move(W));
    is >> key >> idx;
    Eigen::VectorXd b(dims[l + 1]);
    for (Eigen::Index i = 0; i < b.size(); ++i) is >> b(i);
    net.biases.push_back(std::move(b));
  }
  if (!is) throw std::runtime_error("load_mlp: truncated input");
  return net;
}

}  // namespace holop
