#include "holop/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <istream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "holop/util.hpp"

namespace holop {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

NormKind norm_from_name(const std::string& name) {
  if (name == "euclidean") return NormKind::WeightedEuclidean;
  if (name == "l4") return NormKind::WeightedL4;
  if (name == "sup") return NormKind::Sup;
  throw std::invalid_argument("unknown norm: " + name);
}

const char* norm_name(NormKind k) {
  switch (k) {
    case NormKind::WeightedEuclidean: return "euclidean";
    case NormKind::WeightedL4: return "l4";
    case NormKind::Sup: return "sup";
  }
  return "?";
}

std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    tok = trim(tok);
    if (!tok.empty()) out.push_back(std::stoi(tok));
  }
  return out;
}

// bounded parallel-for over trial indices; results land in caller arrays
void parallel_for(int n, int jobs, const std::function<void(int)>& body) {
  if (jobs <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  std::atomic<int> next{0};
  const int workers = std::min(jobs, n);
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&]() {
      for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) body(i);
    });
  for (auto& t : pool) t.join();
}

}  // namespace

ExperimentSpec ExperimentSpec::from_config(std::istream& is) {
  ExperimentSpec spec;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key == "family") spec.family = value;
    else if (key == "d") spec.d = std::stoi(value);
    else if (key == "K") spec.K = std::stoi(value);
    else if (key == "noise") spec.noise = std::stod(value);
    else if (key == "norm") spec.norm = norm_from_name(value);
    else if (key == "source") spec.source = std::stod(value);
    else if (key == "method") spec.method = value;
    else if (key == "hc_n") spec.hc_n = std::stoi(value);
    else if (key == "budget_k") spec.budget_k = std::stod(value);
    else if (key == "depth") spec.depth = std::stoi(value);
    else if (key == "width") spec.width = std::stoi(value);
    else if (key == "activation") spec.activation = activation_from_name(value);
    else if (key == "m_values") spec.m_values = parse_int_list(value);
    else if (key == "trials") spec.trials = std::stoi(value);
    else if (key == "test_level") spec.test_level = std::stoi(value);
    else if (key == "seed_base") spec.seed_base = std::stoull(value);
    else if (key == "epochs") spec.epochs = std::stoi(value);
    else if (key == "slope_window_lo") spec.slope_window_lo = std::stod(value);
    else if (key == "slope_window_hi") spec.slope_window_hi = std::stod(value);
    else if (key == "jobs") spec.jobs = std::stoi(value);
    else throw std::invalid_argument("config: unknown key '" + key + "'");
  }
  if (spec.m_values.empty()) throw std::invalid_argument("config: empty m_values");
  for (std::size_t i = 1; i < spec.m_values.size(); ++i)
    if (spec.m_values[i] <= spec.m_values[i - 1])
      throw std::invalid_argument("config: m_values must be strictly increasing");
  return spec;
}

std::string ExperimentSpec::canonical_text() const {
  std::stringstream ss;
  ss << "family=" << family << ";d=" << d << ";K=" << K << ";noise=" << format_full(noise)
     << ";norm=" << norm_name(norm) << ";source=" << format_full(source)
     << ";method=" << method << ";hc_n=" << hc_n << ";budget_k=" << format_full(budget_k)
     << ";depth=" << depth << ";width=" << width
     << ";activation=" << activation_name(activation) << ";m=";
  for (int m : m_values) ss << m << ' ';
  ss << ";trials=" << trials << ";test_level=" << test_level << ";seed=" << seed_base
     << ";epochs=" << epochs << ";window=" << slope_window_lo << ',' << slope_window_hi
     << ";fast=" << fast;
  return ss.str();
}

std::uint64_t ExperimentSpec::manifest_hash() const {
  return fnv1a64(canonical_text());
}

ExperimentSpec ExperimentSpec::with_fast_profile() const {
  ExperimentSpec out = *this;
  out.fast = true;
  out.epochs = std::min(out.epochs, 10000);
  out.trials = std::min(out.trials, 3);
  return out;
}

OperatorOracle make_oracle(const ExperimentSpec& spec) {
  if (spec.family == "affine-a1")
    return diffusion_oracle(CoefficientField::affine_a1(spec.d), spec.source, spec.K, spec.norm);
  if (spec.family == "log-a2")
    return diffusion_oracle(CoefficientField::log_a2(spec.d), spec.source, spec.K, spec.norm);
  if (spec.family == "synthetic") {
    std::vector<double> b(spec.d), c(spec.d);
    for (int j = 1; j <= spec.d; ++j) b[j - 1] = c[j - 1] = std::pow(j, -1.5);
    std::vector<double> y(spec.K, 0.0);
    y[0] = 1.0;
    return synthetic_affine_family(b, c, y, spec.norm);
  }
  throw std::invalid_argument("unknown oracle family: " + spec.family);
}

double relative_test_error(const VectorField& Fhat, const OperatorOracle& oracle,
                           const SparseGridRule& rule, const DiscreteNorm& norm) {
  if (rule.dim != oracle.input_dim)
    throw std::invalid_argument("relative_test_error: rule dimension mismatch");
  std::vector<double> num(rule.size()), den(rule.size());
  for (std::size_t i = 0; i < rule.size(); ++i) {
    const auto f = oracle.eval(rule.nodes[i]);
    const auto g = Fhat(rule.nodes[i]);
    std::vector<double> diff(f.size());
    for (std::size_t k = 0; k < f.size(); ++k) diff[k] = f[k] - g[k];
    const double nf = norm(f), nd = norm(diff);
    num[i] = rule.weights[i] * nd * nd;
    den[i] = rule.weights[i] * nf * nf;
  }
  const double denom = std::sqrt(std::max(0.0, pairwise_sum(den)));
  if (denom == 0.0) throw std::runtime_error("relative_test_error: zero denominator");
  return std::sqrt(std::max(0.0, pairwise_sum(num))) / denom;
}

double fit_loglog_slope(const std::vector<int>& m, const std::vector<double>& err, double m_lo,
                        double m_hi) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (m[i] < m_lo || m[i] > m_hi) continue;
    if (!(err[i] > 0.0)) continue;
    const double x = std::log(static_cast<double>(m[i]));
    const double y = std::log(err[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++n;
  }
  if (n < 2) throw std::runtime_error("fit_loglog_slope: fewer than two points in window");
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

namespace {

struct TestSetCache {
  SparseGridRule rule;
  std::vector<std::vector<double>> oracle_values;  // per node
  double denom = 0.0;                              // (sum w ||F||^2)^(1/2)
  Eigen::MatrixXd psi;                             // nodes x |Lambda| (poly methods)
};

TestSetCache build_test_cache(const ExperimentSpec& spec, const OperatorOracle& oracle,
                              const IndexSet& Lambda) {
  TestSetCache cache;
  const int level = spec.test_level >= 0
                        ? spec.test_level
                        : test_level_for(spec.d, spec.m_values.back());
  cache.rule = smolyak(spec.d, level);
  cache.oracle_values.resize(cache.rule.size());
  std::vector<double> den(cache.rule.size());
  for (std::size_t i = 0; i < cache.rule.size(); ++i) {
    cache.oracle_values[i] = oracle.eval(cache.rule.nodes[i]);
    const double nf = oracle.output_norm(cache.oracle_values[i]);
    den[i] = cache.rule.weights[i] * nf * nf;
  }
  cache.denom = std::sqrt(std::max(0.0, pairwise_sum(den)));
  if (cache.denom == 0.0) throw std::runtime_error("test cache: zero oracle norm");
  if (!Lambda.empty()) {
    cache.psi.resize(cache.rule.size(), Lambda.size());
    for (std::size_t i = 0; i < cache.rule.size(); ++i)
      for (std::size_t j = 0; j < Lambda.size(); ++j)
        cache.psi(i, j) = eval_Psi(Lambda[j], cache.rule.nodes[i]);
  }
  return cache;
}

double cached_rel_error_matrix(const TestSetCache& cache, const Eigen::MatrixXd& fitted,
                               const DiscreteNorm& norm) {
  std::vector<double> num(cache.rule.size());
  std::vector<double> diff(fitted.cols());
  for (std::size_t i = 0; i < cache.rule.size(); ++i) {
    for (Eigen::Index k = 0; k < fitted.cols(); ++k)
      diff[k] = cache.oracle_values[i][k] - fitted(i, k);
    const double nd = norm(diff);
    num[i] = cache.rule.weights[i] * nd * nd;
  }
  return std::sqrt(std::max(0.0, pairwise_sum(num))) / cache.denom;
}

}  // namespace

ConvergenceTable run_convergence(const ExperimentSpec& spec_in) {
  const ExperimentSpec spec = spec_in.fast ? spec_in.with_fast_profile() : spec_in;
  const OperatorOracle oracle = make_oracle(spec);
  const bool poly = spec.method == "polyfit-ls" || spec.method == "polyfit-greedy";
  IndexSet Lambda;
  if (poly) Lambda = hyperbolic_cross(spec.hc_n).restrict_dims(spec.d);
  if (!poly && spec.method != "mlp")
    throw std::invalid_argument("unknown method: " + spec.method);

  const TestSetCache cache = build_test_cache(spec, oracle, Lambda);

  ConvergenceTable table;
  table.manifest = spec.manifest_hash();
  table.m = spec.m_values;
  table.per_trial.assign(spec.m_values.size(), {});
  table.excluded.assign(spec.m_values.size(), 0);

  for (std::size_t mi = 0; mi < spec.m_values.size(); ++mi) {
    const int m = spec.m_values[mi];
    std::vector<double> errors(spec.trials, -1.0);
    parallel_for(spec.trials, spec.jobs, [&](int t) {
      try {
        const std::uint64_t seed = hash_combine(spec.seed_base, m, t);
        TrainingSet data = generate_training_set(oracle, m, spec.noise, seed);
        Eigen::MatrixXd fitted;
        if (poly) {
          DesignMatrix design = assemble_design(Lambda, data.X);
          PolyFitResult fit =
              spec.method == "polyfit-ls"
                  ? least_squares_fit(design, data.Y, oracle.output_norm)
                  : greedy_sparse_fit(design, data.Y,
                                      spec.budget_k > 0.0
                                          ? spec.budget_k
                                          : weighted_cardinality(Lambda, WeightKind::V,
                                                                 WeightSystem{}),
                                      WeightSystem{}, oracle.output_norm);
          // coefficients aligned to Lambda columns (subset for greedy)
          Eigen::MatrixXd C = Eigen::MatrixXd::Zero(Lambda.size(), spec.K);
          for (std::size_t i = 0; i < fit.expansion.support.size(); ++i) {
            // locate the column of this index within Lambda
            std::size_t col = 0;
            while (!(Lambda[col] == fit.expansion.support[i])) ++col;
            for (int k = 0; k < spec.K; ++k) C(col, k) = fit.expansion.coefficients[i][k];
          }
          fitted = cache.psi * C;
        } else {
          TrainConfig cfg;
          cfg.epochs = spec.epochs;
          cfg.seed = static_cast<std::uint64_t>(t);  // init seed = trial number
          MLP net = make_fully_connected(spec.d, spec.K, spec.depth, spec.width,
                                         spec.activation, cfg.seed);
          TrainResult tr =
              train(std::move(net), data, EncoderDecoder::identity(spec.d, spec.K),
                    oracle.output_norm, cfg);
          Eigen::MatrixXd Xtest(cache.rule.size(), spec.d);
          for (std::size_t i = 0; i < cache.rule.size(); ++i)
            for (int j = 0; j < spec.d; ++j) Xtest(i, j) = cache.rule.nodes[i][j];
          fitted = tr.net.forward_batch(Xtest);
        }
        errors[t] = cached_rel_error_matrix(cache, fitted, oracle.output_norm);
      } catch (const std::exception&) {
        errors[t] = -1.0;  // excluded
      }
    });

    std::vector<double> kept;
    for (double e : errors) {
      if (e < 0.0) {
        ++table.excluded[mi];
        continue;
      }
      if (e <= 0.0) {
        e = 1e-16;
        table.clamped_zero = true;
      }
      kept.push_back(e);
    }
    if (table.excluded[mi] > 0.2 * spec.trials) table.flagged = true;
    table.per_trial[mi] = errors;
    if (kept.empty()) {
      table.flagged = true;
      table.geomean.push_back(0.0);
      table.band_lo.push_back(0.0);
      table.band_hi.push_back(0.0);
      continue;
    }
    double mean_log = 0.0;
    for (double e : kept) mean_log += std::log(e);
    mean_log /= kept.size();
    double var_log = 0.0;
    for (double e : kept) var_log += (std::log(e) - mean_log) * (std::log(e) - mean_log);
    var_log = kept.size() > 1 ? var_log / (kept.size() - 1) : 0.0;
    const double sd = std::sqrt(var_log);
    table.geomean.push_back(std::exp(mean_log));
    table.band_lo.push_back(std::exp(mean_log - sd));
    table.band_hi.push_back(std::exp(mean_log + sd));
  }
  if (table.clamped_zero) table.flagged = true;
  int in_window = 0;
  for (std::size_t i = 0; i < table.m.size(); ++i)
    if (table.m[i] >= spec.slope_window_lo && table.m[i] <= spec.slope_window_hi &&
        table.geomean[i] > 0.0)
      ++in_window;
  table.slope = in_window >= 2 ? fit_loglog_slope(table.m, table.geomean,
                                                  spec.slope_window_lo, spec.slope_window_hi)
                               : 0.0;
  return table;
}

std::string table_to_csv(const ConvergenceTable& table) {
  std::stringstream ss;
  ss << "# manifest " << std::hex << table.manifest << std::dec << '\n';
  ss << "m,geomean,band_lo,band_hi,excluded\n";
  for (std::size_t i = 0; i < table.m.size(); ++i)
    ss << table.m[i] << ',' << format_full(table.geomean[i]) << ','
       << format_full(table.band_lo[i]) << ',' << format_full(table.band_hi[i]) << ','
       << table.excluded[i] << '\n';
  ss << "# slope " << format_full(table.slope) << (table.flagged ? " flagged" : "") << '\n';
  return ss.str();
}

std::string trials_to_csv(const ConvergenceTable& table) {
  std::stringstream ss;
  ss << "# manifest " << std::hex << table.manifest << std::dec << '\n';
  ss << "m,trial,error\n";
  for (std::size_t i = 0; i < table.m.size(); ++i)
    for (std::size_t t = 0; t < table.per_trial[i].size(); ++t)
      ss << table.m[i] << ',' << t << ',' << format_full(table.per_trial[i][t]) << '\n';
  return ss.str();
}

std::string theory_overlay(const ConvergenceTable& table, const std::vector<double>& b,
                           double p, bool hilbert) {
  RateCurve curve = predicted_rates(b, p, table.m, hilbert);
  // anchor at the smallest m
  const double shift = table.geomean.front() / curve.q2.front();
  std::stringstream ss;
  ss << "# manifest " << std::hex << table.manifest << std::dec << '\n';
  ss << "m,geomean,theory_q2\n";
  for (std::size_t i = 0; i < table.m.size(); ++i)
    ss << table.m[i] << ',' << format_full(table.geomean[i]) << ','
       << format_full(curve.q2[i] * shift) << '\n';
  return ss.str();
}

MinimizerDemo run_minimizer_demo(const ExperimentSpec& spec, int m, int r,
                                 const std::vector<double>& z_scales, int n_test,
                                 std::uint64_t seed) {
  OperatorOracle oracle = make_oracle(spec);
  const int d = oracle.input_dim;
  const int K = oracle.output_dim;
  TrainingSet data = generate_training_set(oracle, m, 0.0, hash_combine(seed, 1));
  IndexSet Lambda = hyperbolic_cross(spec.hc_n).restrict_dims(d);
  DesignMatrix design = assemble_design(Lambda, data.X);
  PolyFitResult fit = least_squares_fit(design, data.Y, oracle.output_norm);

  // shared Monte Carlo test set over the padded input cube
  Eigen::MatrixXd Xtest(n_test, r);
  std::vector<std::vector<double>> Ftest(n_test);
  std::vector<double> den(n_test);
  for (int i = 0; i < n_test; ++i) {
    auto eng = keyed_engine(hash_combine(seed, 2), i);
    std::vector<double> x(r);
    for (int j = 0; j < r; ++j) x[j] = uniform_pm1(eng);
    for (int j = 0; j < r; ++j) Xtest(i, j) = x[j];
    Ftest[i] = oracle.eval(std::span<const double>(x.data(), d));
    const double nf = oracle.output_norm(Ftest[i]);
    den[i] = nf * nf;
  }
  const double denom = std::sqrt(pairwise_sum(den));

  auto mc_error = [&](const std::function<std::vector<double>(int)>& value_at) {
    std::vector<double> num(n_test);
    for (int i = 0; i < n_test; ++i) {
      auto v = value_at(i);
      std::vector<double> diff(K);
      for (int k = 0; k < K; ++k) diff[k] = Ftest[i][k] - v[k];
      const double nd = oracle.output_norm(diff);
      num[i] = nd * nd;
    }
    return std::sqrt(pairwise_sum(num)) / denom;
  };

  MinimizerDemo demo;
  demo.z_scales = z_scales;
  demo.mc_denominator = denom / std::sqrt(static_cast<double>(n_test));
  demo.poly_test_error = mc_error([&](int i) {
    std::vector<double> x(d);
    for (int j = 0; j < d; ++j) x[j] = Xtest(i, j);
    return fit.expansion.eval(x);
  });

  std::vector<Eigen::VectorXd> params;
  for (double zs : z_scales) {
    MinimizerResult res =
        build_interpolating_minimizer(fit, data, oracle.output_norm, r, zs, seed);
    demo.sigma_min = res.sigma_min_B;
    demo.emulator_delta = res.emulator_delta;
    demo.residuals.push_back(res.max_residual);
    demo.train_losses.push_back(res.train_loss);
    Eigen::MatrixXd out = res.net.forward_batch(Xtest);
    demo.test_errors.push_back(mc_error([&](int i) {
      std::vector<double> v(K);
      for (int k = 0; k < K; ++k) v[k] = out(i, k);
      return v;
    }));
    params.push_back(res.net.parameters_flat());
    demo.param_norms.push_back(params.back().norm());
  }
  for (std::size_t a = 0; a < params.size(); ++a)
    for (std::size_t b2 = a + 1; b2 < params.size(); ++b2)
      demo.pairwise_param_dist.push_back((params[a] - params[b2]).norm());
  return demo;
}

}  // namespace holop
