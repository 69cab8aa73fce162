// Command-line front end: convergence experiments, emulator certification,
// the zero-loss interpolating construction, lower-bound probes and theory
// rate curves. All outputs are CSV with a manifest hash comment line.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "holop/harness.hpp"
#include "holop/probes.hpp"
#include "holop/util.hpp"

using namespace holop;

namespace {

constexpr int kExitInvalidConfig = 2;
constexpr int kExitNumericalFailure = 3;

void write_file(const std::string& path, const std::string& content) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open output file: " + path);
  os << content;
}

int cmd_run(const std::string& config_path, const std::string& out_dir, bool fast, int jobs,
            bool overlay, double overlay_p) {
  std::ifstream is(config_path);
  if (!is) {
    std::cerr << "error: cannot read config " << config_path << "\n";
    return kExitInvalidConfig;
  }
  ExperimentSpec spec;
  try {
    spec = ExperimentSpec::from_config(is);
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitInvalidConfig;
  }
  spec.fast = fast;
  if (jobs > 0) spec.jobs = jobs;
  try {
    ConvergenceTable table = run_convergence(spec);
    std::filesystem::create_directories(out_dir);
    write_file(out_dir + "/convergence.csv", table_to_csv(table));
    write_file(out_dir + "/trials.csv", trials_to_csv(table));
    if (overlay) {
      OperatorOracle oracle = make_oracle(spec);
      const bool hilbert = spec.norm == NormKind::WeightedEuclidean;
      write_file(out_dir + "/overlay.csv",
                 theory_overlay(table, oracle.holomorphy_b, overlay_p, hilbert));
    }
    std::cout << "slope " << table.slope << (table.flagged ? " (flagged)" : "") << "\n";
    std::cout << "wrote " << out_dir << "/convergence.csv\n";
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumericalFailure;
  }
}

int cmd_emulate(const std::string& nu_text, double delta, int d, const std::string& out_path) {
  try {
    MultiIndex nu = MultiIndex::parse(nu_text);
    const int dim = std::max(d, nu.max_dim());
    auto rep = build_legendre_emulator(nu, delta, dim);
    // fresh-grid re-measurement
    double fresh = 0.0;
    Eigen::VectorXd xe(dim);
    for (int i = 0; i < 100000; ++i) {
      auto eng = keyed_engine(0xF4E5ULL, i);
      std::vector<double> x(dim);
      for (int j = 0; j < dim; ++j) {
        x[j] = uniform_pm1(eng);
        xe(j) = x[j];
      }
      fresh = std::max(fresh, std::abs(rep.net.forward(xe)(0) - eval_Psi(nu, x)));
    }
    std::cout << "nu " << (nu_text.empty() ? "0" : nu_text) << "\n"
              << "target " << delta << "\n"
              << "measured " << rep.measured_error << "\n"
              << "fresh_grid " << fresh << "\n"
              << "width " << rep.width << "\n"
              << "depth " << rep.depth << "\n";
    if (!out_path.empty()) {
      std::ofstream os(out_path);
      save_mlp(os, rep.net);
      std::cout << "wrote " << out_path << "\n";
    }
    return fresh <= 2.0 * delta ? 0 : kExitNumericalFailure;
  } catch (const EmulationError& e) {
    std::cerr << "emulation failure: " << e.what() << " (smallest achieved "
              << e.smallest_achieved << ")\n";
    return kExitNumericalFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInvalidConfig;
  }
}

int cmd_minimizer(int m, int d, int K, double z_scale_max, std::uint64_t seed,
                  const std::string& out_path) {
  try {
    ExperimentSpec spec;
    spec.d = d;
    spec.K = K;
    spec.hc_n = 4;
    const int r = 2 * m + 2;
    std::vector<double> z_scales = {0.0, z_scale_max / 16.0, z_scale_max};
    MinimizerDemo demo = run_minimizer_demo(spec, m, r, z_scales, 2000, seed);
    std::stringstream ss;
    ss << "# manifest " << std::hex << spec.manifest_hash() << std::dec << '\n';
    ss << "z_scale,max_residual,train_loss,test_error,param_norm\n";
    for (std::size_t i = 0; i < z_scales.size(); ++i)
      ss << format_full(demo.z_scales[i]) << ',' << format_full(demo.residuals[i]) << ','
         << format_full(demo.train_losses[i]) << ',' << format_full(demo.test_errors[i]) << ','
         << format_full(demo.param_norms[i]) << '\n';
    ss << "# poly_test_error " << format_full(demo.poly_test_error) << '\n';
    ss << "# sigma_min_B " << format_full(demo.sigma_min) << '\n';
    std::cout << ss.str();
    if (!out_path.empty()) write_file(out_path, ss.str());
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumericalFailure;
  }
}

int cmd_probe(const std::string& kind, int m, int r, int trials, double p,
              std::uint64_t seed, const std::string& out_path) {
  try {
    std::stringstream ss;
    if (kind == "sigmin") {
      auto report = subgaussian_sigma_min(m, r, trials, seed);
      write_sigma_min_csv(ss, report, fnv1a64("sigmin"));
      std::cout << "fraction(sigma_min >= sqrt(omega)/2) = " << report.fraction << "\n"
                << "median " << report.median << " q10 " << report.q10 << " q90 "
                << report.q90 << "\n";
    } else if (kind == "spikiness") {
      std::vector<int> ms = {10, 20, 40, 80};
      auto report = nullspace_spikiness(ms, trials, seed);
      write_spikiness_csv(ss, report, fnv1a64("spikiness"));
      for (std::size_t i = 0; i < ms.size(); ++i)
        std::cout << "m=" << ms[i] << " median " << report.median[i] << " redraws "
                  << report.redraws[i] << "\n";
    } else if (kind == "floor2" || kind == "floorinf") {
      std::vector<int> ms = {10, 100, 1000};
      auto rows = rate_floor(LowerBoundSequence::Kind::LogDamped, p, ms,
                             kind == "floor2" ? 2 : 0);
      write_rate_floor_csv(ss, rows, fnv1a64(kind));
      for (const auto& row : rows)
        std::cout << "m=" << row.m << " floor " << row.floor_rate << " sigma "
                  << row.sigma_based << "\n";
    } else {
      std::cerr << "unknown probe kind: " << kind << "\n";
      return kExitInvalidConfig;
    }
    if (!out_path.empty()) write_file(out_path, ss.str());
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumericalFailure;
  }
}

int cmd_rates(double p, bool hilbert, const std::string& m_text, const std::string& out_path) {
  try {
    std::vector<int> ms;
    std::stringstream mss(m_text);
    std::string tok;
    while (std::getline(mss, tok, ',')) ms.push_back(std::stoi(tok));
    auto curve = predicted_rates({}, p, ms, hilbert);
    std::stringstream ss;
    ss << "# manifest " << std::hex << fnv1a64("rates" + m_text) << std::dec << '\n';
    ss << "m,rate_q2,rate_qinf\n";
    for (std::size_t i = 0; i < ms.size(); ++i)
      ss << ms[i] << ',' << format_full(curve.q2[i]) << ',' << format_full(curve.qinf[i])
         << '\n';
    std::cout << ss.str();
    if (!out_path.empty()) write_file(out_path, ss.str());
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInvalidConfig;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"operator learning experiments: sparse Legendre fits, tanh networks and "
               "lower-bound probes on [-1,1]^d"};
  app.require_subcommand(1);

  // run
  auto* run = app.add_subcommand("run", "convergence experiment from a config file");
  std::string config_path, out_dir = "out";
  bool fast = false, overlay = false;
  int jobs = 0;
  double overlay_p = 2.0 / 3.0;
  run->add_option("config", config_path, "key = value config file")->required();
  run->add_option("--out", out_dir, "output directory");
  run->add_flag("--fast", fast, "reduced profile: 10000 epochs, 3 trials");
  run->add_option("--jobs", jobs, "parallel trials cap");
  run->add_flag("--overlay", overlay, "emit the anchored theory curve");
  run->add_option("--overlay-p", overlay_p, "holomorphy exponent for the overlay");

  // emulate
  auto* emu = app.add_subcommand("emulate", "build and certify a Legendre emulator");
  std::string nu_text;
  double delta = 1e-3;
  int emu_d = 0;
  std::string emu_out;
  emu->add_option("--nu", nu_text, "multi-index as dim:exp pairs, empty for the zero index");
  emu->add_option("--delta", delta, "target sup error");
  emu->add_option("--d", emu_d, "input dimension (defaults to max active dim)");
  emu->add_option("--out", emu_out, "write the network to this file");

  // minimizer
  auto* mini = app.add_subcommand("minimizer", "zero-loss interpolating construction demo");
  int mini_m = 20, mini_d = 4, mini_K = 257;
  double z_scale = std::ldexp(1.0, -20);
  std::uint64_t mini_seed = 0;
  std::string mini_out;
  mini->add_option("--m", mini_m, "training samples");
  mini->add_option("--d", mini_d, "parametric dimension");
  mini->add_option("--K", mini_K, "output grid size");
  mini->add_option("--z-scale", z_scale, "largest null-space scale");
  mini->add_option("--seed", mini_seed, "seed");
  mini->add_option("--out", mini_out, "CSV output path");

  // probe
  auto* probe = app.add_subcommand("probe", "lower-bound and random-matrix probes");
  std::string probe_kind = "sigmin";
  int probe_m = 50, probe_r = 400, probe_trials = 200;
  double probe_p = 0.5;
  std::uint64_t probe_seed = 0;
  std::string probe_out;
  probe->add_option("--kind", probe_kind, "sigmin | spikiness | floor2 | floorinf");
  probe->add_option("--m", probe_m, "rows");
  probe->add_option("--r", probe_r, "columns (sigmin)");
  probe->add_option("--trials", probe_trials, "trials");
  probe->add_option("--p", probe_p, "sequence exponent (floor probes)");
  probe->add_option("--seed", probe_seed, "seed");
  probe->add_option("--out", probe_out, "CSV output path");

  // rates
  auto* rates = app.add_subcommand("rates", "theory rate curves");
  double rates_p = 2.0 / 3.0;
  bool banach = false;
  std::string rates_m = "10,20,50,100,200,500", rates_out;
  rates->add_option("--p", rates_p, "holomorphy exponent in (0,1)");
  rates->add_flag("--banach", banach, "Banach-codomain exponents");
  rates->add_option("--m", rates_m, "comma-separated m values");
  rates->add_option("--out", rates_out, "CSV output path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitInvalidConfig;
  }

  if (run->parsed()) return cmd_run(config_path, out_dir, fast, jobs, overlay, overlay_p);
  if (emu->parsed()) return cmd_emulate(nu_text, delta, emu_d, emu_out);
  if (mini->parsed()) return cmd_minimizer(mini_m, mini_d, mini_K, z_scale, mini_seed, mini_out);
  if (probe->parsed())
    return cmd_probe(probe_kind, probe_m, probe_r, probe_trials, probe_p, probe_seed, probe_out);
  if (rates->parsed()) return cmd_rates(rates_p, !banach, rates_m, rates_out);
  return kExitInvalidConfig;
}
