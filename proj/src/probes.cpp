#include "holop/probes.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include "holop/util.hpp"

namespace holop {

namespace {

// int_A^inf t^(-a) log(t)^(-b) dt for a >= 1, b > 1, A > 1. For a = 1 the
// antiderivative is elementary; otherwise substitute u = log t and apply
// composite Simpson to the exponentially decaying integrand.
double log_power_tail_integral(double A, double a, double b) {
  const double u0 = std::log(A);
  if (a == 1.0) return std::pow(u0, 1.0 - b) / (b - 1.0);
  const double rate = a - 1.0;
  const double span = 80.0 / rate;  // exp(-80) cutoff
  const int n = 1 << 14;            // Simpson panels (even count)
  const double h = span / n;
  auto g = [&](double s) { return std::exp(-rate * s) * std::pow(u0 + s, -b); };
  double acc = g(0.0) + g(span);
  for (int i = 1; i < n; ++i) acc += (i % 2 ? 4.0 : 2.0) * g(i * h);
  return std::exp(-rate * u0) * (h / 3.0) * acc;
}

// sum_{i > L} (i log^2 i)^(-pow): midpoint integral remainder, Euler-Maclaurin
// error is O(f'(L)) and negligible at the head lengths used here.
double log_seq_tail(std::int64_t L, double pow_exp) {
  return log_power_tail_integral(static_cast<double>(L) + 0.5, pow_exp, 2.0 * pow_exp);
}

// head + analytic remainder for sum_{i >= 2} (i log^2 i)^(-pow)
double log_seq_sum(double pow_exp, std::int64_t head_len = 100000) {
  double s = 0.0;
  std::vector<double> terms;
  terms.reserve(head_len - 1);
  for (std::int64_t i = 2; i <= head_len; ++i) {
    const double li = std::log(static_cast<double>(i));
    terms.push_back(std::pow(static_cast<double>(i) * li * li, -pow_exp));
  }
  // ascending sum for accuracy
  for (std::size_t i = terms.size(); i-- > 0;) s += terms[i];
  return s + log_seq_tail(head_len, pow_exp);
}

double quantile(std::vector<double> v, double q) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const double pos = q * (v.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(pos);
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  const double frac = pos - lo;
  return v[lo] * (1.0 - frac) + v[hi] * frac;
}

}  // namespace

LowerBoundSequence LowerBoundSequence::flat(double p, int m) {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("flat: p in (0,1) required");
  if (m < 1) throw std::invalid_argument("flat: m >= 1 required");
  LowerBoundSequence s;
  s.kind_ = Kind::Flat2m;
  s.p_ = p;
  s.m_ = m;
  s.c_p_ = 1.0;
  return s;
}

LowerBoundSequence LowerBoundSequence::log_damped(double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("log_damped: p in (0,1) required");
  LowerBoundSequence s;
  s.kind_ = Kind::LogDamped;
  s.p_ = p;
  // ||t||_p^p = t_2^p + sum_{i>=2} (i log^2 i)^(-1) with t_1 = t_2
  const double g2 = 1.0 / (2.0 * std::log(2.0) * std::log(2.0));
  const double total = g2 + log_seq_sum(1.0);
  s.c_p_ = std::pow(total, -1.0 / p);
  return s;
}

double LowerBoundSequence::entry(std::int64_t i) const {
  if (i < 1) throw std::invalid_argument("entry: 1-based index");
  if (kind_ == Kind::Flat2m)
    return i <= 2 * static_cast<std::int64_t>(m_) ? std::pow(2.0 * m_, -1.0 / p_) : 0.0;
  const std::int64_t j = std::max<std::int64_t>(i, 2);  // b_1 = b_2
  const double lj = std::log(static_cast<double>(j));
  return c_p_ * std::pow(static_cast<double>(j) * lj * lj, -1.0 / p_);
}

double LowerBoundSequence::norm_p() const {
  if (kind_ == Kind::Flat2m) {
    // 2m equal entries of (2m)^(-1/p)
    return std::pow(2.0 * m_ * std::pow(std::pow(2.0 * m_, -1.0 / p_), p_), 1.0 / p_);
  }
  const double g2 = 1.0 / (2.0 * std::log(2.0) * std::log(2.0));
  const double total = g2 + log_seq_sum(1.0);
  return c_p_ * std::pow(total, 1.0 / p_);
}

double LowerBoundSequence::sigma_s(std::int64_t s, int q) const {
  if (s < 0) throw std::invalid_argument("sigma_s: s >= 0 required");
  if (q != 1 && q != 2) throw std::invalid_argument("sigma_s: q in {1,2}");
  if (kind_ == Kind::Flat2m) {
    const std::int64_t total = 2 * static_cast<std::int64_t>(m_);
    const std::int64_t tail = std::max<std::int64_t>(0, total - s);
    double acc = 0.0;
    const double b = std::pow(2.0 * m_, -1.0 / p_);
    for (std::int64_t i = 0; i < tail; ++i) acc += std::pow(b, q);  // direct summation
    return std::pow(acc, 1.0 / static_cast<double>(q));
  }
  // log-damped: head + analytic remainder (entry(1) duplicates entry(2))
  const double pow_exp = static_cast<double>(q) / p_;
  const std::int64_t head = s + 100000;
  double acc = 0.0;
  for (std::int64_t i = head; i > s; --i) acc += std::pow(entry(i), q);
  acc += std::pow(c_p_, q) * log_seq_tail(head, pow_exp);
  return std::pow(acc, 1.0 / static_cast<double>(q));
}

std::optional<double> LowerBoundSequence::sigma_s_closed_form(std::int64_t s, int q) const {
  if (kind_ != Kind::Flat2m) return std::nullopt;
  const std::int64_t total = 2 * static_cast<std::int64_t>(m_);
  const std::int64_t tail = std::max<std::int64_t>(0, total - s);
  return std::pow(static_cast<double>(tail), 1.0 / static_cast<double>(q)) *
         std::pow(2.0 * m_, -1.0 / p_);
}

SigmaPair sigma_s_closed_forms(const LowerBoundSequence& seq, std::int64_t s, int q) {
  return {seq.sigma_s(s, q), seq.sigma_s_closed_form(s, q)};
}

std::vector<RateFloorRow> rate_floor(LowerBoundSequence::Kind kind, double p,
                                     const std::vector<int>& m_values, int norm_q) {
  std::vector<RateFloorRow> rows;
  std::optional<LowerBoundSequence> fixed;
  if (kind == LowerBoundSequence::Kind::LogDamped) fixed = LowerBoundSequence::log_damped(p);
  for (int m : m_values) {
    LowerBoundSequence seq =
        fixed ? *fixed : LowerBoundSequence::flat(p, m);
    RateFloorRow row;
    row.m = m;
    if (norm_q == 2) {
      row.floor_rate = std::pow(static_cast<double>(m), 0.5 - 1.0 / p);
      row.sigma_based = seq.sigma_s(m, 2);
    } else {
      row.floor_rate = std::pow(static_cast<double>(m), 1.0 - 1.0 / p);
      row.sigma_based = seq.sigma_s(m, 1) / std::log(static_cast<double>(m));
    }
    rows.push_back(row);
  }
  return rows;
}

SpikinessReport nullspace_spikiness(const std::vector<int>& m_values, int trials,
                                    std::uint64_t seed) {
  if (trials < 1) throw std::invalid_argument("nullspace_spikiness: trials >= 1");
  SpikinessReport report;
  report.m_values = m_values;
  for (int m : m_values) {
    std::vector<double> stats;
    int redraws = 0;
    for (int t = 0; t < trials; ++t) {
      for (int redraw = 0;; ++redraw) {
        auto eng = keyed_engine(hash_combine(seed, m, t), redraw);
        Eigen::MatrixXd A(m, m + 1);
        for (int i = 0; i < m; ++i)
          for (int j = 0; j <= m; ++j) A(i, j) = uniform_pm1(eng);
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeFullV);
        const auto& sv = svd.singularValues();
        if (sv(m - 1) < 1e-12 * sv(0)) {  // null dimension > 1 (up to tolerance)
          ++redraws;
          continue;
        }
        Eigen::VectorXd u = svd.matrixV().col(m);
        const double viol = (A * u).lpNorm<Eigen::Infinity>();
        if (viol > 1e-10) {
          ++redraws;
          continue;
        }
        const double stat = (m + 1) * u.lpNorm<Eigen::Infinity>() *
                            u.lpNorm<Eigen::Infinity>() / u.squaredNorm();
        stats.push_back(stat);
        break;
      }
    }
    report.redraws.push_back(redraws);
    report.median.push_back(quantile(stats, 0.5));
    report.q10.push_back(quantile(stats, 0.1));
    report.q90.push_back(quantile(stats, 0.9));
    report.statistics.push_back(std::move(stats));
  }
  return report;
}

SigmaMinReport subgaussian_sigma_min(int m, int r, int trials, std::uint64_t seed) {
  if (r < m) throw std::invalid_argument("subgaussian_sigma_min: r >= m required");
  SigmaMinReport report;
  report.m = m;
  report.r = r;
  report.trials = trials;
  report.threshold = std::sqrt(report.omega) / 2.0;
  int hits = 0;
  for (int t = 0; t < trials; ++t) {
    auto eng = keyed_engine(seed, t);
    // B'' entries are sqrt(3)/sqrt(r) * uniform[-1,1]
    Eigen::MatrixXd B(r, m);
    const double scale = std::sqrt(3.0) / std::sqrt(static_cast<double>(r));
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < m; ++j) B(i, j) = scale * uniform_pm1(eng);
    Eigen::BDCSVD<Eigen::MatrixXd> svd(B);
    const double smin = svd.singularValues()(m - 1);
    report.sigma_min.push_back(smin);
    if (smin >= report.threshold) ++hits;
  }
  report.fraction = static_cast<double>(hits) / trials;
  report.q10 = quantile(report.sigma_min, 0.1);
  report.median = quantile(report.sigma_min, 0.5);
  report.q90 = quantile(report.sigma_min, 0.9);
  return report;
}

void write_spikiness_csv(std::ostream& os, const SpikinessReport& report,
                         std::uint64_t manifest) {
  os << "# manifest " << std::hex << manifest << std::dec << '\n';
  os << "m,trial,statistic\n";
  for (std::size_t mi = 0; mi < report.m_values.size(); ++mi)
    for (std::size_t t = 0; t < report.statistics[mi].size(); ++t)
      os << report.m_values[mi] << ',' << t << ',' << format_full(report.statistics[mi][t])
         << '\n';
}

void write_spikiness_summary_csv(std::ostream& os, const SpikinessReport& report,
                                 std::uint64_t manifest) {
  os << "# manifest " << std::hex << manifest << std::dec << '\n';
  os << "m,median,q10,q90,redraws\n";
  for (std::size_t mi = 0; mi < report.m_values.size(); ++mi)
    os << report.m_values[mi] << ',' << format_full(report.median[mi]) << ','
       << format_full(report.q10[mi]) << ',' << format_full(report.q90[mi]) << ','
       << report.redraws[mi] << '\n';
}

void write_sigma_min_csv(std::ostream& os, const SigmaMinReport& report,
                         std::uint64_t manifest) {
  os << "# manifest " << std::hex << manifest << std::dec << '\n';
  os << "m,r,trial,sigma_min,threshold\n";
  for (std::size_t t = 0; t < report.sigma_min.size(); ++t)
    os << report.m << ',' << report.r << ',' << t << ',' << format_full(report.sigma_min[t])
       << ',' << format_full(report.threshold) << '\n';
}

void write_rate_floor_csv(std::ostream& os, const std::vector<RateFloorRow>& rows,
                          std::uint64_t manifest) {
  os << "# manifest " << std::hex << manifest << std::dec << '\n';
  os << "m,floor_rate,sigma_based\n";
  for (const auto& row : rows)
    os << row.m << ',' << format_full(row.floor_rate) << ','
       << format_full(row.sigma_based) << '\n';
}

}  // namespace holop
