#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

namespace holop {

// Normalized lower-bound coefficient sequences: flat (b_i = (2m)^{-1/p} for
// i <= 2m) and log-damped (b_i = c_p (i log^2 i)^{-1/p}, i >= 2, b_1 = b_2,
// normalized so ||b||_p = 1). Tail sums of the log-damped sequence are
// evaluated as a partial sum plus an analytic Euler-Maclaurin remainder; a
// literal truncation at lp-tail 1e-14 is out of reach for this sequence.
class LowerBoundSequence {
 public:
  enum class Kind { Flat2m, LogDamped };

  static LowerBoundSequence flat(double p, int m);
  static LowerBoundSequence log_damped(double p);

  Kind kind() const { return kind_; }
  double p() const { return p_; }
  int m() const { return m_; }
  double normalization() const { return c_p_; }

  double entry(std::int64_t i) const;  // 1-based
  double norm_p() const;               // should be 1 by construction
  // tail q-norm after removing the s largest entries (sequence nonincreasing)
  double sigma_s(std::int64_t s, int q) const;
  // exact expression where one exists (flat sequence)
  std::optional<double> sigma_s_closed_form(std::int64_t s, int q) const;

 private:
  Kind kind_ = Kind::Flat2m;
  double p_ = 0.5;
  int m_ = 0;
  double c_p_ = 1.0;
};

struct SigmaPair {
  double numeric;
  std::optional<double> closed_form;
};

SigmaPair sigma_s_closed_forms(const LowerBoundSequence& seq, std::int64_t s, int q);

struct RateFloorRow {
  int m;
  double floor_rate;  // m^(1/2-1/p) for q=2, m^(1-1/p) for q=inf
  double sigma_based;   // sigma_m(b)_2, or sigma_m(b)_1 / log(m)
};

// norm_q: 2 or 0 (0 denotes the sup-norm case). The flat construction is
// per-m; the log-damped sequence is fixed across m.
std::vector<RateFloorRow> rate_floor(LowerBoundSequence::Kind kind, double p,
                                     const std::vector<int>& m_values, int norm_q);

struct SpikinessReport {
  std::vector<int> m_values;
  std::vector<std::vector<double>> statistics;  // per m, per trial: (m+1)*||u||_inf^2
  std::vector<int> redraws;                     // rank-deficient draws per m
  std::vector<double> median, q10, q90;
};

// Unit null vectors of m x (m+1) iid uniform matrices via the last right
// singular direction; rank-deficient draws are redrawn and counted.
SpikinessReport nullspace_spikiness(const std::vector<int>& m_values, int trials,
                                    std::uint64_t seed);

struct SigmaMinReport {
  int m = 0, r = 0, trials = 0;
  double omega = 1.0 / 3.0;
  double threshold = 0.0;  // sqrt(omega)/2
  double fraction = 0.0;   // fraction of trials with sigma_min >= threshold
  std::vector<double> sigma_min;  // per trial
  double q10 = 0.0, median = 0.0, q90 = 0.0;
};

// B'' = (sqrt(3) sqrt(omega) / sqrt(r)) A with A an r x m standardized
// uniform matrix; reports the empirical distribution of sigma_min(B'').
SigmaMinReport subgaussian_sigma_min(int m, int r, int trials, std::uint64_t seed);

// CSV emitters: raw rows (m, trial, statistic) and summary (m, median, q10, q90).
void write_spikiness_csv(std::ostream& os, const SpikinessReport& report,
                         std::uint64_t manifest);
void write_spikiness_summary_csv(std::ostream& os, const SpikinessReport& report,
                                 std::uint64_t manifest);
void write_sigma_min_csv(std::ostream& os, const SigmaMinReport& report,
                         std::uint64_t manifest);
void write_rate_floor_csv(std::ostream& os, const std::vector<RateFloorRow>& rows,
                          std::uint64_t manifest);

}  // namespace holop
