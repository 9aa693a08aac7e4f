#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/multiprecision/cpp_int.hpp>

#include "json.hpp"

namespace amo::arith {

using BigInt = boost::multiprecision::cpp_int;
using HighPrec = boost::multiprecision::number<boost::multiprecision::cpp_bin_float<240>,
                                               boost::multiprecision::et_off>;

inline constexpr int kWorkingDigits = 230;

struct Convergent {
  BigInt p;
  BigInt q;
};

// alpha = [0; a_1, a_2, ..., a_N] in (0,1) with its convergents p_n/q_n, n = 0..N,
// where (p_0, q_0) = (0, 1).
class Frequency {
 public:
  // `value` is the high-precision alpha when it is known independently of the
  // partial quotients; otherwise p_N/q_N is used.
  static Frequency from_partial_quotients(std::vector<BigInt> a,
                                          std::optional<HighPrec> value = std::nullopt,
                                          bool truncated = false);

  const std::vector<BigInt>& partial_quotients() const { return a_; }
  const std::vector<Convergent>& convergents() const { return conv_; }
  const Convergent& convergent(std::size_t n) const { return conv_.at(n); }
  const BigInt& q(std::size_t n) const { return conv_.at(n).q; }
  double q_double(std::size_t n) const;
  // Number of partial quotients N; convergents run 0..N.
  std::size_t depth() const { return a_.size(); }
  const HighPrec& value() const { return value_; }
  double shadow() const { return shadow_; }
  // True when expansion stopped because the input precision ran out.
  bool truncated() const { return truncated_; }

 private:
  std::vector<BigInt> a_;
  std::vector<Convergent> conv_;
  HighPrec value_;
  double shadow_ = 0.0;
  bool truncated_ = false;
};

struct ParsedAlpha {
  HighPrec value;
  int digits;  // significant decimal digits the value is trusted to
};

// Accepts "golden", "sqrt2-1", "pi-3", "e-2" or a decimal literal in (0,1).
ParsedAlpha parse_alpha(std::string_view text);

// Continued-fraction expansion, at most n_max partial quotients. Expansion stops
// early (truncated() == true) once the partial quotients are no longer
// determined by `significant_digits` digits of alpha. Throws NumericalError
// ("rational input") if alpha is, to working precision, a rational whose
// expansion terminates before n_max.
Frequency cf_expand(const HighPrec& alpha, int n_max, int significant_digits = kWorkingDigits);

// Greedy synthesis: a_{n+1} = max(1, ceil(e^{beta q_n} / q_n)), stopping before
// q would exceed q_cap. Needs at least three scales q_1..q_N.
Frequency cf_synthesize(double beta_target, const BigInt& q_cap);

struct BetaEstimate {
  double value = 0.0;             // max of per_n over the tail
  std::vector<double> per_n;      // ln(q_{n+1}) / q_n for n = 0..N-1
  std::size_t tail_start = 0;
};

BetaEstimate beta_estimate(const Frequency& freq, std::size_t tail_start);

struct DiophantineParams {
  double kappa = 1e-2;
  double nu = 8.0;
  std::int64_t k_max = 10000;
};

struct DiophantineResult {
  bool holds = true;
  std::optional<std::int64_t> worst_k;  // signed k attaining the smallest margin
  double worst_margin = std::numeric_limits<double>::infinity();
};

// Checks ||2 theta + k alpha|| >= kappa / |k|^nu for 0 < |k| <= k_max.
DiophantineResult diophantine_check(double theta, const Frequency& freq,
                                    const DiophantineParams& params);

// Distance to the nearest integer.
double torus_distance(double x);

// Reduces k*alpha mod 1 through the deepest convergent p/q with q < 2^62:
// {k alpha} = {(k p mod q)/q + k (alpha - p/q)} with the correction taken from
// the high-precision value.
class PhaseReducer {
 public:
  explicit PhaseReducer(const Frequency& freq);

  double frac_multiple(std::int64_t k) const;
  double orbit(double theta, std::int64_t k) const;
  // Rough bound on the absolute error of frac_multiple(k).
  double error_bound(std::int64_t k) const;

  std::int64_t p() const { return p_; }
  std::int64_t q() const { return q_; }
  double delta() const { return delta_; }

 private:
  std::int64_t p_ = 0;
  std::int64_t q_ = 1;
  double delta_ = 0.0;
};

nlohmann::ordered_json to_json(const Frequency& freq);
Frequency frequency_from_json(const nlohmann::json& j);
nlohmann::ordered_json to_json(const BetaEstimate& b);

std::string to_string(const BigInt& v);
double to_double(const HighPrec& v);

}  // namespace amo::arith
