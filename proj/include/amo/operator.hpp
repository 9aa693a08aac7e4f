#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "amo/arith.hpp"
#include "json.hpp"

namespace amo::op {

using Mat2 = std::array<double, 4>;  // row-major [[a, b], [c, d]]
using Vec2 = std::array<double, 2>;

// (H u)(n) = u(n+1) + u(n-1) + 2 lambda cos(2 pi (theta + n alpha)) u(n)
class AlmostMathieu {
 public:
  AlmostMathieu(double lambda, std::shared_ptr<const arith::Frequency> freq, double theta);
  static AlmostMathieu free(std::shared_ptr<const arith::Frequency> freq, double theta = 0.0) {
    return AlmostMathieu(0.0, std::move(freq), theta);
  }

  double lambda() const { return lambda_; }
  double theta() const { return theta_; }
  const arith::Frequency& frequency() const { return *freq_; }
  std::shared_ptr<const arith::Frequency> frequency_ptr() const { return freq_; }
  const arith::PhaseReducer& reducer() const { return red_; }

  // {phase + k alpha}
  double phase_at(double phase, std::int64_t k) const { return red_.orbit(phase, k); }
  double v_of_phase(double phase) const;
  // v(theta + n alpha)
  double potential(std::int64_t n) const { return v_of_phase(phase_at(theta_, n)); }

 private:
  double lambda_;
  std::shared_ptr<const arith::Frequency> freq_;
  double theta_;
  arith::PhaseReducer red_;
};

// Product e^{log_scale} * matrix. Accumulated in QR form (orthogonal times
// upper triangular, diagonal kept in logs), so the determinant survives growth.
struct TransferProduct {
  Mat2 matrix{1, 0, 0, 1};
  double log_scale = 0.0;
  std::int64_t steps = 0;

  // ln|det| accumulated from the triangular factors, independent of the
  // (cancellation-prone) determinant of the mantissa.
  double log_abs_det_tracked = 0.0;

  double log_norm() const;            // ln of the operator 2-norm
  double log_abs_det_direct() const;  // ln|det| from the mantissa entries
  Vec2 apply(const Vec2& v) const;    // mantissa of product * v (scale e^{log_scale})
};

// A_k(theta) for k > 0: A(theta + (k-1) alpha) ... A(theta); for k < 0 the
// product of the inverse one-step matrices at theta - j alpha, j = 1..|k|.
TransferProduct transfer_product(const AlmostMathieu& op, double E, double theta, std::int64_t k);

struct LyapunovEstimate {
  double value = 0.0;
  double error_proxy = 0.0;  // |estimate over the full run - estimate over the first half|
  std::int64_t steps = 0;
};

LyapunovEstimate lyapunov(const AlmostMathieu& op, double E, std::int64_t n_steps);

// Signed value sign * e^{log_abs}; `zero` flags cancellation to roughly machine
// precision relative to the size of the last recurrence terms.
struct LogDet {
  double log_abs = 0.0;
  int sign = 1;
  bool zero = false;
};

// det(E - H) restricted to the k sites with phases theta + j alpha, j = 0..k-1.
LogDet pk_det(const AlmostMathieu& op, double E, double theta, std::int64_t k);

struct GreenEntry {
  double log_g_x1_y = 0.0;  // ln |G_[x1,x2](x1, y)|
  double log_g_y_x2 = 0.0;  // ln |G_[x1,x2](y, x2)|
};

// Cramer's rule for the restriction of H - E to [x1, x2].
GreenEntry green_entry(const AlmostMathieu& op, double E, std::int64_t x1, std::int64_t x2,
                       std::int64_t y);

struct RegularityResult {
  bool regular = false;
  std::optional<std::int64_t> x1;  // smallest admissible left end that works
  // min over tested windows of max(ln|G(x1,y)| + t|y-x1|, ln|G(y,x2)| + t|y-x2|)
  double best_excess = 0.0;
};

// y is (t, k)-regular if some [x1, x2], x2 = x1 + k - 1, with y - x1 >= k/5 and
// x2 - y >= k/5 has |G(x1,y)| <= e^{-t|y-x1|} and |G(y,x2)| <= e^{-t|y-x2|}.
RegularityResult regularity_check(const AlmostMathieu& op, double E, std::int64_t y, double t,
                                  std::int64_t k);

struct UniformityResult {
  bool uniform = false;
  double max_log_product = 0.0;
  double max_product = 0.0;
};

// Lagrange-basis products over the nodes cos(2 pi theta_i):
// max_{x in [-1,1], i} prod_{j != i} |x - c_j| / |c_i - c_j| compared with e^{k eps}.
UniformityResult uniformity_check(const std::vector<double>& theta_set, double eps, std::size_t k);

enum class ResonanceKind { Resonant, Nonresonant };

struct ResonanceVerdict {
  ResonanceKind kind = ResonanceKind::Nonresonant;
  std::size_t n = 0;
  double b_n = 0.0;
  std::int64_t ell = 0;       // nearest multiple index, k = ell q_n + r
  std::int64_t r = 0;
  std::int64_t dist = 0;      // distance from k to the nearest multiple of q_n
  std::optional<std::size_t> n0;
  std::optional<std::int64_t> s;
};

ResonanceVerdict classify_resonance(const arith::Frequency& freq, double t2, std::size_t n,
                                    std::int64_t k);

// Generalized eigenfunction sampled on [n_min, n_max]; value(n) = mantissa(n) e^{log_scale(n)}.
class SolutionProfile {
 public:
  static SolutionProfile from_values(std::int64_t n_min, std::vector<double> values, double E,
                                     std::optional<double> x = std::nullopt);

  std::int64_t n_min() const { return n_min_; }
  std::int64_t n_max() const { return n_min_ + static_cast<std::int64_t>(mant_.size()) - 1; }
  bool contains(std::int64_t n) const { return n >= n_min() && n <= n_max(); }
  double mantissa(std::int64_t n) const { return mant_.at(idx(n)); }
  double log_scale(std::int64_t n) const { return scale_.at(idx(n)); }
  double value(std::int64_t n) const;
  double log_abs(std::int64_t n) const;  // -inf for an exact zero
  double E() const { return E_; }
  std::optional<double> x() const { return x_; }

 private:
  friend SolutionProfile solution_profile(const AlmostMathieu&, double, double, std::int64_t,
                                          std::int64_t);
  std::size_t idx(std::int64_t n) const;
  std::int64_t n_min_ = 0;
  std::vector<double> mant_, scale_;
  double E_ = 0.0;
  std::optional<double> x_;
};

// Solution with u(0) = sin(2 pi x), u(1) = -cos(2 pi x) on [n_min, n_max] (must contain 0 and 1).
SolutionProfile solution_profile(const AlmostMathieu& op, double E, double x, std::int64_t n_min,
                                 std::int64_t n_max);

// ||u||^2_{L1,L2}: full sites 0..[L1] and -1..-[L2], plus fractional end sites.
double norm_l1l2(const SolutionProfile& u, double L1, double L2);
double log_norm_sq_l1l2(const SolutionProfile& u, double L1, double L2);

struct DecayWindowReport {
  bool empty = true;
  double lower = 0.0;   // 2 q_n^2 q_{n+1}^{t1}
  double upper = 0.0;   // q_{n+1}^{t2}
  double rate = 0.0;    // ln lambda - (1 - t1) beta
  double target = 0.0;  // rate - slack
  std::size_t n_checked = 0;
  std::size_t n_pass = 0;
  double pass_fraction = 0.0;
  std::optional<std::int64_t> worst_k;
  double worst_excess = 0.0;  // max of ln|phi(k)| + target |k|
};

struct DecayWindowOptions {
  double beta = 0.0;   // arithmetic exponent of the frequency
  double slack = 0.1;
};

// On resonant |k| in the window and inside the profile, checks
// ln|phi(k)| <= -(rate - slack)|k| for phi normalized to phi(0)^2 + phi(1)^2 = 1.
DecayWindowReport decay_window_check(const AlmostMathieu& op, const SolutionProfile& phi, double t1,
                                     double t2, std::size_t n, const DecayWindowOptions& opts);

// Wronskian u(n+1) v(n) - u(n) v(n+1)
double wronskian(const SolutionProfile& u, const SolutionProfile& v, std::int64_t n);

nlohmann::ordered_json to_json(const DecayWindowReport& r);
nlohmann::ordered_json to_json(const ResonanceVerdict& r);

}  // namespace amo::op
