#include "amo/operator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "amo/error.hpp"

namespace amo::op {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double hi = std::max(a, b), lo = std::min(a, b);
  return hi + std::log1p(std::exp(lo - hi));
}

// Product kept as e^{l11} Q [[1, rho], [0, tau]]; folds the diagonal factors
// into logarithms every 64 steps.
class QrAccumulator {
 public:
  void step(double a00, double a01, double a10, double a11) {
    // B = A Q
    const double b00 = a00 * q_[0] + a01 * q_[2];
    const double b01 = a00 * q_[1] + a01 * q_[3];
    const double b10 = a10 * q_[0] + a11 * q_[2];
    const double b11 = a10 * q_[1] + a11 * q_[3];
    const double r = std::hypot(b00, b10);
    const double c = b00 / r, s = b10 / r;
    const double r12 = c * b01 + s * b11;
    const double r22 = -s * b01 + c * b11;
    q_ = {c, -s, s, c};
    // R_new = R' R with R' = [[r, r12], [0, r22]].
    rho_ += (r12 / r) * tau_;
    tau_ *= r22 / r;
    p11_ *= r;
    p22_ *= r22;
    if (++pending_ == 64 || std::abs(p11_) > 1e100 || std::abs(p22_) < 1e-100) fold();
  }

  TransferProduct result(std::int64_t steps) {
    fold();
    TransferProduct t;
    // Mantissa Q * [[1, rho], [0, tau]]
    t.matrix = {q_[0], q_[0] * rho_ + q_[1] * tau_, q_[2], q_[2] * rho_ + q_[3] * tau_};
    t.log_scale = l11_;
    t.steps = steps;
    t.log_abs_det_tracked = l11_ + l22_;
    return t;
  }

  double log_norm_now() {
    fold();
    return l11_ + 0.5 * std::log(norm_sq_upper(rho_, tau_));
  }

  static double norm_sq_upper(double rho, double tau) {
    // largest eigenvalue of U^T U for U = [[1, rho], [0, tau]]
    const double f = 1.0 + rho * rho + tau * tau;
    const double det = tau * tau;
    return 0.5 * (f + std::sqrt(std::max(0.0, f * f - 4.0 * det)));
  }

 private:
  void fold() {
    if (pending_ == 0) return;
    l11_ += std::log(std::abs(p11_));
    l22_ += std::log(std::abs(p22_));
    // tau tracks r22/r11; refresh it from the logs to keep it consistent.
    const double sgn = (tau_ < 0) ? -1.0 : 1.0;
    tau_ = sgn * std::exp(l22_ - l11_);
    p11_ = p22_ = 1.0;
    pending_ = 0;
  }

  std::array<double, 4> q_{1, 0, 0, 1};
  double rho_ = 0.0, tau_ = 1.0;
  double p11_ = 1.0, p22_ = 1.0;
  double l11_ = 0.0, l22_ = 0.0;
  int pending_ = 0;
};

}  // namespace

AlmostMathieu::AlmostMathieu(double lambda, std::shared_ptr<const arith::Frequency> freq, double theta)
    : lambda_(lambda), freq_(std::move(freq)), theta_(theta), red_(*freq_) {
  require(std::isfinite(lambda) && lambda >= 0, "coupling must be finite and non-negative");
  require(std::isfinite(theta), "phase must be finite");
  theta_ -= std::floor(theta_);
}

double AlmostMathieu::v_of_phase(double phase) const {
  return 2.0 * lambda_ * std::cos(kTwoPi * phase);
}

double TransferProduct::log_norm() const {
  const double a = matrix[0], b = matrix[1], c = matrix[2], d = matrix[3];
  const double f = a * a + b * b + c * c + d * d;
  const double det_m = std::exp(log_abs_det_tracked - 2.0 * log_scale);
  const double s2 = 0.5 * (f + std::sqrt(std::max(0.0, f * f - 4.0 * det_m * det_m)));
  return log_scale + 0.5 * std::log(s2);
}

double TransferProduct::log_abs_det_direct() const {
  const double det_m = matrix[0] * matrix[3] - matrix[1] * matrix[2];
  return std::log(std::abs(det_m)) + 2.0 * log_scale;
}

Vec2 TransferProduct::apply(const Vec2& v) const {
  return {matrix[0] * v[0] + matrix[1] * v[1], matrix[2] * v[0] + matrix[3] * v[1]};
}

TransferProduct transfer_product(const AlmostMathieu& op, double E, double theta, std::int64_t k) {
  require(std::isfinite(E), "energy must be finite");
  QrAccumulator acc;
  if (k >= 0) {
    for (std::int64_t j = 0; j < k; ++j) {
      const double a = E - op.v_of_phase(op.phase_at(theta, j));
      acc.step(a, -1.0, 1.0, 0.0);
    }
  } else {
    for (std::int64_t j = 1; j <= -k; ++j) {
      const double a = E - op.v_of_phase(op.phase_at(theta, -j));
      acc.step(0.0, 1.0, -1.0, a);
    }
  }
  return acc.result(k);
}

LyapunovEstimate lyapunov(const AlmostMathieu& op, double E, std::int64_t n_steps) {
  require(n_steps >= 2, "need at least two steps");
  QrAccumulator acc;
  const std::int64_t half = n_steps / 2;
  double first = 0.0;
  for (std::int64_t j = 0; j < n_steps; ++j) {
    const double a = E - op.v_of_phase(op.phase_at(op.theta(), j));
    acc.step(a, -1.0, 1.0, 0.0);
    if (j + 1 == half) first = acc.log_norm_now() / static_cast<double>(half);
  }
  LyapunovEstimate est;
  est.steps = n_steps;
  est.value = acc.log_norm_now() / static_cast<double>(n_steps);
  est.error_proxy = std::abs(est.value - first);
  return est;
}

LogDet pk_det(const AlmostMathieu& op, double E, double theta, std::int64_t k) {
  require(k >= 0, "block length must be non-negative");
  LogDet out;
  if (k == 0) return out;
  double prev = 0.0, cur = 1.0, scale = 0.0;  // P_{j-1}, P_j (mantissas)
  double last_terms = 0.0;
  for (std::int64_t j = 1; j <= k; ++j) {
    const double a = E - op.v_of_phase(op.phase_at(theta, j - 1));
    const double next = a * cur - prev;
    last_terms = std::abs(a * cur) + std::abs(prev);
    prev = cur;
    cur = next;
    const double mag = std::max(std::abs(cur), std::abs(prev));
    if (mag > 1e150 || (mag < 1e-150 && mag > 0)) {
      cur /= mag;
      prev /= mag;
      last_terms /= mag;
      scale += std::log(mag);
    }
  }
  out.zero = std::abs(cur) <= 1e-13 * last_terms;
  out.sign = cur < 0 ? -1 : 1;
  out.log_abs = cur == 0.0 ? kNegInf : std::log(std::abs(cur)) + scale;
  return out;
}

GreenEntry green_entry(const AlmostMathieu& op, double E, std::int64_t x1, std::int64_t x2,
                       std::int64_t y) {
  require(x1 <= y && y <= x2, "need x1 <= y <= x2");
  const std::int64_t k = x2 - x1 + 1;
  const double th1 = op.phase_at(op.theta(), x1);
  const LogDet den = pk_det(op, E, th1, k);
  if (den.zero) throw NumericalError("E is (numerically) an eigenvalue of the restriction");
  const LogDet left = pk_det(op, E, op.phase_at(op.theta(), y + 1), x2 - y);
  const LogDet right = pk_det(op, E, th1, y - x1);
  return {left.log_abs - den.log_abs, right.log_abs - den.log_abs};
}

RegularityResult regularity_check(const AlmostMathieu& op, double E, std::int64_t y, double t,
                                  std::int64_t k) {
  require(k >= 10, "regularity needs k >= 10");
  require(t > 0, "t must be positive");
  const double fifth = static_cast<double>(k) / 5.0;
  const auto lo = static_cast<std::int64_t>(std::ceil(static_cast<double>(y - k + 1) + fifth));
  const auto hi = static_cast<std::int64_t>(std::floor(static_cast<double>(y) - fifth));
  RegularityResult res;
  res.best_excess = std::numeric_limits<double>::infinity();
  for (std::int64_t x1 = lo; x1 <= hi; ++x1) {
    const std::int64_t x2 = x1 + k - 1;
    GreenEntry g;
    try {
      g = green_entry(op, E, x1, x2, y);
    } catch (const NumericalError&) {
      continue;
    }
    const double e1 = g.log_g_x1_y + t * static_cast<double>(y - x1);
    const double e2 = g.log_g_y_x2 + t * static_cast<double>(x2 - y);
    const double ex = std::max(e1, e2);
    res.best_excess = std::min(res.best_excess, ex);
    if (ex <= 0.0 && !res.regular) {
      res.regular = true;
      res.x1 = x1;
    }
  }
  return res;
}

UniformityResult uniformity_check(const std::vector<double>& theta_set, double eps, std::size_t k) {
  require(theta_set.size() == k + 1, "uniformity needs exactly k+1 phases");
  require(eps > 0, "eps must be positive");
  const std::size_t n = theta_set.size();
  std::vector<double> c(n);
  for (std::size_t i = 0; i < n; ++i) c[i] = std::cos(kTwoPi * theta_set[i]);
  std::vector<double> denom(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const double d = std::abs(c[i] - c[j]);
      if (d < 1e-14) throw InvalidArgument("degenerate node set");
      denom[i] += std::log(d);
    }

  std::vector<double> xs;
  const std::size_t m = 8 * n;
  for (std::size_t i = 0; i < m; ++i)
    xs.push_back(std::cos(std::numbers::pi * (static_cast<double>(i) + 0.5) / static_cast<double>(m)));
  xs.push_back(1.0);
  xs.push_back(-1.0);

  UniformityResult res;
  res.max_log_product = kNegInf;
  for (double x : xs) {
    double total = 0.0;
    std::size_t hit = n;
    for (std::size_t j = 0; j < n; ++j) {
      const double d = std::abs(x - c[j]);
      if (d == 0.0)
        hit = j;
      else
        total += std::log(d);
    }
    for (std::size_t i = 0; i < n; ++i) {
      double lp;
      if (hit == n)
        lp = total - std::log(std::abs(x - c[i])) - denom[i];
      else if (hit == i)
        lp = total - denom[i];
      else
        lp = kNegInf;
      res.max_log_product = std::max(res.max_log_product, lp);
    }
  }
  res.max_product = std::exp(res.max_log_product);
  res.uniform = res.max_log_product < static_cast<double>(k) * eps;
  return res;
}

ResonanceVerdict classify_resonance(const arith::Frequency& freq, double t2, std::size_t n,
                                    std::int64_t k) {
  require(t2 > 0 && t2 < 1, "t2 must lie in (0,1)");
  require(n <= freq.depth(), "convergent index beyond the expansion");
  require(k >= 0, "k must be non-negative");
  require(freq.q(n) < (arith::BigInt(1) << 62), "q_n too large for integer classification");
  const auto q = static_cast<std::int64_t>(freq.q(n));
  ResonanceVerdict v;
  v.n = n;
  v.b_n = std::exp(t2 * std::log(static_cast<double>(q)));
  std::int64_t ell = k / q, rem = k % q;
  if (2 * rem > q) {
    ++ell;
    rem -= q;
  }
  v.ell = ell;
  v.r = rem;
  v.dist = rem < 0 ? -rem : rem;
  if (static_cast<double>(v.dist) <= v.b_n) {
    v.kind = ResonanceKind::Resonant;
    return v;
  }
  v.kind = ResonanceKind::Nonresonant;
  for (std::size_t n0 = 1; n0 <= n; ++n0) {
    const auto qq = static_cast<std::int64_t>(freq.q(n - n0));
    if (4 * qq <= v.dist) {
      v.n0 = n0;
      v.s = v.dist / (4 * qq);
      break;
    }
  }
  return v;
}

std::size_t SolutionProfile::idx(std::int64_t n) const {
  if (!contains(n)) throw InvalidArgument("site " + std::to_string(n) + " outside the profile window");
  return static_cast<std::size_t>(n - n_min_);
}

double SolutionProfile::value(std::int64_t n) const {
  const std::size_t i = idx(n);
  return mant_[i] * std::exp(scale_[i]);
}

double SolutionProfile::log_abs(std::int64_t n) const {
  const std::size_t i = idx(n);
  return mant_[i] == 0.0 ? kNegInf : std::log(std::abs(mant_[i])) + scale_[i];
}

SolutionProfile SolutionProfile::from_values(std::int64_t n_min, std::vector<double> values, double E,
                                             std::optional<double> x) {
  require(!values.empty(), "empty profile");
  SolutionProfile p;
  p.n_min_ = n_min;
  p.scale_.assign(values.size(), 0.0);
  p.mant_ = std::move(values);
  p.E_ = E;
  p.x_ = x;
  return p;
}

SolutionProfile solution_profile(const AlmostMathieu& op, double E, double x, std::int64_t n_min,
                                 std::int64_t n_max) {
  require(n_min <= 0 && n_max >= 1, "window must contain sites 0 and 1");
  SolutionProfile p;
  p.n_min_ = n_min;
  p.E_ = E;
  p.x_ = x;
  const auto len = static_cast<std::size_t>(n_max - n_min + 1);
  p.mant_.assign(len, 0.0);
  p.scale_.assign(len, 0.0);
  auto at = [&](std::int64_t n) { return static_cast<std::size_t>(n - n_min); };
  const double u0 = std::sin(kTwoPi * x), u1 = -std::cos(kTwoPi * x);
  p.mant_[at(0)] = u0;
  p.mant_[at(1)] = u1;

  // long double keeps the Wronskian of moderate solutions near 1 over long runs
  auto run = [&](std::int64_t start, std::int64_t stop, int dir, long double behind, long double here) {
    // dir = +1: u(n+1) = (E - v(n)) u(n) - u(n-1); dir = -1 mirrors it.
    double s = 0.0;
    for (std::int64_t n = start; n != stop; n += dir) {
      const long double next = static_cast<long double>(E - op.potential(n)) * here - behind;
      behind = here;
      here = next;
      const long double mag = std::max(std::abs(here), std::abs(behind));
      if (mag > 1e150L) {
        here /= mag;
        behind /= mag;
        s += static_cast<double>(std::log(mag));
      }
      p.mant_[at(n + dir)] = static_cast<double>(here);
      p.scale_[at(n + dir)] = s;
    }
  };
  run(1, n_max, +1, u0, u1);
  run(0, n_min, -1, u1, u0);
  return p;
}

double log_norm_sq_l1l2(const SolutionProfile& u, double L1, double L2) {
  require(L1 >= 0 && L2 >= 0, "L1, L2 must be non-negative");
  double acc = kNegInf;
  auto add = [&](std::int64_t n, double w) {
    if (w <= 0) return;
    const double la = u.log_abs(n);
    if (la == kNegInf) return;
    acc = log_add(acc, 2.0 * la + std::log(w));
  };
  const auto f1 = static_cast<std::int64_t>(std::floor(L1));
  const auto f2 = static_cast<std::int64_t>(std::floor(L2));
  for (std::int64_t j = 0; j <= f1; ++j) add(j, 1.0);
  add(f1 + 1, L1 - static_cast<double>(f1));
  for (std::int64_t j = 1; j <= f2; ++j) add(-j, 1.0);
  add(-f2 - 1, L2 - static_cast<double>(f2));
  return acc;
}

double norm_l1l2(const SolutionProfile& u, double L1, double L2) {
  return std::exp(log_norm_sq_l1l2(u, L1, L2));
}

DecayWindowReport decay_window_check(const AlmostMathieu& op, const SolutionProfile& phi, double t1,
                                     double t2, std::size_t n, const DecayWindowOptions& opts) {
  require(t1 < t2 && t2 < 1, "need t1 < t2 < 1");
  require(opts.beta > 0, "beta must be positive");
  require(op.lambda() > 0, "coupling must be positive");
  DecayWindowReport rep;
  rep.rate = std::log(op.lambda()) - (1.0 - t1) * opts.beta;
  if (rep.rate <= 0) throw RegimeError("nonpositive decay rate ln(lambda) - (1 - t1) beta");
  rep.target = rep.rate - opts.slack;
  const auto& f = op.frequency();
  if (n + 1 > f.depth()) return rep;
  const double qn = f.q_double(n), qn1 = f.q_double(n + 1);
  rep.lower = 2.0 * qn * qn * std::exp(t1 * std::log(qn1));
  rep.upper = std::exp(t2 * std::log(qn1));
  const double log_norm0 = log_add(2.0 * phi.log_abs(0), 2.0 * phi.log_abs(1));

  const auto kmin = static_cast<std::int64_t>(std::floor(rep.lower)) + 1;
  const double kmax_d = std::min(rep.upper, static_cast<double>(std::max(-phi.n_min(), phi.n_max())) + 1.0);
  const auto kmax = static_cast<std::int64_t>(std::ceil(kmax_d)) - 1;
  rep.worst_excess = kNegInf;
  for (std::int64_t a = std::max<std::int64_t>(kmin, 1); a <= kmax; ++a) {
    if (static_cast<double>(a) <= rep.lower || static_cast<double>(a) >= rep.upper) continue;
    if (classify_resonance(f, t2, n, a).kind != ResonanceKind::Resonant) continue;
    for (std::int64_t k : {a, -a}) {
      if (!phi.contains(k)) continue;
      const double lv = phi.log_abs(k) - 0.5 * log_norm0;
      const double ex = lv + rep.target * static_cast<double>(a);
      ++rep.n_checked;
      if (ex <= 0) ++rep.n_pass;
      if (ex > rep.worst_excess) {
        rep.worst_excess = ex;
        rep.worst_k = k;
      }
    }
  }
  rep.empty = rep.n_checked == 0;
  if (!rep.empty) rep.pass_fraction = static_cast<double>(rep.n_pass) / static_cast<double>(rep.n_checked);
  return rep;
}

double wronskian(const SolutionProfile& u, const SolutionProfile& v, std::int64_t n) {
  return u.value(n + 1) * v.value(n) - u.value(n) * v.value(n + 1);
}

nlohmann::ordered_json to_json(const DecayWindowReport& r) {
  nlohmann::ordered_json j;
  j["empty"] = r.empty;
  j["lower"] = r.lower;
  j["upper"] = r.upper;
  j["rate"] = r.rate;
  j["target_rate"] = r.target;
  j["n_checked"] = r.n_checked;
  j["n_pass"] = r.n_pass;
  j["pass_fraction"] = r.pass_fraction;
  j["worst_k"] = r.worst_k ? nlohmann::ordered_json(*r.worst_k) : nullptr;
  j["worst_excess"] = r.empty ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(r.worst_excess);
  return j;
}

nlohmann::ordered_json to_json(const ResonanceVerdict& r) {
  nlohmann::ordered_json j;
  j["kind"] = r.kind == ResonanceKind::Resonant ? "resonant" : "nonresonant";
  j["n"] = r.n;
  j["b_n"] = r.b_n;
  j["ell"] = r.ell;
  j["r"] = r.r;
  j["dist"] = r.dist;
  j["n0"] = r.n0 ? nlohmann::ordered_json(*r.n0) : nullptr;
  j["s"] = r.s ? nlohmann::ordered_json(*r.s) : nullptr;
  return j;
}

}  // namespace amo::op
