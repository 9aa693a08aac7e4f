#pragma once

// Independent reference computations used by the unit and acceptance tests.

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/multiprecision/cpp_int.hpp>

#include "amo/operator.hpp"
#include "amo/spectral.hpp"

namespace oracle {

using boost::multiprecision::cpp_int;
// wide enough for the Gram determinant to survive cancellation at L of a few hundred
using Big = boost::multiprecision::number<boost::multiprecision::cpp_bin_float<800>>;

// 200 decimals of pi - 3 (from an mpmath evaluation).
inline const char* kPiMinus3_200 =
    "1415926535897932384626433832795028841971693993751058209749445923078164062862089986280348253421170679"
    "8214808651328230664709384460955058223172535940812848111745028410270193852110555964462294895493038196";

// Partial quotients of P / 10^200 by integer Euclid. The leading ones agree
// with those of pi - 3 as long as the truncation error does not matter.
inline std::vector<cpp_int> euclid_partial_quotients(const std::string& digits, std::size_t count) {
  cpp_int p(digits);
  cpp_int q = 1;
  for (std::size_t i = 0; i < digits.size(); ++i) q *= 10;
  // alpha = p / q in (0,1); a_1 = floor(q / p) etc.
  std::vector<cpp_int> a;
  cpp_int num = q, den = p;
  while (den != 0 && a.size() < count) {
    a.push_back(num / den);
    cpp_int r = num % den;
    num = den;
    den = r;
  }
  return a;
}

// Mass of [a, b] under the level-`depth` self-similar Cantor discretization
// (atoms at left endpoints), by descending the two contractions.
inline double cantor_mass(double a, double b, int depth, double p) {
  if (b < 0.0 || a > 1.0) return 0.0;
  if (depth == 0) return (a <= 0.0 && 0.0 <= b) ? 1.0 : 0.0;
  if (a <= 0.0 && b >= 1.0) return 1.0;
  return p * cantor_mass(3.0 * a, 3.0 * b, depth - 1, p) +
         (1.0 - p) * cantor_mass(3.0 * a - 2.0, 3.0 * b - 2.0, depth - 1, p);
}

// Dense Green function of (H - E) restricted to [x1, x2] by LU inversion.
inline Eigen::MatrixXd dense_green(const amo::op::AlmostMathieu& op, double E, std::int64_t x1,
                                   std::int64_t x2) {
  const auto n = static_cast<Eigen::Index>(x2 - x1 + 1);
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    A(i, i) = op.potential(x1 + i) - E;
    if (i + 1 < n) A(i, i + 1) = A(i + 1, i) = 1.0;
  }
  return A.inverse();
}

// Solution of H u = E u with u(0) = u0, u(1) = u1 on sites 0..K (double).
inline std::vector<double> solve_forward(const amo::op::AlmostMathieu& op, double E, double u0, double u1,
                                         std::int64_t K) {
  std::vector<double> u(static_cast<std::size_t>(K + 1));
  u[0] = u0;
  if (K >= 1) u[1] = u1;
  for (std::int64_t n = 1; n < K; ++n)
    u[static_cast<std::size_t>(n + 1)] =
        (E - op.potential(n)) * u[static_cast<std::size_t>(n)] - u[static_cast<std::size_t>(n - 1)];
  return u;
}

// omega(L) = min_x ||u_x|| max_x ||u_x|| by brute force over n_samples phases x:
// u_x = sin(2 pi x) e_(1,0) - cos(2 pi x) e_(0,1) solved site by site. The best
// samples are then polished by golden-section search on the same site sums.
inline double omega_sampled(const amo::op::AlmostMathieu& op, double E, double L, int n_samples) {
  const auto fl = static_cast<std::int64_t>(std::floor(L));
  const double frac = L - static_cast<double>(fl);
  const std::int64_t K = fl + 1;
  const auto f = solve_forward(op, E, 1.0, 0.0, K);
  const auto g = solve_forward(op, E, 0.0, 1.0, K);
  auto norm_sq = [&](long double x) {
    const long double s = std::sin(2.0L * M_PI * x), c = std::cos(2.0L * M_PI * x);
    long double acc = 0.0L;
    for (std::int64_t n = 0; n <= K; ++n) {
      const long double w = n <= fl ? 1.0L : frac;
      const long double v = s * f[static_cast<std::size_t>(n)] - c * g[static_cast<std::size_t>(n)];
      acc += w * v * v;
    }
    return acc;
  };
  int i_lo = 0, i_hi = 0;
  long double lo = INFINITY, hi = 0.0L;
  for (int i = 0; i < n_samples; ++i) {
    const long double v = norm_sq(static_cast<long double>(i) / n_samples);
    if (v < lo) lo = v, i_lo = i;
    if (v > hi) hi = v, i_hi = i;
  }
  auto polish = [&](int i, int sign) {
    long double a = (i - 1.0L) / n_samples, b = (i + 1.0L) / n_samples;
    const long double r = (std::sqrt(5.0L) - 1.0L) / 2.0L;
    long double c = b - r * (b - a), d = a + r * (b - a);
    long double fc = sign * norm_sq(c), fd = sign * norm_sq(d);
    for (int it = 0; it < 80; ++it) {
      if (fc < fd) {
        b = d, d = c, fd = fc;
        c = b - r * (b - a);
        fc = sign * norm_sq(c);
      } else {
        a = c, c = d, fc = fd;
        d = a + r * (b - a);
        fd = sign * norm_sq(d);
      }
    }
    return sign * std::min(fc, fd);
  };
  lo = std::min(lo, polish(i_lo, 1));
  hi = std::max(hi, polish(i_hi, -1));
  return static_cast<double>(std::sqrt(lo * hi));
}

// ln omega(L) from the Gram matrix of the basis solutions in 800-digit arithmetic.
inline double log_omega_highprec(const amo::op::AlmostMathieu& op, double E, double L) {
  const auto fl = static_cast<std::int64_t>(std::floor(L));
  const Big frac = Big(L) - Big(fl);
  const std::int64_t K = fl + 1;
  Big f0 = 1, f1 = 0, g0 = 0, g1 = 1;
  Big G11 = f0 * f0 + f1 * f1, G12 = f0 * g0 + f1 * g1, G22 = g0 * g0 + g1 * g1;
  for (std::int64_t n = 1; n < K; ++n) {
    const Big a = Big(E) - Big(op.potential(n));
    const Big f2 = a * f1 - f0, g2 = a * g1 - g0;
    f0 = f1, f1 = f2, g0 = g1, g1 = g2;
    const Big w = (n + 1 <= fl) ? Big(1) : frac;
    G11 += w * f1 * f1;
    G12 += w * f1 * g1;
    G22 += w * g1 * g1;
  }
  const Big det = G11 * G22 - G12 * G12;
  return static_cast<double>(log(det)) / 2.0;
}

// Random eigenvalue of the [-N, N] truncation whose eigenvector carries at
// least a quarter of the uniform weight at site 0 (bulk, not an edge state).
inline double bulk_energy(const amo::op::AlmostMathieu& op, std::int64_t N, std::mt19937_64& rng) {
  const auto T = amo::spectral::TruncatedOperator::centered(op, N);
  const auto sd = amo::spectral::eigensolve(T, {0});
  std::vector<double> bulk;
  const double floor_w = 0.25 / static_cast<double>(T.size());
  for (std::size_t k = 0; k < sd.eigenvalues.size(); ++k)
    if (sd.amplitudes[0][k] * sd.amplitudes[0][k] >= floor_w) bulk.push_back(sd.eigenvalues[k]);
  std::uniform_int_distribution<std::size_t> ui(0, bulk.size() - 1);
  return bulk[ui(rng)];
}

}  // namespace oracle
