#include "amo/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace amo::kernels {

namespace {

constexpr double kPivMin = 1e-300;
constexpr std::size_t kLanes = 8;

inline double mborel_term(double y, double w, double x, double inv_eps, double m) {
  const double r = std::abs(y - x) * inv_eps;
  if (r > 1e6) return w * std::exp(-m * std::log(r));
  const double rm = (m == 2.0) ? r * r : std::pow(r, m);
  return w / (1.0 + rm);
}

void gershgorin(const std::vector<double>& d, double& lo, double& hi) {
  lo = std::numeric_limits<double>::infinity();
  hi = -lo;
  const std::size_t n = d.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double r = (i > 0 ? 1.0 : 0.0) + (i + 1 < n ? 1.0 : 0.0);
    lo = std::min(lo, d[i] - r);
    hi = std::max(hi, d[i] + r);
  }
  const double pad = 4.0 * std::numeric_limits<double>::epsilon() * std::max(std::abs(lo), std::abs(hi)) + 1e-14;
  lo -= pad;
  hi += pad;
}

// Bisection for a block of up to kLanes consecutive indices sharing one sweep
// over the diagonal per step.
void bisect_block(const std::vector<double>& d, std::size_t first, std::size_t count, double glo,
                  double ghi, double tol, double* out) {
  const std::size_t n = d.size();
  double lo[kLanes], hi[kLanes], mid[kLanes], q[kLanes];
  int cnt[kLanes], target[kLanes];
  for (std::size_t l = 0; l < kLanes; ++l) {
    lo[l] = glo;
    hi[l] = ghi;
    target[l] = static_cast<int>(first + std::min(l, count - 1));
  }
  const int max_iter = static_cast<int>(std::ceil(std::log2((ghi - glo) / tol))) + 2;
  for (int it = 0; it < max_iter; ++it) {
    bool done = true;
    for (std::size_t l = 0; l < kLanes; ++l) {
      mid[l] = 0.5 * (lo[l] + hi[l]);
      if (hi[l] - lo[l] > tol) done = false;
      q[l] = 1.0;
      cnt[l] = 0;
    }
    if (done) break;
    for (std::size_t i = 0; i < n; ++i) {
      const double di = d[i];
#pragma omp simd
      for (std::size_t l = 0; l < kLanes; ++l) {
        double v = di - mid[l] - (i > 0 ? 1.0 / q[l] : 0.0);
        v = (std::abs(v) < kPivMin) ? -kPivMin : v;
        cnt[l] += (v < 0.0);
        q[l] = v;
      }
    }
    for (std::size_t l = 0; l < kLanes; ++l) {
      if (hi[l] - lo[l] <= tol) continue;
      if (cnt[l] <= target[l])
        lo[l] = mid[l];
      else
        hi[l] = mid[l];
    }
  }
  for (std::size_t l = 0; l < count; ++l) out[l] = 0.5 * (lo[l] + hi[l]);
}

}  // namespace

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

double mborel_sum_serial(const double* y, const double* w, std::size_t n, double x, double eps,
                         double m) {
  const double inv = 1.0 / eps;
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += mborel_term(y[i], w[i], x, inv, m);
  return s;
}

// Fixed-size blocks summed in order, so the result does not depend on the
// number of threads.
constexpr std::size_t kBlock = 4096;

double mborel_sum_parallel(const double* y, const double* w, std::size_t n, double x, double eps,
                           double m) {
  const double inv = 1.0 / eps;
  const std::size_t nb = (n + kBlock - 1) / kBlock;
  std::vector<double> part(nb, 0.0);
  const auto snb = static_cast<std::ptrdiff_t>(nb);
#pragma omp parallel for schedule(static) if (nb > 16)
  for (std::ptrdiff_t b = 0; b < snb; ++b) {
    const std::size_t lo = static_cast<std::size_t>(b) * kBlock, hi = std::min(n, lo + kBlock);
    double s = 0.0;
#pragma omp simd reduction(+ : s)
    for (std::size_t i = lo; i < hi; ++i) s += mborel_term(y[i], w[i], x, inv, m);
    part[static_cast<std::size_t>(b)] = s;
  }
  double s = 0.0;
  for (double v : part) s += v;
  return s;
}

std::complex<double> borel_sum_serial(const double* y, const double* w, std::size_t n,
                                      std::complex<double> z) {
  std::complex<double> s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += w[i] / (y[i] - z);
  return s;
}

std::complex<double> borel_sum_parallel(const double* y, const double* w, std::size_t n,
                                        std::complex<double> z) {
  // 1/(y - z) = (y - E + i eta) / ((y - E)^2 + eta^2)
  const double e = z.real(), eta = z.imag();
  const std::size_t nb = (n + kBlock - 1) / kBlock;
  std::vector<double> pre(nb, 0.0), pim(nb, 0.0);
  const auto snb = static_cast<std::ptrdiff_t>(nb);
#pragma omp parallel for schedule(static) if (nb > 16)
  for (std::ptrdiff_t b = 0; b < snb; ++b) {
    const std::size_t lo = static_cast<std::size_t>(b) * kBlock, hi = std::min(n, lo + kBlock);
    double re = 0.0, im = 0.0;
#pragma omp simd reduction(+ : re, im)
    for (std::size_t i = lo; i < hi; ++i) {
      const double dx = y[i] - e;
      const double f = w[i] / (dx * dx + eta * eta);
      re += dx * f;
      im += eta * f;
    }
    pre[static_cast<std::size_t>(b)] = re;
    pim[static_cast<std::size_t>(b)] = im;
  }
  double re = 0.0, im = 0.0;
  for (std::size_t b = 0; b < nb; ++b) re += pre[b], im += pim[b];
  return {re, im};
}

int sturm_count(const double* d, std::size_t n, double x) {
  int c = 0;
  double q = 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    double v = d[i] - x - (i > 0 ? 1.0 / q : 0.0);
    if (std::abs(v) < kPivMin) v = -kPivMin;
    if (v < 0.0) ++c;
    q = v;
  }
  return c;
}

void sturm_counts_serial(const double* d, std::size_t n, const double* x, std::size_t nx, int* out) {
  for (std::size_t j = 0; j < nx; ++j) out[j] = sturm_count(d, n, x[j]);
}

void sturm_counts_batched(const double* d, std::size_t n, const double* x, std::size_t nx, int* out) {
  const auto nblocks = static_cast<std::ptrdiff_t>((nx + kLanes - 1) / kLanes);
#pragma omp parallel for schedule(dynamic, 4)
  for (std::ptrdiff_t b = 0; b < nblocks; ++b) {
    const std::size_t j0 = static_cast<std::size_t>(b) * kLanes;
    const std::size_t len = std::min(kLanes, nx - j0);
    double s[kLanes], q[kLanes];
    int c[kLanes];
    for (std::size_t l = 0; l < kLanes; ++l) {
      s[l] = x[j0 + std::min(l, len - 1)];
      q[l] = 1.0;
      c[l] = 0;
    }
    for (std::size_t i = 0; i < n; ++i) {
      const double di = d[i];
#pragma omp simd
      for (std::size_t l = 0; l < kLanes; ++l) {
        double v = di - s[l] - (i > 0 ? 1.0 / q[l] : 0.0);
        v = (std::abs(v) < kPivMin) ? -kPivMin : v;
        c[l] += (v < 0.0);
        q[l] = v;
      }
    }
    for (std::size_t l = 0; l < len; ++l) out[j0 + l] = c[l];
  }
}

std::vector<double> bisect_eigenvalues_serial(const std::vector<double>& d, std::size_t i0,
                                              std::size_t i1, double tol) {
  std::vector<double> out;
  if (i1 <= i0) return out;
  double glo, ghi;
  gershgorin(d, glo, ghi);
  out.reserve(i1 - i0);
  for (std::size_t k = i0; k < i1; ++k) {
    double lo = glo, hi = ghi;
    while (hi - lo > tol) {
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      if (sturm_count(d.data(), d.size(), mid) <= static_cast<int>(k))
        lo = mid;
      else
        hi = mid;
    }
    out.push_back(0.5 * (lo + hi));
  }
  return out;
}

std::vector<double> bisect_eigenvalues_parallel(const std::vector<double>& d, std::size_t i0,
                                                std::size_t i1, double tol) {
  std::vector<double> out;
  if (i1 <= i0) return out;
  double glo, ghi;
  gershgorin(d, glo, ghi);
  const std::size_t total = i1 - i0;
  out.resize(total);
  const auto nblocks = static_cast<std::ptrdiff_t>((total + kLanes - 1) / kLanes);
#pragma omp parallel for schedule(dynamic, 2)
  for (std::ptrdiff_t b = 0; b < nblocks; ++b) {
    const std::size_t off = static_cast<std::size_t>(b) * kLanes;
    bisect_block(d, i0 + off, std::min(kLanes, total - off), glo, ghi, tol, out.data() + off);
  }
  return out;
}

}  // namespace amo::kernels
