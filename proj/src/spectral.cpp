#include "amo/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <string>

#include "amo/error.hpp"
#include "amo/kernels.hpp"

namespace amo::spectral {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kTwoPi = 2.0 * std::numbers::pi;

double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double hi = std::max(a, b), lo = std::min(a, b);
  return hi + std::log1p(std::exp(lo - hi));
}

// LU factorization of T - lambda with partial pivoting (row interchanges).
struct TridiagLU {
  std::vector<double> dl, d, du, du2;
  std::vector<unsigned char> swapped;

  void factor(const std::vector<double>& diag, double lambda, double tiny) {
    const std::size_t n = diag.size();
    d.resize(n);
    dl.assign(n > 0 ? n - 1 : 0, 1.0);
    du.assign(n > 0 ? n - 1 : 0, 1.0);
    du2.assign(n > 1 ? n - 2 : 0, 0.0);
    swapped.assign(n, 0);
    for (std::size_t i = 0; i < n; ++i) d[i] = diag[i] - lambda;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      if (std::abs(d[i]) >= std::abs(dl[i])) {
        if (std::abs(d[i]) < tiny) d[i] = std::copysign(tiny, d[i] == 0.0 ? 1.0 : d[i]);
        const double fact = dl[i] / d[i];
        dl[i] = fact;
        d[i + 1] -= fact * du[i];
      } else {
        const double fact = d[i] / dl[i];
        d[i] = dl[i];
        dl[i] = fact;
        const double temp = du[i];
        du[i] = d[i + 1];
        d[i + 1] = temp - fact * d[i + 1];
        if (i + 2 < n) {
          du2[i] = du[i + 1];
          du[i + 1] = -fact * du[i + 1];
        }
        swapped[i] = 1;
      }
    }
    if (n > 0 && std::abs(d[n - 1]) < tiny) d[n - 1] = std::copysign(tiny, d[n - 1] == 0.0 ? 1.0 : d[n - 1]);
  }

  void solve(double* b) const {
    const std::size_t n = d.size();
    for (std::size_t i = 0; i + 1 < n; ++i) {
      if (swapped[i]) std::swap(b[i], b[i + 1]);
      b[i + 1] -= dl[i] * b[i];
    }
    b[n - 1] /= d[n - 1];
    if (n >= 2) b[n - 2] = (b[n - 2] - du[n - 2] * b[n - 1]) / d[n - 2];
    for (std::size_t ii = n >= 2 ? n - 2 : 0; ii-- > 0;)
      b[ii] = (b[ii] - du[ii] * b[ii + 1] - du2[ii] * b[ii + 2]) / d[ii];
  }
};

std::uint64_t splitmix(std::uint64_t& s) {
  std::uint64_t z = (s += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(const std::vector<double>& a) { return std::sqrt(dot(a, a)); }

// One inverse-iteration vector; `others` are already accepted vectors of the
// same cluster.
void inverse_iterate(const TruncatedOperator& T, double lambda, std::uint64_t seed,
                     const std::vector<std::vector<double>>& others, int max_iter, TridiagLU& lu,
                     std::vector<double>& x) {
  const std::size_t n = T.size();
  const double nb = T.norm_bound();
  lu.factor(T.diagonal(), lambda, kEps * nb);
  x.resize(n);
  std::uint64_t s = seed;
  for (auto& v : x) v = static_cast<double>(splitmix(s) >> 11) * 0x1.0p-53 - 0.5;
  double nx = norm2(x);
  for (auto& v : x) v /= nx;
  const double converged = 1.0 / (1e4 * kEps * nb * std::sqrt(static_cast<double>(n)));
  int extra = 0;
  for (int it = 0; it < max_iter; ++it) {
    lu.solve(x.data());
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& o : others) {
        const double c = dot(x, o);
        for (std::size_t i = 0; i < n; ++i) x[i] -= c * o[i];
      }
    nx = norm2(x);
    if (!(nx > 0) || !std::isfinite(nx)) {
      // Degenerate start; reseed.
      for (auto& v : x) v = static_cast<double>(splitmix(s) >> 11) * 0x1.0p-53 - 0.5;
      nx = norm2(x);
    }
    for (auto& v : x) v /= nx;
    if (nx >= converged && ++extra >= 2) break;
  }
}

double residual_norm(const TruncatedOperator& T, double lambda, const std::vector<double>& x,
                     std::vector<double>& work) {
  work.resize(x.size());
  T.apply(x.data(), work.data());
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = work[i] - lambda * x[i];
    s += r * r;
  }
  return std::sqrt(s);
}

// Implicit QL with Wilkinson-type shifts on the unit-off-diagonal tridiagonal
// matrix; only the rows `rows` of the accumulated eigenvector matrix are kept.
// Returns unsorted eigenvalues; z[r][k] is component rows[r] of eigenvector k.
std::vector<double> implicit_ql_rows(std::vector<double> d, const std::vector<std::size_t>& rows,
                                     std::vector<std::vector<double>>& z) {
  const std::size_t n = d.size();
  std::vector<double> e(n, 1.0);
  if (n > 0) e[n - 1] = 0.0;
  z.assign(rows.size(), std::vector<double>(n, 0.0));
  for (std::size_t r = 0; r < rows.size(); ++r) z[r][rows[r]] = 1.0;
  for (std::size_t l = 0; l < n; ++l) {
    int iter = 0;
    std::size_t m;
    do {
      for (m = l; m + 1 < n; ++m) {
        const double dd = std::abs(d[m]) + std::abs(d[m + 1]);
        if (std::abs(e[m]) <= kEps * dd) break;
      }
      if (m == l) break;
      if (++iter > 60) throw NumericalError("implicit QL did not converge");
      double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
      double r = std::hypot(g, 1.0);
      g = d[m] - d[l] + e[l] / (g + std::copysign(r, g));
      double s = 1.0, c = 1.0, p = 0.0;
      bool underflow = false;
      for (std::size_t i = m; i-- > l;) {
        double f = s * e[i];
        const double b = c * e[i];
        r = std::hypot(f, g);
        e[i + 1] = r;
        if (r == 0.0) {
          d[i + 1] -= p;
          e[m] = 0.0;
          underflow = true;
          break;
        }
        s = f / r;
        c = g / r;
        g = d[i + 1] - p;
        r = (d[i] - g) * s + 2.0 * c * b;
        p = s * r;
        d[i + 1] = g + p;
        g = c * r - b;
        for (auto& zr : z) {
          f = zr[i + 1];
          zr[i + 1] = s * zr[i] + c * f;
          zr[i] = c * zr[i] - s * f;
        }
      }
      if (underflow) continue;
      d[l] -= p;
      e[l] = g;
      e[m] = 0.0;
    } while (true);
  }
  return d;
}

}  // namespace

TruncatedOperator::TruncatedOperator(std::int64_t first_site, std::vector<double> diagonal)
    : first_(first_site), d_(std::move(diagonal)) {
  require(!d_.empty(), "truncation must contain at least one site");
  require(d_.size() <= 50001, "truncation larger than 5*10^4 sites");
}

TruncatedOperator TruncatedOperator::window(const op::AlmostMathieu& op, std::int64_t n_min,
                                            std::int64_t n_max) {
  require(n_max >= n_min, "empty window");
  std::vector<double> d;
  d.reserve(static_cast<std::size_t>(n_max - n_min + 1));
  for (std::int64_t n = n_min; n <= n_max; ++n) d.push_back(op.potential(n));
  return TruncatedOperator(n_min, std::move(d));
}

std::size_t TruncatedOperator::index(std::int64_t s) const {
  if (!contains(s)) throw InvalidArgument("site " + std::to_string(s) + " outside the truncation");
  return static_cast<std::size_t>(s - first_);
}

double TruncatedOperator::norm_bound() const {
  double m = 0.0;
  for (double v : d_) m = std::max(m, std::abs(v));
  return m + 2.0;
}

void TruncatedOperator::apply(const double* x, double* y) const {
  const std::size_t n = d_.size();
  for (std::size_t i = 0; i < n; ++i) {
    double s = d_[i] * x[i];
    if (i > 0) s += x[i - 1];
    if (i + 1 < n) s += x[i + 1];
    y[i] = s;
  }
}

const std::vector<double>& SpectralData::amplitude(std::int64_t site) const {
  for (std::size_t i = 0; i < sites.size(); ++i)
    if (sites[i] == site) return amplitudes[i];
  throw InvalidArgument("no amplitude data for site " + std::to_string(site));
}

std::vector<double> eigenvalues(const TruncatedOperator& T, std::size_t i0, std::size_t i1,
                                bool parallel, double tol) {
  require(i0 <= i1 && i1 <= T.size(), "eigenvalue index range out of bounds");
  require(tol > 0, "tolerance must be positive");
  return parallel ? kernels::bisect_eigenvalues_parallel(T.diagonal(), i0, i1, tol)
                  : kernels::bisect_eigenvalues_serial(T.diagonal(), i0, i1, tol);
}

std::size_t count_below(const TruncatedOperator& T, double x) {
  return static_cast<std::size_t>(kernels::sturm_count(T.diagonal().data(), T.size(), x));
}

std::vector<double> eigenvector(const TruncatedOperator& T, double E) {
  TridiagLU lu;
  std::vector<double> x;
  inverse_iterate(T, E, 0x5eed, {}, 5, lu, x);
  return x;
}

SpectralData eigensolve(const TruncatedOperator& T, const std::vector<std::int64_t>& sites,
                        const EigensolveOptions& opts) {
  const std::size_t n = T.size();
  std::size_t i0 = 0, i1 = n;
  if (opts.index_range) {
    i0 = opts.index_range->first;
    i1 = opts.index_range->second;
  }
  SpectralData out;
  out.first_index = i0;
  out.sites = sites;
  out.norm_bound = T.norm_bound();
  out.eigenvalues = eigenvalues(T, i0, i1, opts.parallel, opts.tol);
  const std::size_t m = out.eigenvalues.size();
  std::vector<std::size_t> site_idx;
  for (auto s : sites) site_idx.push_back(T.index(s));
  out.amplitudes.assign(sites.size(), std::vector<double>(m, 0.0));
  if (m == 0) return out;
  const bool full_spectrum = (i0 == 0 && i1 == n);
  auto fill_completeness = [&] {
    if (!full_spectrum || out.amplitudes.empty()) return;
    double worst = 0.0;
    for (const auto& a : out.amplitudes) {
      double s = 0.0;
      for (double v : a) s += v * v;
      worst = std::max(worst, std::abs(s - 1.0));
    }
    out.completeness_residual = worst;
  };

  const bool use_ql = opts.method == EigenvectorMethod::ImplicitQL ||
                      (opts.method == EigenvectorMethod::Auto && sites.size() <= kQlMaxSites);
  if (use_ql) {
    out.method = EigenvectorMethod::ImplicitQL;
    std::vector<std::vector<double>> z;
    const auto ev = implicit_ql_rows(T.diagonal(), site_idx, z);
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::stable_sort(perm.begin(), perm.end(), [&](std::size_t a, std::size_t b) { return ev[a] < ev[b]; });
    double cross = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
      const std::size_t src = perm[i0 + k];
      cross = std::max(cross, std::abs(ev[src] - out.eigenvalues[k]));
      for (std::size_t s = 0; s < site_idx.size(); ++s) out.amplitudes[s][k] = z[s][src];
    }
    out.eigenvalue_crosscheck = cross;
    fill_completeness();
    return out;
  }

  // Cluster boundaries: group starts.
  const double nb = out.norm_bound;
  std::vector<std::size_t> starts{0};
  for (std::size_t k = 1; k < m; ++k)
    if (out.eigenvalues[k] - out.eigenvalues[k - 1] > opts.cluster_rel * nb) starts.push_back(k);
  starts.push_back(m);
  for (std::size_t g = 0; g + 1 < starts.size(); ++g)
    out.largest_cluster = std::max(out.largest_cluster, starts[g + 1] - starts[g]);
  out.cluster_fallback = out.largest_cluster > 1;

  // Work blocks of whole clusters, about 64 eigenvalues each.
  std::vector<std::size_t> block_groups{0};
  for (std::size_t g = 0, acc = 0; g + 1 < starts.size(); ++g) {
    acc += starts[g + 1] - starts[g];
    if (acc >= 64) {
      block_groups.push_back(g + 1);
      acc = 0;
    }
  }
  if (block_groups.back() != starts.size() - 1) block_groups.push_back(starts.size() - 1);

  double max_res = 0.0, max_ortho = 0.0;
  const auto nblocks = static_cast<std::ptrdiff_t>(block_groups.size() - 1);
#pragma omp parallel if (opts.parallel) reduction(max : max_res, max_ortho)
  {
    TridiagLU lu;
    std::vector<double> x, work, prev;
    std::vector<std::vector<double>> cluster;
#pragma omp for schedule(dynamic)
    for (std::ptrdiff_t b = 0; b < nblocks; ++b) {
      prev.clear();
      for (std::size_t g = block_groups[static_cast<std::size_t>(b)];
           g < block_groups[static_cast<std::size_t>(b) + 1]; ++g) {
        cluster.clear();
        double shift_prev = -std::numeric_limits<double>::infinity();
        for (std::size_t k = starts[g]; k < starts[g + 1]; ++k) {
          const double ev = out.eigenvalues[k];
          // Separate coincident shifts slightly so the factorizations differ.
          double shift = ev;
          if (shift - shift_prev < 10.0 * kEps * nb) shift = shift_prev + 10.0 * kEps * nb;
          shift_prev = shift;
          inverse_iterate(T, shift, 0x9E37ULL * (i0 + k + 1), cluster, opts.max_iterations, lu, x);
          max_res = std::max(max_res, residual_norm(T, ev, x, work));
          for (const auto& o : cluster) max_ortho = std::max(max_ortho, std::abs(dot(x, o)));
          if (cluster.empty() && !prev.empty()) max_ortho = std::max(max_ortho, std::abs(dot(x, prev)));
          for (std::size_t s = 0; s < site_idx.size(); ++s) out.amplitudes[s][k] = x[site_idx[s]];
          if (starts[g + 1] - starts[g] > 1) cluster.push_back(x);
          prev = x;
        }
      }
    }
  }
  out.max_residual = max_res;
  out.orthonormality_residual = max_ortho;
  fill_completeness();
  // With every site requested the amplitudes are the full eigenvector matrix.
  if (full_spectrum && sites.size() == n && n <= 4000) {
    std::vector<double> g(m * m, 0.0);
    for (std::size_t s = 0; s < n; ++s) {
      const auto& row_src = out.amplitudes[s];
      for (std::size_t k = 0; k < m; ++k) {
        const double rk = row_src[k];
        double* gk = g.data() + k * m;
        for (std::size_t l = k; l < m; ++l) gk[l] += rk * row_src[l];
      }
    }
    double worst = 0.0;
    for (std::size_t k = 0; k < m; ++k)
      for (std::size_t l = k; l < m; ++l)
        worst = std::max(worst, std::abs(g[k * m + l] - (k == l ? 1.0 : 0.0)));
    out.orthonormality_residual = worst;
    out.full_orthonormality = true;
  }
  return out;
}

measure::DiscreteMeasure spectral_measure(const SpectralData& d,
                                          const std::vector<std::pair<std::int64_t, double>>& phi) {
  std::vector<const std::vector<double>*> amps;
  for (const auto& [s, c] : phi) amps.push_back(&d.amplitude(s));
  std::vector<std::pair<double, double>> atoms;
  atoms.reserve(d.eigenvalues.size());
  for (std::size_t k = 0; k < d.eigenvalues.size(); ++k) {
    double ip = 0.0;
    for (std::size_t j = 0; j < phi.size(); ++j) ip += phi[j].second * (*amps[j])[k];
    atoms.emplace_back(d.eigenvalues[k], ip * ip);
  }
  return measure::DiscreteMeasure::from_atoms(std::move(atoms));
}

measure::DiscreteMeasure spectral_measure(const SpectralData& d, std::int64_t site) {
  return spectral_measure(d, {{site, 1.0}});
}

cplx borel_transform(const measure::DiscreteMeasure& mu, cplx z) {
  require(z.imag() > 0, "Borel transform needs Im z > 0");
  return kernels::borel_sum_parallel(mu.positions().data(), mu.weights().data(), mu.size(), z);
}

cplx free_m_dirichlet(cplx z) {
  require(z.imag() > 0, "needs Im z > 0");
  const cplx root = std::sqrt(z * z - 4.0);
  cplx r = 0.5 * (z - root);
  if (std::abs(r) > 1.0) r = 0.5 * (z + root);
  return -r;
}

cplx m1_tilde_from_m1(cplx m1, double x0) {
  const double c = std::cos(kTwoPi * x0), s = std::sin(kTwoPi * x0);
  return (m1 * c + s) / (c - m1 * s);
}

cplx m2_tilde_from_m2(cplx m2, double x0) {
  const double c = std::cos(kTwoPi * x0), s = std::sin(kTwoPi * x0);
  return (m2 * c - s) / (m2 * s + c);
}

cplx M1_from_tilde(cplx m1t, cplx m2t, double x0) {
  const double c = std::cos(kTwoPi * x0), s = std::sin(kTwoPi * x0);
  return (m1t * m2t * s * s - m1t * c * s + m2t * c * s - c * c) / (m1t + m2t);
}

cplx M2_from_tilde(cplx m1t, cplx m2t, double x0) {
  const double c = std::cos(kTwoPi * x0), s = std::sin(kTwoPi * x0);
  return (m1t * m2t * c * c + m1t * c * s - m2t * c * s - s * s) / (m1t + m2t);
}

HalfLineSpectra::HalfLineSpectra(const op::AlmostMathieu& op, std::int64_t N, bool with_whole,
                                 const EigensolveOptions& opts)
    : N_(N) {
  require(N >= 2, "half-line truncation needs N >= 2");
  {
    const auto T = TruncatedOperator::window(op, 1, N);
    right_ = spectral_measure(eigensolve(T, {1}, opts), 1);
  }
  {
    const auto T = TruncatedOperator::window(op, -N, 0);
    left_ = spectral_measure(eigensolve(T, {0}, opts), 0);
  }
  if (with_whole) {
    const auto T = TruncatedOperator::centered(op, N);
    const auto d = eigensolve(T, {0, 1}, opts);
    whole0_ = spectral_measure(d, 0);
    whole1_ = spectral_measure(d, 1);
  }
}

cplx HalfLineSpectra::m1(cplx z) const { return borel_transform(right_, z); }
cplx HalfLineSpectra::m2(cplx z) const { return -1.0 / borel_transform(left_, z); }

MFunctionPair HalfLineSpectra::evaluate(double E, double eps, double x0) const {
  require(eps > 0, "eps must be positive");
  MFunctionPair r;
  r.z = cplx(E, eps);
  r.x0 = x0;
  r.N = N_;
  r.m1 = m1(r.z);
  r.m2 = m2(r.z);
  r.m1_tilde = m1_tilde_from_m1(r.m1, x0);
  r.m2_tilde = m2_tilde_from_m2(r.m2, x0);
  r.M1_from_m = -1.0 / (r.m1 + r.m2);
  r.M2_from_m = r.m1 * r.m2 / (r.m1 + r.m2);
  r.M1_from_tilde = spectral::M1_from_tilde(r.m1_tilde, r.m2_tilde, x0);
  r.M2_from_tilde = spectral::M2_from_tilde(r.m1_tilde, r.m2_tilde, x0);
  if (whole0_) {
    r.M1 = borel_transform(*whole0_, r.z);
    r.M2 = borel_transform(*whole1_, r.z);
    r.residual_M1 = std::abs(*r.M1 - r.M1_from_m);
    r.residual_M2 = std::abs(*r.M2 - r.M2_from_m);
    r.residual_tilde = std::max(std::abs(*r.M1 - r.M1_from_tilde), std::abs(*r.M2 - r.M2_from_tilde));
  } else {
    r.residual_tilde = std::max(std::abs(r.M1_from_m - r.M1_from_tilde),
                                std::abs(r.M2_from_m - r.M2_from_tilde));
  }
  return r;
}

MFunctionPair half_line_m(const op::AlmostMathieu& op, double E, double eps, double x0,
                          std::int64_t N, double tol) {
  require(eps > 0, "eps must be positive");
  const HalfLineSpectra base(op, N, true);
  const HalfLineSpectra doubled(op, 2 * N, false);
  MFunctionPair r = base.evaluate(E, eps, x0);
  const cplx z(E, eps);
  const cplx m1d = doubled.m1(z), m2d = doubled.m2(z);
  const double change =
      std::max(std::abs(r.m1 - m1d) / std::abs(m1d), std::abs(r.m2 - m2d) / std::abs(m2d));
  r.truncation_change = change;
  if (change > tol)
    throw NumericalError("eps too small for N = " + std::to_string(N) +
                         " (m-functions move by " + std::to_string(change) +
                         " under doubling); try N >= " + std::to_string(4 * N));
  return r;
}

double SubordinacyData::a() const { return std::exp(log_a); }
double SubordinacyData::b() const { return std::exp(log_b); }
double SubordinacyData::omega() const { return std::exp(log_omega); }
double SubordinacyData::log_det_gram_direct() const {
  return std::log(g11 * g22 - g12 * g12) + 2.0 * log_gram_scale;
}

SubordinacyData subordinacy_quantities(const op::AlmostMathieu& op, double E, double x0, double L) {
  require(L >= 2, "subordinacy quantities need L >= 2");
  const auto fl = static_cast<std::int64_t>(std::floor(L));
  const double frac = L - static_cast<double>(fl);
  const std::int64_t K = frac > 0 ? fl + 1 : fl;
  auto weight = [&](std::int64_t j) { return j <= fl ? 1.0 : frac; };

  SubordinacyData out;
  out.L = L;

  // Basis solutions (1,0), (0,1) and the Gram matrix, sharing one scale.
  {
    double p1 = 0.0, c1 = 1.0;  // u1(j-1), u1(j)
    double p2 = 0.0, c2 = 0.0;  // u2(j-1), u2(j)
    double g11 = 0, g12 = 0, g22 = 0, scale = 0.0;
    for (std::int64_t j = 0; j <= K; ++j) {
      if (j == 1) {
        p1 = c1, c1 = 0.0;
        p2 = c2, c2 = std::exp(-scale);
      } else if (j >= 2) {
        const double a = E - op.potential(j - 1);
        const double n1 = a * c1 - p1, n2 = a * c2 - p2;
        p1 = c1, p2 = c2, c1 = n1, c2 = n2;
      }
      const double w = weight(j);
      g11 += w * c1 * c1;
      g12 += w * c1 * c2;
      g22 += w * c2 * c2;
      const double mag = std::max({std::abs(c1), std::abs(c2), std::abs(p1), std::abs(p2)});
      if (mag > 1e100) {
        p1 /= mag, p2 /= mag, c1 /= mag, c2 /= mag;
        const double m2 = mag * mag;
        g11 /= m2, g12 /= m2, g22 /= m2;
        scale += std::log(mag);
      }
    }
    out.g11 = g11, out.g12 = g12, out.g22 = g22;
    out.log_gram_scale = 2.0 * scale;
  }

  // det gram = sum_{i<j} w_i w_j s_i(j)^2 with s_i the solution vanishing at i
  // and equal to 1 at i+1; Q(j) = sum_{i<j} w_i (s_i(j), s_i(j-1))^{(x)2}.
  {
    double q11 = 0, q12 = 0, q22 = 0, qs = 0.0;
    double ldet = kNegInf;
    for (std::int64_t j = 0; j <= K; ++j) {
      const double w = weight(j);
      if (q11 > 0) ldet = log_add(ldet, std::log(w * q11) + qs);
      if (j == 0) {
        q11 = w;  // Q(1) = w_0 e1 e1^T
        continue;
      }
      const double a = E - op.potential(j);
      const double add = (qs > 700.0) ? 0.0 : w * std::exp(-qs);
      const double n11 = a * a * q11 - 2.0 * a * q12 + q22 + add;
      const double n12 = a * q11 - q12;
      const double n22 = q11;
      q11 = n11, q12 = n12, q22 = n22;
      const double mag = std::max({std::abs(q11), std::abs(q22)});
      if (mag > 1e100) {
        q11 /= mag, q12 /= mag, q22 /= mag;
        qs += std::log(mag);
      }
    }
    out.log_omega = 0.5 * ldet;
  }

  // a, b directly from their own recursions.
  auto log_norm_sq = [&](double u0, double u1v) {
    double prev = u0, cur = u1v, s = 0.0, acc = kNegInf;
    auto add = [&](double v, double w) {
      if (v != 0.0 && w > 0) acc = log_add(acc, 2.0 * (std::log(std::abs(v)) + s) + std::log(w));
    };
    add(prev, weight(0));
    add(cur, weight(1));
    for (std::int64_t j = 2; j <= K; ++j) {
      const double nx = (E - op.potential(j - 1)) * cur - prev;
      prev = cur;
      cur = nx;
      const double mag = std::max(std::abs(prev), std::abs(cur));
      if (mag > 1e100) {
        prev /= mag, cur /= mag;
        s += std::log(mag);
      }
      add(cur, weight(j));
    }
    return acc;
  };
  const double c = std::cos(kTwoPi * x0), s = std::sin(kTwoPi * x0);
  out.log_a = log_norm_sq(c, s);   // u_{x0+1/4}: (cos, sin)
  out.log_b = log_norm_sq(s, -c);  // u_{x0}: (sin, -cos)
  return out;
}

double schnol_phase_proxy(const op::AlmostMathieu& op, double E, double L) {
  require(L >= 1, "the phase proxy needs L >= 1");
  const auto fl = static_cast<std::int64_t>(std::floor(L));
  const double frac = L - static_cast<double>(fl);
  // e1 = u_{1/4} has (u(0), u(1)) = (1, 0); e2 = -u_0 has (0, 1); u_x = sin e1 - cos e2
  const auto e1 = op::solution_profile(op, E, 0.25, -fl - 1, fl + 1);
  const auto u0 = op::solution_profile(op, E, 0.0, -fl - 1, fl + 1);
  double top = kNegInf;
  for (std::int64_t n = -fl - 1; n <= fl + 1; ++n) top = std::max({top, e1.log_abs(n), u0.log_abs(n)});
  long double g11 = 0, g12 = 0, g22 = 0;
  for (std::int64_t n = -fl - 1; n <= fl + 1; ++n) {
    const double w = (n >= 0 ? n : -n) <= fl ? 1.0 : frac;
    if (w <= 0) continue;
    const long double v1 = e1.mantissa(n) * std::exp(e1.log_scale(n) - top);
    const long double v2 = -u0.mantissa(n) * std::exp(u0.log_scale(n) - top);
    g11 += w * v1 * v1;
    g12 += w * v1 * v2;
    g22 += w * v2 * v2;
  }
  // smallest eigenvector (cos phi, sin phi) = (sin 2 pi x, -cos 2 pi x)
  const double phi = 0.5 * std::atan2(static_cast<double>(2 * g12), static_cast<double>(g11 - g22)) +
                     0.5 * std::numbers::pi;
  double x = std::atan2(std::cos(phi), -std::sin(phi)) / (2.0 * std::numbers::pi);
  x -= 0.5 * std::floor(2.0 * x);
  return x;
}

double find_L_of_eps(const op::AlmostMathieu& op, double E, double x0, double eps) {
  require(eps > 0, "eps must be positive");
  const double target = -std::log(eps);
  auto f = [&](double L) { return subordinacy_quantities(op, E, x0, L).log_omega - target; };
  double lo = 2.0;
  if (f(lo) > 0) throw InvalidArgument("epsilon too large: 1/eps < omega(2)");
  double hi = 4.0;
  while (f(hi) < 0) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e7) throw NumericalError("omega(L) stays below 1/eps up to L = 1e7");
  }
  const double tol = std::log1p(1e-3) * 0.5;
  double mid = hi;
  for (int it = 0; it < 200; ++it) {
    mid = std::sqrt(lo * hi);
    const double v = f(mid);
    if (std::abs(v) <= tol) break;
    if (v < 0)
      lo = mid;
    else
      hi = mid;
  }
  return mid;
}

JlCheck jl_lower_bound_check(const op::AlmostMathieu& op, double E, double x0, double eps,
                             cplx m1_dirichlet, double c_cal) {
  require(c_cal > 0, "calibration constant must be positive");
  JlCheck r;
  r.L = find_L_of_eps(op, E, x0, eps);
  const auto sd = subordinacy_quantities(op, E, x0, r.L);
  r.rhs = std::exp(-std::log(eps) - sd.log_b);
  r.lhs = m1_tilde_from_m1(m1_dirichlet, x0).imag();
  r.ratio = r.lhs / r.rhs;
  r.pass = r.ratio >= 1.0 / c_cal;
  return r;
}

JlCheck jl_lower_bound_check(const op::AlmostMathieu& op, double E, double x0, double eps,
                             const HalfLineSpectra* spectra, double c_cal) {
  std::optional<HalfLineSpectra> own;
  if (!spectra) {
    const auto N = static_cast<std::int64_t>(std::clamp(std::ceil(10.0 / eps), 200.0, 4000.0));
    own.emplace(op, N, false);
    spectra = &*own;
  }
  return jl_lower_bound_check(op, E, x0, eps, spectra->m1(cplx(E, eps)), c_cal);
}

BoundaryScalingReport boundary_scaling_check(const measure::DiscreteMeasure& mu0,
                                             const measure::DiscreteMeasure& mu1,
                                             const std::vector<double>& energies,
                                             const std::vector<double>& eps_grid, double t,
                                             double slack) {
  require(t >= 0, "t must be non-negative");
  BoundaryScalingReport rep;
  rep.t = t;
  rep.slack = slack;
  for (double E : energies)
    for (double e : eps_grid) {
      const cplx z(E, e);
      const double f = std::pow(e, t);
      ++rep.n_checked;
      if (borel_transform(mu0, z).imag() * f >= 1.0 - slack) ++rep.n_pass_M1;
      if (borel_transform(mu1, z).imag() * f >= 1.0 - slack) ++rep.n_pass_M2;
    }
  if (rep.n_checked > 0) {
    rep.pass_fraction_M1 = static_cast<double>(rep.n_pass_M1) / static_cast<double>(rep.n_checked);
    rep.pass_fraction_M2 = static_cast<double>(rep.n_pass_M2) / static_cast<double>(rep.n_checked);
  }
  return rep;
}

namespace {
nlohmann::ordered_json cjson(cplx v) { return nlohmann::ordered_json{v.real(), v.imag()}; }
template <class T>
nlohmann::ordered_json opt(const std::optional<T>& v) {
  if (!v) return nullptr;
  if constexpr (std::is_same_v<T, cplx>)
    return cjson(*v);
  else
    return *v;
}
}  // namespace

nlohmann::ordered_json to_json(const MFunctionPair& m) {
  nlohmann::ordered_json j;
  j["z"] = cjson(m.z);
  j["x0"] = m.x0;
  j["N"] = m.N;
  j["m1"] = cjson(m.m1);
  j["m2"] = cjson(m.m2);
  j["m1_tilde"] = cjson(m.m1_tilde);
  j["m2_tilde"] = cjson(m.m2_tilde);
  j["M1"] = opt(m.M1);
  j["M2"] = opt(m.M2);
  j["M1_from_m"] = cjson(m.M1_from_m);
  j["M2_from_m"] = cjson(m.M2_from_m);
  j["M1_from_tilde"] = cjson(m.M1_from_tilde);
  j["M2_from_tilde"] = cjson(m.M2_from_tilde);
  j["residual_M1"] = opt(m.residual_M1);
  j["residual_M2"] = opt(m.residual_M2);
  j["residual_tilde"] = opt(m.residual_tilde);
  j["truncation_change"] = opt(m.truncation_change);
  return j;
}

nlohmann::ordered_json to_json(const SubordinacyData& s) {
  nlohmann::ordered_json j;
  j["L"] = s.L;
  j["log_a"] = s.log_a;
  j["log_b"] = s.log_b;
  j["log_omega"] = s.log_omega;
  j["gram"] = nlohmann::ordered_json{{"g11", s.g11}, {"g12", s.g12}, {"g22", s.g22},
                                     {"log_scale", s.log_gram_scale}};
  return j;
}

nlohmann::ordered_json to_json(const BoundaryScalingReport& r) {
  nlohmann::ordered_json j;
  j["t"] = r.t;
  j["slack"] = r.slack;
  j["n_checked"] = r.n_checked;
  j["pass_fraction_M1"] = r.pass_fraction_M1;
  j["pass_fraction_M2"] = r.pass_fraction_M2;
  return j;
}

}  // namespace amo::spectral
