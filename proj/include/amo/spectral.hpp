#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "amo/measure.hpp"
#include "amo/operator.hpp"
#include "json.hpp"

namespace amo::spectral {

using cplx = std::complex<double>;

// Dirichlet restriction of H to [first_site, first_site + size - 1]; unit off-diagonal.
class TruncatedOperator {
 public:
  TruncatedOperator(std::int64_t first_site, std::vector<double> diagonal);
  static TruncatedOperator window(const op::AlmostMathieu& op, std::int64_t n_min, std::int64_t n_max);
  static TruncatedOperator centered(const op::AlmostMathieu& op, std::int64_t N) {
    return window(op, -N, N);
  }

  std::int64_t first_site() const { return first_; }
  std::int64_t last_site() const { return first_ + static_cast<std::int64_t>(d_.size()) - 1; }
  std::size_t size() const { return d_.size(); }
  bool contains(std::int64_t s) const { return s >= first_ && s <= last_site(); }
  std::size_t index(std::int64_t s) const;
  const std::vector<double>& diagonal() const { return d_; }
  // max |d| + 2, an upper bound on the operator norm
  double norm_bound() const;
  // y = T x
  void apply(const double* x, double* y) const;

 private:
  std::int64_t first_;
  std::vector<double> d_;
};

enum class EigenvectorMethod {
  Auto,              // implicit QL for at most kQlMaxSites sites, inverse iteration otherwise
  InverseIteration,  // full vectors; cost grows with the square of cluster sizes
  ImplicitQL,        // only the requested rows of the orthogonal eigenvector matrix, O(n^2)
};
inline constexpr std::size_t kQlMaxSites = 16;

struct EigensolveOptions {
  bool parallel = true;
  EigenvectorMethod method = EigenvectorMethod::Auto;
  double tol = 1e-12;
  // Eigenvalues closer than cluster_rel * ||T|| are grouped and their vectors
  // orthogonalized against each other.
  double cluster_rel = 1e-7;
  int max_iterations = 5;
  // Restrict to ascending indices [first, second).
  std::optional<std::pair<std::size_t, std::size_t>> index_range;
};

struct SpectralData {
  std::vector<double> eigenvalues;
  std::size_t first_index = 0;           // index of eigenvalues[0] in the full spectrum
  std::vector<std::int64_t> sites;
  std::vector<std::vector<double>> amplitudes;  // amplitudes[site][k] = psi_k(site)
  EigenvectorMethod method = EigenvectorMethod::InverseIteration;
  // Inverse iteration only: max |<psi_j, psi_k>| over checked pairs, or the
  // full max |Q^T Q - I| when every site was requested.
  std::optional<double> orthonormality_residual;
  bool full_orthonormality = false;
  std::optional<double> max_residual;           // inverse iteration: max ||(T - E_k) psi_k||_2
  std::optional<double> eigenvalue_crosscheck;  // implicit QL: max |E_QL - E_bisection|
  std::optional<double> completeness_residual;  // only for the full spectrum
  std::size_t largest_cluster = 1;
  bool cluster_fallback = false;         // some vectors needed in-cluster orthogonalization
  double norm_bound = 0.0;

  const std::vector<double>& amplitude(std::int64_t site) const;
};

SpectralData eigensolve(const TruncatedOperator& T, const std::vector<std::int64_t>& sites,
                        const EigensolveOptions& opts = {});
std::vector<double> eigenvalues(const TruncatedOperator& T, std::size_t i0, std::size_t i1,
                                bool parallel = true, double tol = 1e-12);
std::size_t count_below(const TruncatedOperator& T, double x);
// Unit eigenvector for an (accurate) eigenvalue E by inverse iteration.
std::vector<double> eigenvector(const TruncatedOperator& T, double E);

measure::DiscreteMeasure spectral_measure(const SpectralData& d, std::int64_t site);
measure::DiscreteMeasure spectral_measure(const SpectralData& d,
                                          const std::vector<std::pair<std::int64_t, double>>& phi);

cplx borel_transform(const measure::DiscreteMeasure& mu, cplx z);

// m-function of the free Dirichlet half-line: -r with r + 1/r = z, |r| < 1.
cplx free_m_dirichlet(cplx z);

// Boundary-phase m-functions from the Dirichlet ones (c = cos 2 pi x0, s = sin 2 pi x0).
cplx m1_tilde_from_m1(cplx m1, double x0);
cplx m2_tilde_from_m2(cplx m2, double x0);
// Whole-line M_1, M_2 expressed through the boundary-phase m-functions.
cplx M1_from_tilde(cplx m1t, cplx m2t, double x0);
cplx M2_from_tilde(cplx m1t, cplx m2t, double x0);

struct MFunctionPair {
  cplx z;
  double x0 = 0.0;
  std::int64_t N = 0;
  cplx m1, m2;
  cplx m1_tilde, m2_tilde;
  std::optional<cplx> M1, M2;             // direct whole-line Borel transforms
  cplx M1_from_m, M2_from_m;              // -1/(m1+m2), m1 m2/(m1+m2)
  cplx M1_from_tilde, M2_from_tilde;
  std::optional<double> residual_M1, residual_M2, residual_tilde;
  std::optional<double> truncation_change;  // max relative change of m1, m2 under N -> 2N
};

// Spectral measures of the half-line truncations [1, N] (at delta_1) and
// [-N, 0] (at delta_0), plus optionally the whole window [-N, N] at delta_0, delta_1.
class HalfLineSpectra {
 public:
  HalfLineSpectra(const op::AlmostMathieu& op, std::int64_t N, bool with_whole = true,
                  const EigensolveOptions& opts = {});

  std::int64_t N() const { return N_; }
  cplx m1(cplx z) const;  // <d1, (H_[1,N] - z)^{-1} d1>
  cplx m2(cplx z) const;  // -1 / <d0, (H_[-N,0] - z)^{-1} d0>
  bool has_whole() const { return whole0_.has_value(); }
  MFunctionPair evaluate(double E, double eps, double x0) const;

  const measure::DiscreteMeasure& right() const { return right_; }
  const measure::DiscreteMeasure& left() const { return left_; }
  const measure::DiscreteMeasure& whole0() const { return whole0_.value(); }
  const measure::DiscreteMeasure& whole1() const { return whole1_.value(); }

 private:
  std::int64_t N_;
  measure::DiscreteMeasure right_, left_;
  std::optional<measure::DiscreteMeasure> whole0_, whole1_;
};

// Builds spectra at N and 2N; fails with a suggested N when the half-line
// m-functions move by more than tol under the doubling.
MFunctionPair half_line_m(const op::AlmostMathieu& op, double E, double eps, double x0,
                          std::int64_t N, double tol = 1e-6);

struct SubordinacyData {
  double L = 0.0;
  double log_a = 0.0;      // ln ||u_{x0+1/4}||^2_{L,0}
  double log_b = 0.0;      // ln ||u_{x0}||^2_{L,0}
  double log_omega = 0.0;  // ln sqrt(det gram), det via the Lagrange identity
  // gram = e^{log_gram_scale} [[g11, g12], [g12, g22]] for the (1,0), (0,1) solutions
  double g11 = 0.0, g12 = 0.0, g22 = 0.0, log_gram_scale = 0.0;

  double a() const;
  double b() const;
  double omega() const;
  // ln det of the stored Gram mantissa; cancels badly once the solutions grow.
  double log_det_gram_direct() const;
};

SubordinacyData subordinacy_quantities(const op::AlmostMathieu& op, double E, double x0, double L);
double find_L_of_eps(const op::AlmostMathieu& op, double E, double x0, double eps);

// Stand-in for the boundary phase of a Schnol solution: the x in [0, 1/2) minimizing
// ||u_x||_{L,L}, from the smallest eigenvector of the two-sided Gram matrix.
double schnol_phase_proxy(const op::AlmostMathieu& op, double E, double L);

struct JlCheck {
  double lhs = 0.0;  // Im m1_tilde(E + i eps)
  double rhs = 0.0;  // 1 / (eps b(L(eps)))
  double ratio = 0.0;
  double L = 0.0;
  bool pass = false;  // ratio >= 1/C_cal
};

// lhs from the supplied half-line spectra (built at a default N when null).
JlCheck jl_lower_bound_check(const op::AlmostMathieu& op, double E, double x0, double eps,
                             const HalfLineSpectra* spectra = nullptr, double c_cal = 1e2);
JlCheck jl_lower_bound_check(const op::AlmostMathieu& op, double E, double x0, double eps,
                             cplx m1_dirichlet, double c_cal = 1e2);

struct BoundaryScalingReport {
  double t = 0.0;
  double slack = 0.0;
  std::size_t n_checked = 0;
  std::size_t n_pass_M1 = 0;
  std::size_t n_pass_M2 = 0;
  double pass_fraction_M1 = 0.0;
  double pass_fraction_M2 = 0.0;
};

// Checks Im M_j(E + i eps) eps^t >= 1 - slack over energies x scales.
BoundaryScalingReport boundary_scaling_check(const measure::DiscreteMeasure& mu0,
                                             const measure::DiscreteMeasure& mu1,
                                             const std::vector<double>& energies,
                                             const std::vector<double>& eps_grid, double t,
                                             double slack = 0.1);

nlohmann::ordered_json to_json(const MFunctionPair& m);
nlohmann::ordered_json to_json(const SubordinacyData& s);
nlohmann::ordered_json to_json(const BoundaryScalingReport& r);

}  // namespace amo::spectral
