#pragma once

// Hot loops in two flavours: a plain serial reference and a batched/OpenMP
// version. Results must agree (sums up to reassociation, counts exactly).

#include <complex>
#include <cstddef>
#include <vector>

namespace amo::kernels {

// sum_i w_i / (1 + (|y_i - x| / eps)^m)
double mborel_sum_serial(const double* y, const double* w, std::size_t n, double x, double eps,
                         double m);
double mborel_sum_parallel(const double* y, const double* w, std::size_t n, double x, double eps,
                           double m);

// sum_i w_i / (y_i - z)
std::complex<double> borel_sum_serial(const double* y, const double* w, std::size_t n,
                                      std::complex<double> z);
std::complex<double> borel_sum_parallel(const double* y, const double* w, std::size_t n,
                                        std::complex<double> z);

// Number of eigenvalues below x of the tridiagonal matrix with diagonal d and
// unit off-diagonal.
int sturm_count(const double* d, std::size_t n, double x);
// Counts for several shifts at once.
void sturm_counts_serial(const double* d, std::size_t n, const double* x, std::size_t nx, int* out);
void sturm_counts_batched(const double* d, std::size_t n, const double* x, std::size_t nx, int* out);

// Eigenvalues with indices [i0, i1) (ascending order) by bisection to absolute
// tolerance tol inside the Gershgorin interval.
std::vector<double> bisect_eigenvalues_serial(const std::vector<double>& d, std::size_t i0,
                                              std::size_t i1, double tol);
std::vector<double> bisect_eigenvalues_parallel(const std::vector<double>& d, std::size_t i0,
                                                std::size_t i1, double tol);

// Worker threads OpenMP would use (1 when built without OpenMP).
int max_threads();

}  // namespace amo::kernels
