#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "json.hpp"

namespace amo::measure {

// Finite positive measure sum w_i delta_{y_i} with strictly increasing y_i.
class DiscreteMeasure {
 public:
  DiscreteMeasure() = default;
  // Requires strictly increasing positions and positive finite weights.
  DiscreteMeasure(std::vector<double> positions, std::vector<double> weights);
  // Sorts, merges coincident positions and drops non-positive weights.
  static DiscreteMeasure from_atoms(std::vector<std::pair<double, double>> atoms);

  const std::vector<double>& positions() const { return y_; }
  const std::vector<double>& weights() const { return w_; }
  std::size_t size() const { return y_.size(); }
  double total_mass() const { return total_; }
  // Index range [first, last) of atoms inside [a, b].
  std::pair<std::size_t, std::size_t> range(double a, double b) const;
  // Half-sum of the gaps to the neighbouring atoms around x.
  double local_spacing(double x) const;
  DiscreteMeasure operator+(const DiscreteMeasure& other) const;

 private:
  std::vector<double> y_, w_;
  double total_ = 0.0;
};

// Strictly decreasing positive scales, at least four of them.
class ScaleGrid {
 public:
  explicit ScaleGrid(std::vector<double> eps);
  static ScaleGrid geometric(double base, int j_min, int j_max);  // base^{-j}
  static ScaleGrid dyadic(int j_min, int j_max) { return geometric(2.0, j_min, j_max); }
  static ScaleGrid triadic(int j_min, int j_max) { return geometric(3.0, j_min, j_max); }

  const std::vector<double>& eps() const { return eps_; }
  std::size_t size() const { return eps_.size(); }

 private:
  std::vector<double> eps_;
};

// Exponents are read off log-log traces by least-squares slopes over sliding
// windows of ceil(2n/3) consecutive usable scales; the extreme window slopes
// stand in for liminf/limsup, and the slope over the finer half of the grid is
// the regression value.
struct Trace {
  std::vector<double> log_eps;   // usable scales only
  std::vector<double> log_value;
};

struct SlopeSummary {
  double min_slope = 0.0;
  double max_slope = 0.0;
  double regression_slope = 0.0;
  std::size_t window = 0;
};

SlopeSummary summarize_trace(const Trace& t);

struct ScalingEstimate {
  double gamma_minus_hat = 0.0;
  double gamma_plus_hat = 0.0;
  double regression_slope = 0.0;
  Trace trace;
  std::size_t excluded_scales = 0;  // scales with zero mass
  bool below_spacing = false;       // finest scale under the local atom spacing
};

struct SigmaEstimate {
  double sigma_liminf_hat = 0.0;  // largest window slope
  double sigma_limsup_hat = 0.0;  // smallest window slope
  double regression_slope = 0.0;
  Trace trace;
};

struct RenyiDims {
  double q = 0.0;
  double d_minus = 0.0;
  double d_plus = 0.0;
  double regression_slope = 0.0;
  Trace trace;
};

struct SampleRecord {
  double x = 0.0;
  double gamma_minus = 0.0;
  double gamma_plus = 0.0;
  double sigma_liminf = 0.0;
  double sigma_limsup = 0.0;
};

struct DimensionReport {
  double dimH_minus_hat = 0.0;
  double dimH_plus_hat = 0.0;
  double dimP_minus_hat = 0.0;
  double dimP_plus_hat = 0.0;
  bool clamped = false;
  std::vector<RenyiDims> renyi;
  bool renyi_monotone = true;     // D+ non-increasing along the sorted q list
  double m = 2.0;
  // Percentiles of the per-sample sigma estimates.
  double sigma_liminf_p95 = 0.0;
  double sigma_liminf_median = 0.0;
  double sigma_limsup_p95 = 0.0;
  // m s/(m - s) with s = sigma_liminf_p95, when s < m.
  std::optional<double> packing_bound;
  std::vector<SampleRecord> samples;
  std::vector<double> grid;
  std::uint64_t seed = 0;
};

double concentration(const DiscreteMeasure& mu, double x, double eps);
ScalingEstimate local_scaling_exponents(const DiscreteMeasure& mu, double x, const ScaleGrid& grid);

double m_borel(const DiscreteMeasure& mu, double m, double x, double eps);
SigmaEstimate j_scaling_exponent(const DiscreteMeasure& mu, double m, double x, const ScaleGrid& grid);

double renyi_sum(const DiscreteMeasure& mu, double q, double eps);
RenyiDims multifractal_dims(const DiscreteMeasure& mu, double q, const ScaleGrid& grid);

double bound_thm_gamma_plus(double m, double sigma, double gamma_minus);
// Upper bound on D+(q), q > 1, for the spectral measure in the singular
// continuous regime: (2 beta - 2 ln lambda)/(2 beta - ln lambda).
double bound_multifractal(double beta, double log_lambda);
// Upper packing-dimension bound: 2(1 - ln lambda / beta) for ln lambda < beta, else 0.
double bound_packing(double beta, double log_lambda);

// Samples n points with probability proportional to mass (seeded, portable),
// estimates per-point exponents and summarizes by 5th/95th percentiles.
DimensionReport dimension_report(const DiscreteMeasure& mu, const ScaleGrid& grid,
                                 const std::vector<double>& q_list, double m,
                                 std::size_t n_samples, std::uint64_t seed);

// Reference measures.
DiscreteMeasure cantor_measure(int depth, double left_weight = 0.5);
DiscreteMeasure lebesgue_measure(std::size_t n_atoms);

// Weight-proportional sample of indices; deterministic for a given seed.
std::vector<std::size_t> sample_atoms(const DiscreteMeasure& mu, std::size_t n, std::uint64_t seed);

// Linear-interpolated percentile (p in [0,100]) of unsorted values.
double percentile(std::vector<double> v, double p);

nlohmann::ordered_json to_json(const DimensionReport& r);
nlohmann::ordered_json to_json(const ScalingEstimate& s);
nlohmann::ordered_json to_json(const SigmaEstimate& s);

}  // namespace amo::measure
