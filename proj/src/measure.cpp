#include "amo/measure.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "amo/error.hpp"
#include "amo/kernels.hpp"

namespace amo::measure {

DiscreteMeasure::DiscreteMeasure(std::vector<double> positions, std::vector<double> weights)
    : y_(std::move(positions)), w_(std::move(weights)) {
  require(y_.size() == w_.size(), "positions and weights differ in length");
  for (std::size_t i = 0; i < y_.size(); ++i) {
    require(std::isfinite(y_[i]), "non-finite atom position");
    require(std::isfinite(w_[i]) && w_[i] > 0, "atom weights must be positive and finite");
    if (i > 0) require(y_[i] > y_[i - 1], "atom positions must be strictly increasing");
  }
  total_ = std::accumulate(w_.begin(), w_.end(), 0.0);
}

DiscreteMeasure DiscreteMeasure::from_atoms(std::vector<std::pair<double, double>> atoms) {
  std::sort(atoms.begin(), atoms.end());
  std::vector<double> y, w;
  for (const auto& [pos, wt] : atoms) {
    if (!(wt > 0)) continue;
    if (!y.empty() && y.back() == pos)
      w.back() += wt;
    else {
      y.push_back(pos);
      w.push_back(wt);
    }
  }
  return DiscreteMeasure(std::move(y), std::move(w));
}

std::pair<std::size_t, std::size_t> DiscreteMeasure::range(double a, double b) const {
  auto lo = std::lower_bound(y_.begin(), y_.end(), a);
  auto hi = std::upper_bound(lo, y_.end(), b);
  return {static_cast<std::size_t>(lo - y_.begin()), static_cast<std::size_t>(hi - y_.begin())};
}

double DiscreteMeasure::local_spacing(double x) const {
  if (y_.size() < 2) return 0.0;
  auto it = std::lower_bound(y_.begin(), y_.end(), x);
  std::size_t i = static_cast<std::size_t>(it - y_.begin());
  if (i == y_.size()) i = y_.size() - 1;
  if (i > 0 && std::abs(y_[i - 1] - x) < std::abs(y_[i] - x)) --i;
  double s = 0.0;
  int c = 0;
  if (i > 0) s += y_[i] - y_[i - 1], ++c;
  if (i + 1 < y_.size()) s += y_[i + 1] - y_[i], ++c;
  return s / c;
}

DiscreteMeasure DiscreteMeasure::operator+(const DiscreteMeasure& other) const {
  std::vector<std::pair<double, double>> atoms;
  atoms.reserve(size() + other.size());
  for (std::size_t i = 0; i < size(); ++i) atoms.emplace_back(y_[i], w_[i]);
  for (std::size_t i = 0; i < other.size(); ++i) atoms.emplace_back(other.y_[i], other.w_[i]);
  return from_atoms(std::move(atoms));
}

ScaleGrid::ScaleGrid(std::vector<double> eps) : eps_(std::move(eps)) {
  require(eps_.size() >= 4, "a scale grid needs at least 4 scales");
  for (std::size_t i = 0; i < eps_.size(); ++i) {
    require(std::isfinite(eps_[i]) && eps_[i] > 0, "scales must be positive");
    if (i > 0) require(eps_[i] < eps_[i - 1], "scales must be strictly decreasing");
  }
}

ScaleGrid ScaleGrid::geometric(double base, int j_min, int j_max) {
  require(base > 1, "grid base must exceed 1");
  require(j_max > j_min, "grid needs j_max > j_min");
  std::vector<double> e;
  for (int j = j_min; j <= j_max; ++j) e.push_back(std::pow(base, -j));
  return ScaleGrid(std::move(e));
}

SlopeSummary summarize_trace(const Trace& t) {
  const std::size_t n = t.log_eps.size();
  if (n < 2) throw NumericalError("fewer than two usable scales");
  auto slope = [&](std::size_t a, std::size_t b) {
    const double len = static_cast<double>(b - a);
    double mx = 0, my = 0;
    for (std::size_t i = a; i < b; ++i) mx += t.log_eps[i], my += t.log_value[i];
    mx /= len;
    my /= len;
    double sxy = 0, sxx = 0;
    for (std::size_t i = a; i < b; ++i) {
      const double dx = t.log_eps[i] - mx;
      sxy += dx * (t.log_value[i] - my);
      sxx += dx * dx;
    }
    return sxy / sxx;
  };
  SlopeSummary s;
  s.window = std::min(n, std::max<std::size_t>(2, (2 * n + 2) / 3));
  s.min_slope = std::numeric_limits<double>::infinity();
  s.max_slope = -s.min_slope;
  for (std::size_t a = 0; a + s.window <= n; ++a) {
    const double v = slope(a, a + s.window);
    s.min_slope = std::min(s.min_slope, v);
    s.max_slope = std::max(s.max_slope, v);
  }
  const std::size_t half = std::max<std::size_t>(2, (n + 1) / 2);
  s.regression_slope = slope(n - half, n);
  return s;
}

double concentration(const DiscreteMeasure& mu, double x, double eps) {
  require(eps > 0, "eps must be positive");
  auto [a, b] = mu.range(x - eps, x + eps);
  double s = 0.0;
  for (std::size_t i = a; i < b; ++i) s += mu.weights()[i];
  return s;
}

ScalingEstimate local_scaling_exponents(const DiscreteMeasure& mu, double x, const ScaleGrid& grid) {
  ScalingEstimate est;
  for (double e : grid.eps()) {
    const double f = concentration(mu, x, e);
    if (f <= 0) {
      ++est.excluded_scales;
      continue;
    }
    est.trace.log_eps.push_back(std::log(e));
    est.trace.log_value.push_back(std::log(f));
  }
  if (est.trace.log_eps.empty()) throw NumericalError("all scales empty");
  const auto s = summarize_trace(est.trace);
  est.gamma_minus_hat = s.min_slope;
  est.gamma_plus_hat = s.max_slope;
  est.regression_slope = s.regression_slope;
  est.below_spacing = grid.eps().back() < mu.local_spacing(x);
  return est;
}

double m_borel(const DiscreteMeasure& mu, double m, double x, double eps) {
  require(mu.size() > 0, "m-Borel transform of an empty measure");
  require(m > 0, "m must be positive");
  require(eps > 0, "eps must be positive");
  return kernels::mborel_sum_parallel(mu.positions().data(), mu.weights().data(), mu.size(), x, eps,
                                      m);
}

SigmaEstimate j_scaling_exponent(const DiscreteMeasure& mu, double m, double x, const ScaleGrid& grid) {
  SigmaEstimate est;
  for (double e : grid.eps()) {
    const double j = m_borel(mu, m, x, e);
    if (!(j > 0)) continue;
    est.trace.log_eps.push_back(std::log(e));
    est.trace.log_value.push_back(std::log(j));
  }
  const auto s = summarize_trace(est.trace);
  est.sigma_liminf_hat = s.max_slope;
  est.sigma_limsup_hat = s.min_slope;
  est.regression_slope = s.regression_slope;
  return est;
}

double renyi_sum(const DiscreteMeasure& mu, double q, double eps) {
  require(eps > 0, "eps must be positive");
  const auto& y = mu.positions();
  const auto& w = mu.weights();
  double total = 0.0, bin_mass = 0.0;
  bool have_bin = false;
  double current = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double t = y[i] / eps;
    double j = std::floor(t);
    // Atoms sitting on a bin's left edge belong to that bin.
    if (j + 1.0 - t <= 1e-12 * std::max(1.0, std::abs(t))) j += 1.0;
    if (!have_bin || j != current) {
      if (have_bin) total += std::pow(bin_mass, q);
      current = j;
      bin_mass = 0.0;
      have_bin = true;
    }
    bin_mass += w[i];
  }
  if (have_bin) total += std::pow(bin_mass, q);
  return total;
}

RenyiDims multifractal_dims(const DiscreteMeasure& mu, double q, const ScaleGrid& grid) {
  require(q > 1, "generalized dimensions are defined here for q > 1");
  RenyiDims r;
  r.q = q;
  for (double e : grid.eps()) {
    const double s = renyi_sum(mu, q, e);
    if (!(s > 0)) continue;
    r.trace.log_eps.push_back(std::log(e));
    r.trace.log_value.push_back(std::log(s) / (q - 1.0));
  }
  const auto s = summarize_trace(r.trace);
  r.d_minus = s.min_slope;
  r.d_plus = s.max_slope;
  r.regression_slope = s.regression_slope;
  return r;
}

double bound_thm_gamma_plus(double m, double sigma, double gamma_minus) {
  require(sigma >= 0, "sigma must be non-negative");
  require(m > sigma, "bound needs m > sigma");
  require(gamma_minus >= 0 && gamma_minus <= m, "gamma_minus must lie in [0, m]");
  return sigma * (m - gamma_minus) / (m - sigma);
}

double bound_multifractal(double beta, double log_lambda) {
  require(beta > 0, "beta must be positive");
  require(log_lambda >= 0 && log_lambda <= beta, "need 0 <= ln(lambda) <= beta");
  return (2 * beta - 2 * log_lambda) / (2 * beta - log_lambda);
}

double bound_packing(double beta, double log_lambda) {
  require(beta > 0, "beta must be positive");
  require(log_lambda >= 0, "ln(lambda) must be non-negative");
  return log_lambda >= beta ? 0.0 : 2.0 * (1.0 - log_lambda / beta);
}

std::vector<std::size_t> sample_atoms(const DiscreteMeasure& mu, std::size_t n, std::uint64_t seed) {
  require(mu.size() > 0, "cannot sample from an empty measure");
  std::vector<double> cdf(mu.size());
  std::partial_sum(mu.weights().begin(), mu.weights().end(), cdf.begin());
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> idx;
  idx.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53 * cdf.back();
    auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    idx.push_back(std::min<std::size_t>(static_cast<std::size_t>(it - cdf.begin()), mu.size() - 1));
  }
  return idx;
}

double percentile(std::vector<double> v, double p) {
  require(!v.empty(), "percentile of an empty set");
  std::sort(v.begin(), v.end());
  const double pos = p / 100.0 * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

DimensionReport dimension_report(const DiscreteMeasure& mu, const ScaleGrid& grid,
                                 const std::vector<double>& q_list, double m,
                                 std::size_t n_samples, std::uint64_t seed) {
  require(n_samples >= 1, "need at least one sample");
  require(m > 0, "m must be positive");
  DimensionReport rep;
  rep.m = m;
  rep.seed = seed;
  rep.grid = grid.eps();
  const auto idx = sample_atoms(mu, n_samples, seed);
  rep.samples.resize(n_samples);
  const auto sn = static_cast<std::ptrdiff_t>(n_samples);
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t k = 0; k < sn; ++k) {
    auto& rec = rep.samples[static_cast<std::size_t>(k)];
    rec.x = mu.positions()[idx[static_cast<std::size_t>(k)]];
    const auto g = local_scaling_exponents(mu, rec.x, grid);
    const auto s = j_scaling_exponent(mu, m, rec.x, grid);
    rec.gamma_minus = g.gamma_minus_hat;
    rec.gamma_plus = g.gamma_plus_hat;
    rec.sigma_liminf = s.sigma_liminf_hat;
    rec.sigma_limsup = s.sigma_limsup_hat;
  }
  std::vector<double> gm, gp, sl, ss;
  for (const auto& r : rep.samples) {
    gm.push_back(r.gamma_minus);
    gp.push_back(r.gamma_plus);
    sl.push_back(r.sigma_liminf);
    ss.push_back(r.sigma_limsup);
  }
  auto clamp01 = [&](double v) {
    if (v < 0.0 || v > 1.0) rep.clamped = true;
    return std::clamp(v, 0.0, 1.0);
  };
  rep.dimH_minus_hat = clamp01(percentile(gm, 5));
  rep.dimH_plus_hat = clamp01(percentile(gm, 95));
  rep.dimP_minus_hat = clamp01(percentile(gp, 5));
  rep.dimP_plus_hat = clamp01(percentile(gp, 95));
  rep.sigma_liminf_p95 = percentile(sl, 95);
  rep.sigma_liminf_median = percentile(sl, 50);
  rep.sigma_limsup_p95 = percentile(ss, 95);
  if (rep.sigma_liminf_p95 < m && rep.sigma_liminf_p95 >= 0)
    rep.packing_bound = m * rep.sigma_liminf_p95 / (m - rep.sigma_liminf_p95);

  std::vector<double> qs = q_list;
  std::sort(qs.begin(), qs.end());
  for (double q : qs) rep.renyi.push_back(multifractal_dims(mu, q, grid));
  for (std::size_t i = 1; i < rep.renyi.size(); ++i)
    if (rep.renyi[i].d_plus > rep.renyi[i - 1].d_plus + 1e-12) rep.renyi_monotone = false;
  return rep;
}

DiscreteMeasure cantor_measure(int depth, double left_weight) {
  require(depth >= 1 && depth <= 20, "cantor depth must lie in [1, 20]");
  require(left_weight > 0 && left_weight < 1, "left weight must lie in (0,1)");
  const std::size_t n = std::size_t{1} << depth;
  std::vector<double> y(n), w(n);
  const double denom = std::pow(3.0, depth);
  for (std::size_t k = 0; k < n; ++k) {
    // Left endpoint sum_i 2 d_i 3^{-i} = numer / 3^depth with an exact integer numerator.
    std::uint64_t numer = 0;
    double wt = 1.0;
    for (int i = 0; i < depth; ++i) {
      const bool bit = (k >> (depth - 1 - i)) & 1U;
      numer = numer * 3 + (bit ? 2 : 0);
      wt *= bit ? (1.0 - left_weight) : left_weight;
    }
    y[k] = static_cast<double>(numer) / denom;
    w[k] = wt;
  }
  return DiscreteMeasure(std::move(y), std::move(w));
}

DiscreteMeasure lebesgue_measure(std::size_t n_atoms) {
  require(n_atoms >= 1, "need at least one atom");
  std::vector<double> y(n_atoms), w(n_atoms, 1.0 / static_cast<double>(n_atoms));
  for (std::size_t i = 0; i < n_atoms; ++i)
    y[i] = (static_cast<double>(i) + 0.5) / static_cast<double>(n_atoms);
  return DiscreteMeasure(std::move(y), std::move(w));
}

namespace {
nlohmann::ordered_json trace_json(const Trace& t) {
  nlohmann::ordered_json j;
  j["log_eps"] = t.log_eps;
  j["log_value"] = t.log_value;
  return j;
}
}  // namespace

nlohmann::ordered_json to_json(const ScalingEstimate& s) {
  nlohmann::ordered_json j;
  j["gamma_minus_hat"] = s.gamma_minus_hat;
  j["gamma_plus_hat"] = s.gamma_plus_hat;
  j["regression_slope"] = s.regression_slope;
  j["excluded_scales"] = s.excluded_scales;
  j["below_spacing"] = s.below_spacing;
  j["trace"] = trace_json(s.trace);
  return j;
}

nlohmann::ordered_json to_json(const SigmaEstimate& s) {
  nlohmann::ordered_json j;
  j["sigma_liminf_hat"] = s.sigma_liminf_hat;
  j["sigma_limsup_hat"] = s.sigma_limsup_hat;
  j["regression_slope"] = s.regression_slope;
  j["trace"] = trace_json(s.trace);
  return j;
}

nlohmann::ordered_json to_json(const DimensionReport& r) {
  nlohmann::ordered_json j;
  j["dimH_minus_hat"] = r.dimH_minus_hat;
  j["dimH_plus_hat"] = r.dimH_plus_hat;
  j["dimP_minus_hat"] = r.dimP_minus_hat;
  j["dimP_plus_hat"] = r.dimP_plus_hat;
  j["clamped"] = r.clamped;
  j["m"] = r.m;
  j["sigma_liminf_p95"] = r.sigma_liminf_p95;
  j["sigma_liminf_median"] = r.sigma_liminf_median;
  j["sigma_limsup_p95"] = r.sigma_limsup_p95;
  j["packing_bound"] = r.packing_bound ? nlohmann::ordered_json(*r.packing_bound) : nullptr;
  auto& ren = j["renyi"] = nlohmann::ordered_json::array();
  for (const auto& d : r.renyi) {
    nlohmann::ordered_json e;
    e["q"] = d.q;
    e["d_minus_hat"] = d.d_minus;
    e["d_plus_hat"] = d.d_plus;
    e["regression_slope"] = d.regression_slope;
    e["trace"] = trace_json(d.trace);
    ren.push_back(std::move(e));
  }
  j["renyi_monotone"] = r.renyi_monotone;
  j["grid"] = r.grid;
  j["seed"] = r.seed;
  auto& smp = j["samples"] = nlohmann::ordered_json::array();
  for (const auto& s : r.samples)
    smp.push_back(nlohmann::ordered_json{{"x", s.x},
                                         {"gamma_minus_hat", s.gamma_minus},
                                         {"gamma_plus_hat", s.gamma_plus},
                                         {"sigma_liminf_hat", s.sigma_liminf},
                                         {"sigma_limsup_hat", s.sigma_limsup}});
  return j;
}

}  // namespace amo::measure
