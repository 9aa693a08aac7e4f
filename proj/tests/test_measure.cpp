#include <cmath>
#include <random>

#include "amo/error.hpp"
#include "amo/measure.hpp"
#include "amo/spectral.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace amo;
using namespace amo::measure;

namespace {

const double kLn23 = std::log(2.0) / std::log(3.0);

DiscreteMeasure unit_atom(double at = 0.0) { return DiscreteMeasure({at}, {1.0}); }

DiscreteMeasure random_measure(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(-3.0, 3.0), w(0.01, 2.0);
  std::vector<std::pair<double, double>> at;
  for (std::size_t i = 0; i < n; ++i) at.emplace_back(u(rng), w(rng));
  return DiscreteMeasure::from_atoms(at);
}

}  // namespace

TEST_CASE("DiscreteMeasure validation") {
  CHECK_THROWS_AS(DiscreteMeasure({0.0, 0.0}, {1.0, 1.0}), InvalidArgument);
  CHECK_THROWS_AS(DiscreteMeasure({1.0, 0.0}, {1.0, 1.0}), InvalidArgument);
  CHECK_THROWS_AS(DiscreteMeasure({0.0}, {-1.0}), InvalidArgument);
  CHECK_THROWS_AS(DiscreteMeasure({0.0}, {1.0, 2.0}), InvalidArgument);
  const auto m = DiscreteMeasure::from_atoms({{1.0, 0.5}, {0.0, 0.25}, {1.0, 0.25}, {2.0, 0.0}});
  REQUIRE(m.size() == 2);
  CHECK(m.positions()[0] == 0.0);
  CHECK(m.weights()[1] == 0.75);
  CHECK(m.total_mass() == 1.0);
}

TEST_CASE("ScaleGrid") {
  CHECK_THROWS_AS(ScaleGrid({1.0, 0.5, 0.25}), InvalidArgument);
  CHECK_THROWS_AS(ScaleGrid({1.0, 0.5, 0.5, 0.1}), InvalidArgument);
  const auto g = ScaleGrid::triadic(3, 9);
  CHECK(g.size() == 7);
  CHECK(g.eps().front() == doctest::Approx(1.0 / 27.0));
}

TEST_CASE("concentration examples") {
  CHECK(concentration(unit_atom(), 0.0, 0.3) == 1.0);
  CHECK(concentration(unit_atom(), 5.0, 1.0) == 0.0);
  std::vector<double> y, w;
  for (int i = 0; i < 1000; ++i) {
    y.push_back((i + 0.5) / 1000.0);
    w.push_back(1.0 / 1000.0);
  }
  const DiscreteMeasure u(y, w);
  CHECK(std::abs(concentration(u, 0.5, 0.1) - 0.2) <= 2.0 / 1000.0);
  CHECK_THROWS_AS(concentration(u, 0.5, 0.0), InvalidArgument);
}

TEST_CASE("concentration equals the IFS mass at every triadic scale") {
  for (double p : {0.5, 0.3}) {
    const auto mu = cantor_measure(12, p);
    std::mt19937_64 rng(11);
    for (int i = 0; i < 50; ++i) {
      const double x = mu.positions()[rng() % mu.size()];
      for (int j = 1; j <= 11; ++j) {
        const double eps = std::pow(3.0, -j);
        CHECK(concentration(mu, x, eps) == doctest::Approx(oracle::cantor_mass(x - eps, x + eps, 12, p)).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("Cantor and Lebesgue reference measures") {
  const auto c1 = cantor_measure(1);
  REQUIRE(c1.size() == 2);
  CHECK(c1.positions()[1] == doctest::Approx(2.0 / 3.0));
  CHECK(c1.weights()[0] == 0.5);
  const auto c12 = cantor_measure(12);
  CHECK(c12.size() == 4096);
  CHECK(c12.total_mass() == doctest::Approx(1.0).epsilon(1e-14));
  CHECK_THROWS_AS(cantor_measure(0), InvalidArgument);
  CHECK_THROWS_AS(cantor_measure(21), InvalidArgument);
  CHECK_THROWS_AS(cantor_measure(5, 1.0), InvalidArgument);
}

TEST_CASE("local exponents: atom, Cantor, Lebesgue") {
  const auto a = local_scaling_exponents(unit_atom(), 0.0, ScaleGrid::dyadic(1, 8));
  CHECK(a.gamma_minus_hat == doctest::Approx(0.0));
  CHECK(a.gamma_plus_hat == doctest::Approx(0.0));

  const auto c = local_scaling_exponents(cantor_measure(12), 0.25, ScaleGrid::triadic(3, 9));
  CHECK(std::abs(c.gamma_minus_hat - kLn23) <= 0.05);
  CHECK(std::abs(c.gamma_plus_hat - kLn23) <= 0.05);
  CHECK(c.gamma_minus_hat <= c.gamma_plus_hat);

  const auto leb = lebesgue_measure(100000);
  const auto l = local_scaling_exponents(leb, 0.4, ScaleGrid::dyadic(3, 13));
  CHECK(std::abs(l.gamma_minus_hat - 1.0) <= 0.03);
  CHECK(std::abs(l.gamma_plus_hat - 1.0) <= 0.03);
  CHECK_FALSE(l.below_spacing);

  // scales with zero mass are excluded; all empty is an error
  const DiscreteMeasure two({0.0, 1.0}, {0.5, 0.5});
  const auto e = local_scaling_exponents(two, 0.5, ScaleGrid({0.6, 0.55, 0.52, 0.4, 0.2}));
  CHECK(e.excluded_scales == 2);
  CHECK_THROWS_AS(local_scaling_exponents(two, 0.5, ScaleGrid({0.4, 0.3, 0.2, 0.1})), NumericalError);
}

TEST_CASE("m-Borel transform") {
  for (double m : {0.5, 1.0, 2.0, 3.7})
    for (double eps : {1e-6, 0.1, 10.0}) CHECK(m_borel(unit_atom(1.0), m, 1.0, eps) == 1.0);

  // J_{mu,2}(x, eps) = eps Im M(x + i eps)
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> ux(-4.0, 4.0), ue(-8.0, 1.0);
  for (int t = 0; t < 200; ++t) {
    const auto mu = random_measure(rng, 1 + rng() % 300);
    const double x = ux(rng), eps = std::pow(10.0, ue(rng));
    const double J = m_borel(mu, 2.0, x, eps);
    const double via = eps * spectral::borel_transform(mu, {x, eps}).imag();
    CHECK(std::abs(J - via) <= 1e-12 * J);
    CHECK(J > 0.0);
    CHECK(J <= mu.total_mass() * (1 + 1e-15));
  }

  // nondecreasing in eps
  const auto mu = random_measure(rng, 100);
  for (double m : {1.0, 2.0, 4.0}) {
    double prev = 0.0;
    for (int j = -12; j <= 3; ++j) {
      const double v = m_borel(mu, m, 0.3, std::pow(2.0, j));
      CHECK(v >= prev);
      prev = v;
    }
  }

  // Lebesgue: J / eps -> arctan((1-x)/eps) + arctan(x/eps) ~ pi
  const auto leb = lebesgue_measure(100000);
  for (double eps : {1e-3, 3e-3, 1e-2}) {
    const double r = m_borel(leb, 2.0, 0.5, eps) / eps;
    const double closed = std::atan(0.5 / eps) * 2.0;
    CHECK(std::abs(r - M_PI) / M_PI < 0.02);
    CHECK(r == doctest::Approx(closed).epsilon(1e-3));
  }

  CHECK_THROWS_AS(m_borel(mu, 0.0, 0.0, 1.0), InvalidArgument);
  CHECK_THROWS_AS(m_borel(mu, 2.0, 0.0, 0.0), InvalidArgument);
  CHECK_THROWS_AS(m_borel(DiscreteMeasure(), 2.0, 0.0, 1.0), InvalidArgument);
}

TEST_CASE("j scaling exponent") {
  const auto s = j_scaling_exponent(unit_atom(), 2.0, 0.0, ScaleGrid::dyadic(1, 8));
  CHECK(s.sigma_liminf_hat == doctest::Approx(0.0));
  CHECK(s.sigma_limsup_hat == doctest::Approx(0.0));
  const auto c = j_scaling_exponent(cantor_measure(12), 2.0, 0.25, ScaleGrid::triadic(3, 9));
  CHECK(std::abs(c.sigma_liminf_hat - kLn23) <= 0.07);
  CHECK(std::abs(c.sigma_limsup_hat - kLn23) <= 0.07);
  const auto l = j_scaling_exponent(lebesgue_measure(100000), 2.0, 0.5, ScaleGrid::dyadic(3, 13));
  CHECK(std::abs(l.sigma_liminf_hat - 1.0) <= 0.05);
  CHECK(std::abs(l.sigma_limsup_hat - 1.0) <= 0.05);
}

TEST_CASE("Renyi sums") {
  const DiscreteMeasure a({0.3}, {0.7});
  CHECK(renyi_sum(a, 2.0, 0.1) == doctest::Approx(0.49));
  const auto leb = lebesgue_measure(64);
  CHECK(renyi_sum(leb, 2.0, 1.0 / 64.0) == doctest::Approx(64.0 * std::pow(1.0 / 64.0, 2.0)));
  CHECK(renyi_sum(cantor_measure(12), 2.0, std::pow(3.0, -6)) == std::ldexp(1.0, -6));
  std::mt19937_64 rng(9);
  for (int t = 0; t < 50; ++t) {
    const auto mu = random_measure(rng, 50);
    const double eps = std::pow(10.0, -3.0 * static_cast<double>(rng() % 1000) / 1000.0);
    CHECK(renyi_sum(mu, 1.0, eps) == doctest::Approx(mu.total_mass()).epsilon(1e-13));
    CHECK(renyi_sum(mu, 2.5, eps) <= std::pow(mu.total_mass(), 2.5) * (1 + 1e-13));
  }
  // half-open bins: an atom on a boundary goes right
  const DiscreteMeasure b({0.0, 0.5}, {1.0, 1.0});
  CHECK(renyi_sum(b, 2.0, 0.5) == doctest::Approx(2.0));
}

TEST_CASE("multifractal dimensions") {
  const auto g = ScaleGrid::triadic(3, 9);
  for (double q : {1.5, 2.0}) {
    const auto d = multifractal_dims(cantor_measure(12), q, g);
    CHECK(std::abs(d.d_minus - kLn23) <= 0.05);
    CHECK(std::abs(d.d_plus - kLn23) <= 0.05);
  }
  const double closed = -std::log(0.09 + 0.49) / std::log(3.0);
  const auto b = multifractal_dims(cantor_measure(12, 0.3), 2.0, g);
  CHECK(std::abs(b.d_plus - closed) <= 0.05);
  CHECK(std::abs(b.d_minus - closed) <= 0.05);
  const auto l = multifractal_dims(lebesgue_measure(100000), 2.0, ScaleGrid::dyadic(3, 13));
  CHECK(std::abs(l.d_plus - 1.0) <= 0.05);
  const auto a = multifractal_dims(unit_atom(), 2.0, ScaleGrid::dyadic(1, 8));
  CHECK(a.d_plus == doctest::Approx(0.0));
  CHECK_THROWS_AS(multifractal_dims(unit_atom(), 1.0, g), InvalidArgument);
}

TEST_CASE("bound formulas") {
  CHECK(bound_thm_gamma_plus(2.0, 2.0 / 3.0, 0.0) == doctest::Approx(1.0));
  const double s = 0.6 / 1.3;
  CHECK(bound_thm_gamma_plus(2.0, s, 0.0) == doctest::Approx(0.6));
  CHECK(bound_thm_gamma_plus(2.0, 0.0, 0.7) == 0.0);
  CHECK_THROWS_AS(bound_thm_gamma_plus(2.0, 2.0, 0.0), InvalidArgument);
  CHECK_THROWS_AS(bound_thm_gamma_plus(2.0, 0.5, 2.5), InvalidArgument);
  CHECK(bound_multifractal(1.0, 1.0) == doctest::Approx(0.0));
  CHECK(bound_multifractal(1.0, 0.7) == doctest::Approx(0.6 / 1.3));
  CHECK(bound_multifractal(1.0, 0.0) == doctest::Approx(1.0));
  CHECK_THROWS_AS(bound_multifractal(1.0, 1.2), InvalidArgument);
  CHECK_THROWS_AS(bound_multifractal(0.0, 0.0), InvalidArgument);
  CHECK(bound_packing(1.0, 0.7) == doctest::Approx(0.6));
  CHECK(bound_packing(1.0, 1.0) == 0.0);
}

TEST_CASE("dimension report") {
  const std::vector<double> qs{1.5, 2.0};
  const auto a = dimension_report(unit_atom(), ScaleGrid::dyadic(1, 8), qs, 2.0, 20, 1);
  CHECK(a.dimH_minus_hat == 0.0);
  CHECK(a.dimP_plus_hat == 0.0);

  const auto c = dimension_report(cantor_measure(12), ScaleGrid::triadic(3, 9), qs, 2.0, 50, 1);
  CHECK(std::abs(c.dimH_plus_hat - kLn23) <= 0.07);
  CHECK(std::abs(c.dimP_plus_hat - kLn23) <= 0.07);
  CHECK(c.dimH_minus_hat <= c.dimH_plus_hat);
  CHECK(c.dimP_minus_hat <= c.dimP_plus_hat);
  CHECK(c.renyi_monotone);

  const auto l = dimension_report(lebesgue_measure(100000), ScaleGrid::dyadic(5, 13), qs, 2.0, 50, 1);
  for (double v : {l.dimH_minus_hat, l.dimH_plus_hat, l.dimP_minus_hat, l.dimP_plus_hat})
    CHECK(std::abs(v - 1.0) <= 0.05);
  for (const auto& r : l.renyi) CHECK(std::abs(r.d_plus - 1.0) <= 0.05);

  // seeded and repeatable
  const auto c2 = dimension_report(cantor_measure(12), ScaleGrid::triadic(3, 9), qs, 2.0, 50, 1);
  CHECK(to_json(c).dump() == to_json(c2).dump());
  CHECK_THROWS_AS(dimension_report(unit_atom(), ScaleGrid::dyadic(1, 8), qs, 2.0, 0, 1), InvalidArgument);
}

TEST_CASE("weighted sampling follows the weights") {
  const DiscreteMeasure m({0.0, 1.0}, {0.2, 0.8});
  const auto idx = sample_atoms(m, 20000, 42);
  std::size_t ones = 0;
  for (auto i : idx) ones += i;
  CHECK(std::abs(static_cast<double>(ones) / 20000.0 - 0.8) < 0.02);
  CHECK(sample_atoms(m, 100, 7) == sample_atoms(m, 100, 7));
  CHECK(percentile({3.0, 1.0, 2.0}, 50.0) == 2.0);
  CHECK(percentile({1.0, 2.0}, 95.0) == doctest::Approx(1.95));
}
