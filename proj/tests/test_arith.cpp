#include <cmath>
#include <random>

#include "amo/arith.hpp"
#include "amo/error.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace amo;
using namespace amo::arith;

TEST_CASE("golden mean: all partial quotients 1, Fibonacci denominators") {
  const auto pa = parse_alpha("golden");
  const auto f = cf_expand(pa.value, 40, pa.digits);
  REQUIRE(f.depth() == 40);
  for (const auto& a : f.partial_quotients()) CHECK(a == 1);
  BigInt f0 = 1, f1 = 1;  // q_0 = 1, q_1 = 1, q_2 = 2, ...
  CHECK(f.q(0) == 1);
  for (std::size_t n = 1; n <= 40; ++n) {
    CHECK(f.q(n) == f1);
    const BigInt nx = f0 + f1;
    f0 = f1;
    f1 = nx;
  }
  CHECK(f.shadow() == doctest::Approx((std::sqrt(5.0) - 1.0) / 2.0).epsilon(1e-15));
  CHECK_FALSE(f.truncated());
}

TEST_CASE("pi - 3 partial quotients match integer Euclid on 200 digits") {
  const auto oracle_a = oracle::euclid_partial_quotients(oracle::kPiMinus3_200, 60);
  const auto pa = parse_alpha("pi-3");
  const auto f = cf_expand(pa.value, 60, pa.digits);
  REQUIRE(f.depth() == 60);
  for (std::size_t i = 0; i < 60; ++i) CHECK(f.partial_quotients()[i] == BigInt(oracle_a[i]));
  CHECK(f.partial_quotients()[0] == 7);
  CHECK(f.partial_quotients()[1] == 15);
  CHECK(f.partial_quotients()[3] == 292);
  CHECK(f.q(1) == 7);
  CHECK(f.q(2) == 106);
  CHECK(f.q(3) == 113);
  CHECK(f.q(4) == 33102);
}

TEST_CASE("expansion of a short decimal is limited by its digits") {
  const auto pa = parse_alpha("0.41421356237");
  const auto f = cf_expand(pa.value, 100, pa.digits);
  CHECK(f.truncated());
  CHECK(f.depth() < 100);
  CHECK(f.depth() > 5);
  for (std::size_t i = 0; i < 5; ++i) CHECK(f.partial_quotients()[i] == 2);
}

TEST_CASE("rational input is rejected") {
  CHECK_THROWS_AS(cf_expand(HighPrec("0.375"), 20), NumericalError);
  CHECK_THROWS_AS(cf_expand(HighPrec("0.5"), 5), NumericalError);
  // asking for fewer quotients than the expansion has is fine
  CHECK(cf_expand(HighPrec("0.375"), 2).depth() == 2);
}

TEST_CASE("parse_alpha rejects garbage and values outside (0,1)") {
  CHECK_THROWS_AS(parse_alpha("1.5"), InvalidArgument);
  CHECK_THROWS_AS(parse_alpha("0"), InvalidArgument);
  CHECK_THROWS_AS(parse_alpha("tau"), InvalidArgument);
  CHECK_THROWS_AS(parse_alpha("0.12x"), InvalidArgument);
  CHECK(parse_alpha("sqrt2-1").digits >= 200);
  CHECK(to_double(parse_alpha("e-2").value) == doctest::Approx(std::exp(1.0) - 2.0).epsilon(1e-15));
}

TEST_CASE("synthesis hits the beta target at the last scale") {
  const auto f = cf_synthesize(1.0, BigInt("1000000000000000"));
  REQUIRE(f.depth() == 3);
  CHECK(f.partial_quotients()[0] == 3);
  CHECK(f.partial_quotients()[1] == 7);
  CHECK(f.q(2) == 22);
  const auto b = beta_estimate(f, f.depth() - 1);
  CHECK(std::abs(b.value - 1.0) < 1e-6);
  REQUIRE(b.per_n.size() == 3);
  CHECK(b.per_n[0] == doctest::Approx(std::log(3.0)));

  const auto f2 = cf_synthesize(std::log(2.0), BigInt("1000000000000000000000000000000"));
  const auto b2 = beta_estimate(f2, f2.depth() - 1);
  CHECK(std::abs(b2.value - std::log(2.0)) < 0.01);
}

TEST_CASE("synthesis needs three scales") {
  CHECK_THROWS_AS(cf_synthesize(1.0, BigInt(20)), NumericalError);
  CHECK_THROWS_AS(cf_synthesize(-1.0, BigInt(1000)), InvalidArgument);
}

TEST_CASE("beta estimate of the golden mean is small") {
  const auto pa = parse_alpha("golden");
  const auto f = cf_expand(pa.value, 40, pa.digits);
  CHECK(beta_estimate(f, 11).value <= 0.05);
  CHECK_THROWS_AS(beta_estimate(f, 40), InvalidArgument);
}

TEST_CASE("Diophantine check") {
  const auto pa = parse_alpha("golden");
  const auto f = cf_expand(pa.value, 40, pa.digits);
  const DiophantineParams p;
  const auto ok = diophantine_check(0.0, f, p);
  CHECK(ok.holds);
  CHECK(ok.worst_margin >= 1.0);
  // 2 theta = 1 - alpha makes k = 1 exact
  const double theta = (1.0 - f.shadow()) / 2.0;
  const auto bad = diophantine_check(theta, f, p);
  CHECK_FALSE(bad.holds);
  REQUIRE(bad.worst_k);
  CHECK(*bad.worst_k == 1);
  CHECK(torus_distance(0.75) == doctest::Approx(0.25));
  CHECK(torus_distance(-0.1) == doctest::Approx(0.1));
}

TEST_CASE("phase reduction agrees with high-precision k alpha mod 1") {
  const auto pa = parse_alpha("pi-3");
  const auto f = cf_expand(pa.value, 60, pa.digits);
  const PhaseReducer red(f);
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<std::int64_t> uk(-1000000000000LL, 1000000000000LL);
  for (int i = 0; i < 200; ++i) {
    const std::int64_t k = uk(rng);
    HighPrec x = HighPrec(k) * pa.value;
    x -= floor(x);
    const double got = red.frac_multiple(k);
    const double d = std::abs(got - to_double(x));
    CHECK(std::min(d, 1.0 - d) <= 1e-15);
    CHECK(red.error_bound(k) < 1e-12);
  }
}

TEST_CASE("frequency JSON round trip") {
  const auto pa = parse_alpha("sqrt2-1");
  const auto f = cf_expand(pa.value, 25, pa.digits);
  const auto j = to_json(f);
  const auto g = frequency_from_json(nlohmann::json::parse(j.dump()));
  CHECK(g.depth() == f.depth());
  for (std::size_t n = 0; n <= f.depth(); ++n) CHECK(g.q(n) == f.q(n));
  nlohmann::json broken = nlohmann::json::parse(j.dump());
  broken["convergents"][3]["q"] = "12345";
  CHECK_THROWS(frequency_from_json(broken));
}
