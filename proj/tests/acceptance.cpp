// One line per acceptance criterion; exit status 1 if any line fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "amo/harness.hpp"
#include "amo/measure.hpp"
#include "amo/operator.hpp"
#include "amo/spectral.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace amo;
using amo::op::AlmostMathieu;

namespace {

struct Outcome {
  bool ok = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

int failures = 0;

void criterion(int id, const char* name, double max_seconds, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool in_time = max_seconds <= 0 || sec <= max_seconds;
  const bool pass = o.ok && in_time;
  if (!pass) ++failures;
  std::printf("%s %2d %s: %s; %.2fs%s\n", pass ? "PASS" : "FAIL", id, name, o.detail.c_str(), sec,
              max_seconds > 0 ? (in_time ? "" : " (over time limit)") : "");
  std::fflush(stdout);
}

}  // namespace

int main() {
  const double ln2_ln3 = std::log(2.0) / std::log(3.0);

  criterion(1, "mborel_borel_identity", 1.0, [] {
    std::mt19937_64 rng(101);
    std::uniform_real_distribution<double> u01(0.0, 1.0), ul(-6.0, 0.0);
    std::uniform_int_distribution<int> un(1, 400);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
      std::vector<std::pair<double, double>> atoms(static_cast<std::size_t>(un(rng)));
      for (auto& a : atoms) a = {4.0 * u01(rng) - 2.0, u01(rng) + 1e-3};
      const auto mu = measure::DiscreteMeasure::from_atoms(std::move(atoms));
      const double x = 5.0 * u01(rng) - 2.5, eps = std::pow(10.0, ul(rng));
      const double J = measure::m_borel(mu, 2.0, x, eps);
      const double B = eps * spectral::borel_transform(mu, spectral::cplx(x, eps)).imag();
      worst = std::max(worst, std::abs(J - B) / std::abs(J));
    }
    return Outcome{worst <= 1e-12, fmt("max relative difference %.3g (tol 1e-12, 1000 draws)", worst)};
  });

  criterion(2, "cantor_dimensions", 10.0, [&] {
    const auto mu = measure::cantor_measure(12);
    const auto grid = measure::ScaleGrid::triadic(3, 9);
    const auto r = measure::dimension_report(mu, grid, {1.5, 2.0}, 2.0, 50, 1);
    double dev = 0.0;
    for (double v : {r.dimH_minus_hat, r.dimH_plus_hat, r.dimP_minus_hat, r.dimP_plus_hat})
      dev = std::max(dev, std::abs(v - ln2_ln3));
    for (const auto& d : r.renyi) dev = std::max({dev, std::abs(d.d_minus - ln2_ln3), std::abs(d.d_plus - ln2_ln3)});
    std::vector<double> sig;
    for (const auto& s : r.samples) {
      sig.push_back(s.sigma_liminf);
      sig.push_back(s.sigma_limsup);
    }
    const double sig_lo = measure::percentile(sig, 5), sig_hi = measure::percentile(sig, 95);
    const double sdev = std::max(std::abs(sig_lo - ln2_ln3), std::abs(sig_hi - ln2_ln3));
    const bool ok = dev <= 0.05 && sdev <= 0.07;
    return Outcome{ok, fmt("max |gamma/D - ln2/ln3| %.4f (tol 0.05)", dev) +
                           fmt(", sigma 5-95%% spread from ln2/ln3 %.4f (tol 0.07)", sdev)};
  });

  criterion(3, "mborel_inequalities_suite", 60.0, [] {
    const auto rep = harness::run_verify_mborel(harness::default_config("verify-mborel"));
    std::size_t ineq = 0, held = 0;
    double worst = -INFINITY;
    for (const auto& c : rep.checks) {
      const bool is_ineq = c.name.rfind("gamma_plus_bound/", 0) == 0 || c.name.rfind("gamma_minus_vs_sigma", 0) == 0 ||
                           c.name.rfind("renyi_vs_sigma/", 0) == 0;
      if (!is_ineq) continue;
      ++ineq;
      if (c.status == harness::CheckStatus::SoftPass || c.status == harness::CheckStatus::Pass) ++held;
      const double excess = c.relation == ">=" ? (c.bound - c.slack) - c.measured : c.measured - (c.bound + c.slack);
      worst = std::max(worst, excess);
    }
    const bool ok = ineq > 0 && held == ineq && !rep.hard_failure() && std::abs(rep.checks.front().slack - 0.1) < 1e-12;
    return Outcome{ok, std::to_string(held) + "/" + std::to_string(ineq) +
                           " inequalities hold with slack 0.1" + fmt(", worst excess over bound+slack %.4f", worst)};
  });

  criterion(4, "transfer_determinant", 5.0, [] {
    std::mt19937_64 rng(104);
    std::uniform_real_distribution<double> ul(0.1, 5.0), ue(-8.0, 8.0), ut(0.0, 1.0);
    const auto f = fixture::golden();
    const std::int64_t k = 100000;
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
      const AlmostMathieu op(ul(rng), f, ut(rng));
      const auto t = op::transfer_product(op, ue(rng), op.theta(), k);
      worst = std::max(worst, std::abs(std::expm1(t.log_abs_det_tracked)));
    }
    return Outcome{worst <= 1e-9 * static_cast<double>(k),
                   fmt("max |det - 1| %.3g (tol 1e-9 k = 1e-4, k = 1e5, 100 draws)", worst)};
  });

  criterion(5, "cramer_green_vs_dense", 5.0, [] {
    std::mt19937_64 rng(105);
    std::uniform_real_distribution<double> ue(-6.0, 6.0), ut(0.0, 1.0), ul(0.2, 4.0);
    std::uniform_int_distribution<int> uk(1, 30), ux(-500, 500);
    const auto f = fixture::golden();
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
      const AlmostMathieu op(ul(rng), f, ut(rng));
      const double E = ue(rng);
      const std::int64_t x1 = ux(rng), x2 = x1 + uk(rng) - 1;
      std::uniform_int_distribution<std::int64_t> uy(x1, x2);
      const std::int64_t y = uy(rng);
      const auto G = oracle::dense_green(op, E, x1, x2);
      const auto g = op::green_entry(op, E, x1, x2, y);
      const double d1 = std::abs(G(0, y - x1)), d2 = std::abs(G(y - x1, x2 - x1));
      worst = std::max({worst, std::abs(std::exp(g.log_g_x1_y) - d1) / d1, std::abs(std::exp(g.log_g_y_x2) - d2) / d2});
    }
    return Outcome{worst <= 1e-8, fmt("max relative error %.3g (tol 1e-8, 100 windows of length <= 30)", worst)};
  });

  criterion(6, "lyapunov_on_spectrum", 5.0, [] {
    const AlmostMathieu op(3.0, fixture::golden(), 0.0);
    const auto T = spectral::TruncatedOperator::centered(op, 2000);
    const auto ev = spectral::eigenvalues(T, 0, T.size());
    double E = ev[0];
    for (double e : ev)
      if (std::abs(e) < std::abs(E)) E = e;
    const auto L = op::lyapunov(op, E, 1000000);
    const double d = std::abs(L.value - std::log(3.0));
    return Outcome{d <= 0.05, fmt("E = %.6f", E) + fmt(", L = %.5f", L.value) + fmt(", |L - ln 3| %.2g (tol 0.05)", d)};
  });

  criterion(7, "free_eigensolver", 10.0, [] {
    const std::size_t n = 1000;
    const spectral::TruncatedOperator T(1, std::vector<double>(n, 0.0));
    std::vector<std::int64_t> sites;
    for (std::int64_t s = 1; s <= static_cast<std::int64_t>(n); ++s) sites.push_back(s);
    const auto d = spectral::eigensolve(T, sites);
    double err = 0.0;
    for (std::size_t k = 0; k < n; ++k)
      err = std::max(err, std::abs(d.eigenvalues[k] - 2.0 * std::cos(static_cast<double>(n - k) * std::numbers::pi / (n + 1.0))));
    const double orth = d.orthonormality_residual.value_or(INFINITY);
    return Outcome{err <= 1e-8 && orth <= 1e-8 && d.full_orthonormality,
                   fmt("max eigenvalue error %.3g", err) + fmt(", max |Q^T Q - I| %.3g (tol 1e-8 each)", orth)};
  });

  criterion(8, "wronskian_constancy", 0.0, [] {
    std::mt19937_64 rng(108);
    std::uniform_real_distribution<double> ul(0.1, 0.95), ut(0.0, 1.0);
    const auto f = fixture::golden();
    double worst = 0.0, worst_super = 0.0;
    for (int i = 0; i < 100; ++i) {
      const AlmostMathieu op(ul(rng), f, ut(rng));
      const double E = oracle::bulk_energy(op, 100, rng);
      const double x = ut(rng);
      const auto u = op::solution_profile(op, E, x, -501, 501);
      const auto v = op::solution_profile(op, E, x + 0.25, -501, 501);
      for (std::int64_t n = -500; n <= 500; ++n) worst = std::max(worst, std::abs(op::wronskian(v, u, n) - 1.0));
    }
    // supercritical draws for the record: error relative to the size of the two products
    for (int i = 0; i < 20; ++i) {
      const AlmostMathieu op(1.5 + 2.0 * ut(rng), f, ut(rng));
      const double E = oracle::bulk_energy(op, 100, rng), x = ut(rng);
      const auto u = op::solution_profile(op, E, x, -501, 501);
      const auto v = op::solution_profile(op, E, x + 0.25, -501, 501);
      for (std::int64_t n = -500; n <= 500; n += 50) {
        const double size = std::abs(u.value(n + 1) * v.value(n)) + std::abs(u.value(n) * v.value(n + 1));
        if (std::isfinite(size)) worst_super = std::max(worst_super, std::abs(op::wronskian(v, u, n) - 1.0) / size);
      }
    }
    return Outcome{worst <= 1e-9, fmt("max |W - 1| %.3g over |n| <= 500, 100 draws with lambda < 1 (tol 1e-9)", worst) +
                                      fmt("; lambda > 1 error relative to term size %.3g", worst_super)};
  });

  criterion(9, "m_function_identities", 60.0, [] {
    const auto f = fixture::liouville_beta1();
    const AlmostMathieu op(std::exp(0.7), f, 0.0);
    const spectral::HalfLineSpectra hs(op, 5000, true);
    const auto mu = hs.whole0() + hs.whole1();
    const auto idx = measure::sample_atoms(mu, 20, 109);
    double r1 = 0.0, r2 = 0.0;
    for (auto k : idx) {
      const auto m = hs.evaluate(mu.positions()[k], 0.1, 0.0);
      r1 = std::max(r1, *m.residual_M1);
      r2 = std::max(r2, *m.residual_M2);
    }
    return Outcome{r1 <= 1e-6 && r2 <= 1e-6,
                   fmt("max |M1 + 1/(m1+m2)| %.3g", r1) + fmt(", max |M2 - m1 m2/(m1+m2)| %.3g (tol 1e-6, N = 5000, 20 E)", r2)};
  });

  criterion(10, "omega_gram_identity", 0.0, [] {
    std::mt19937_64 rng(110);
    const auto f = fixture::golden();
    const auto free_op = AlmostMathieu::free(f);
    const AlmostMathieu sub(0.5, f, 0.0);
    const double E_sub = oracle::bulk_energy(sub, 200, rng);
    double worst = 0.0;
    for (double L : {1e2, 1e3, 1e4}) {
      for (const auto* o : {&free_op, &sub}) {
        const double E = o == &free_op ? 0.6 : E_sub;
        const double gram = spectral::subordinacy_quantities(*o, E, 0.0, L).omega();
        const double brute = oracle::omega_sampled(*o, E, L, 10000);
        worst = std::max(worst, std::abs(gram - brute) / brute);
      }
    }
    return Outcome{worst <= 1e-6, fmt("max relative difference %.3g (tol 1e-6, L in {1e2,1e3,1e4}, 1e4 phases)", worst)};
  });

  criterion(11, "soft_transition", 600.0, [] {
    const auto c = harness::default_config("verify-transition");
    const auto r = harness::run_verify_transition(c);
    const auto* b = r.find("beta_hat_matches_target");
    const auto* dio = r.find("theta_diophantine");
    const auto* pd = r.find("packing_dimension");
    const auto* mf = r.find("multifractal/q=2.0");
    if (!b || !dio || !pd || !mf) return Outcome{false, "missing checks in the report"};
    const bool soft = pd->status == harness::CheckStatus::SoftPass && mf->status == harness::CheckStatus::SoftPass;
    const bool ok = !r.hard_failure() && b->status == harness::CheckStatus::Pass &&
                    std::abs(b->measured - 1.0) <= 0.05 && dio->status == harness::CheckStatus::Pass && soft &&
                    std::abs(pd->bound - 0.6) < 1e-6 && std::abs(mf->bound - 6.0 / 13.0) < 1e-6 && c.N == 10000;
    return Outcome{ok, fmt("beta_hat %.6f", b->measured) + fmt(", dimP_plus_hat %.4f <= 0.75", pd->measured) +
                           fmt(", D+(2) %.4f <= 0.6115", mf->measured) + ", " + harness::to_string(pd->status) + "/" +
                           harness::to_string(mf->status)};
  });

  criterion(12, "soft_localization_window", 600.0, [] {
    const auto c = harness::default_config("localization");
    const auto r = harness::run_localization_window(c);
    const auto* ch = r.find("decay_window_pass_fraction");
    if (!ch) return Outcome{false, "missing decay_window_pass_fraction"};
    const double rate = r.derived["rate"].get<double>();
    const bool ok = !r.hard_failure() && rate > 0 && std::abs(ch->details["slack"].get<double>() - 0.1) < 1e-12 &&
                    ch->measured >= 0.8;
    return Outcome{ok, fmt("rate %.4f", rate) + fmt(", pass fraction %.4f (>= 0.8, slack 0.1)", ch->measured) +
                           ", " + std::to_string(ch->details["n_checked"].get<std::size_t>()) + " resonant sites"};
  });

  std::printf("%d of 12 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
