#include <cmath>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "amo/arith.hpp"
#include "amo/error.hpp"
#include "amo/harness.hpp"
#include "amo/io.hpp"
#include "amo/measure.hpp"
#include "amo/operator.hpp"
#include "amo/spectral.hpp"
#include "json.hpp"

using nlohmann::json;
using nlohmann::ordered_json;
namespace h = amo::harness;

namespace {

enum Exit { kOk = 0, kHardFail = 1, kConfig = 2, kRegime = 3 };

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string format = "json";
  bool force = false;
};

struct Overrides {
  std::optional<std::string> alpha;
  std::optional<double> beta;
  std::optional<int> n_max;
  std::optional<std::string> q_cap;
  std::optional<std::size_t> tail_start;
  std::optional<double> lambda;
  std::optional<double> log_lambda;
  std::optional<double> theta;
  std::optional<std::int64_t> N;
  std::optional<std::string> measure_csv;
  // per-command values that are not part of the experiment config
  double E = 0.0;
  std::int64_t steps = 1000000;
  double x = 0.0;
  double m = 2.0;
  std::vector<std::int64_t> sites{0, 1};
};

h::ExperimentConfig make_config(const std::string& experiment, const Globals& g, const Overrides& o) {
  json j = json::object();
  if (!g.config.empty()) {
    try {
      j = json::parse(amo::io::read_text(g.config));
    } catch (const json::parse_error& e) {
      throw amo::ConfigError(g.config + ": " + e.what());
    }
    if (!j.is_object()) throw amo::ConfigError(g.config + ": expected a JSON object");
    if (j.contains("experiment") && j["experiment"] != experiment)
      throw amo::ConfigError("config is for experiment '" + j["experiment"].dump() + "', not '" + experiment + "'");
  }
  j["experiment"] = experiment;
  if (g.seed) j["seed"] = *g.seed;
  auto freq = [&]() -> json& {
    if (!j.contains("frequency")) j["frequency"] = json::object();
    return j["frequency"];
  };
  if (o.alpha) {
    freq()["mode"] = "expand";
    freq()["alpha"] = *o.alpha;
  }
  if (o.beta) {
    freq()["mode"] = "synthesize";
    freq()["beta"] = *o.beta;
  }
  if (o.n_max) freq()["n_max"] = *o.n_max;
  if (o.q_cap) freq()["q_cap"] = *o.q_cap;
  if (o.tail_start) freq()["tail_start"] = *o.tail_start;
  if (o.lambda) {
    j.erase("log_lambda");
    j["lambda"] = *o.lambda;
  }
  if (o.log_lambda) {
    j.erase("lambda");
    j["log_lambda"] = *o.log_lambda;
  }
  if (o.theta) j["theta"] = *o.theta;
  if (o.N) j["N"] = *o.N;
  if (o.measure_csv) j["measure"] = {{"kind", "csv"}, {"path", *o.measure_csv}};
  return h::config_from_json(j);
}

void emit(const Globals& g, const std::string& text) {
  if (g.out.empty())
    std::cout << text;
  else
    amo::io::write_text(g.out, text, g.force);
}

void emit_json(const Globals& g, const ordered_json& j) { emit(g, amo::io::dump_json(j)); }

std::string checks_csv(const h::VerificationReport& r) {
  std::string s = "name,kind,status,relation,measured,bound,slack\n";
  for (const auto& c : r.checks)
    s += c.name + "," + h::to_string(c.kind) + "," + h::to_string(c.status) + "," + c.relation + "," +
         amo::io::format_double(c.measured) + "," + amo::io::format_double(c.bound) + "," +
         amo::io::format_double(c.slack) + "\n";
  return s;
}

int report_out(const Globals& g, const h::VerificationReport& r) {
  if (g.format == "csv")
    emit(g, checks_csv(r));
  else
    emit_json(g, r.to_json());
  for (const auto& c : r.checks)
    if (c.status == h::CheckStatus::Fail || c.status == h::CheckStatus::Warn)
      std::fprintf(stderr, "%s %s: measured %s, bound %s (%s, slack %s)\n",
                   c.status == h::CheckStatus::Fail ? "FAIL" : "WARN", c.name.c_str(),
                   amo::io::format_double(c.measured).c_str(), amo::io::format_double(c.bound).c_str(),
                   c.relation.c_str(), amo::io::format_double(c.slack).c_str());
  std::fprintf(stderr, "%s: %zu pass, %zu soft-pass, %zu warn, %zu fail, %zu skipped\n", r.experiment.c_str(),
               r.count(h::CheckStatus::Pass), r.count(h::CheckStatus::SoftPass), r.count(h::CheckStatus::Warn),
               r.count(h::CheckStatus::Fail), r.count(h::CheckStatus::Skipped));
  return r.hard_failure() ? kHardFail : kOk;
}

int cmd_beta(const h::ExperimentConfig& c, const Globals& g) {
  const auto fb = h::build_frequency(c.frequency);
  if (g.format == "csv") {
    std::string s = "n,a,q,ln_q_next_over_q\n";
    const auto& a = fb.freq->partial_quotients();
    for (std::size_t n = 0; n < fb.beta.per_n.size(); ++n)
      s += std::to_string(n) + "," + amo::arith::to_string(a[n]) + "," + amo::arith::to_string(fb.freq->q(n)) +
           "," + amo::io::format_double(fb.beta.per_n[n]) + "\n";
    emit(g, s);
  } else {
    ordered_json j;
    j["frequency"] = amo::arith::to_json(*fb.freq);
    j["beta"] = amo::arith::to_json(fb.beta);
    emit_json(g, j);
  }
  return kOk;
}

amo::op::AlmostMathieu make_operator(const h::ExperimentConfig& c, const h::FrequencyBundle& fb) {
  const double ll = c.log_lambda_is_beta_hat ? fb.beta.value : c.log_lambda;
  return amo::op::AlmostMathieu(std::exp(ll), fb.freq, c.theta);
}

int cmd_spectrum(const h::ExperimentConfig& c, const Globals& g, const Overrides& o) {
  const auto fb = h::build_frequency(c.frequency);
  const auto op = make_operator(c, fb);
  const auto T = amo::spectral::TruncatedOperator::centered(op, c.N);
  for (auto s : o.sites)
    if (!T.contains(s)) throw amo::ConfigError("site " + std::to_string(s) + " outside [-N, N]");
  const auto sd = amo::spectral::eigensolve(T, o.sites);
  if (g.format == "csv") {
    emit(g, amo::io::spectral_csv(sd));
    return kOk;
  }
  ordered_json j;
  j["lambda"] = op.lambda();
  j["theta"] = op.theta();
  j["N"] = c.N;
  j["eigenvalues"] = sd.eigenvalues;
  j["sites"] = sd.sites;
  ordered_json amps = ordered_json::object();
  for (std::size_t s = 0; s < sd.sites.size(); ++s) amps[std::to_string(sd.sites[s])] = sd.amplitudes[s];
  j["amplitudes"] = amps;
  auto opt = [](const std::optional<double>& v) { return v ? ordered_json(*v) : ordered_json(nullptr); };
  j["max_residual"] = opt(sd.max_residual);
  j["orthonormality_residual"] = opt(sd.orthonormality_residual);
  j["eigenvalue_crosscheck"] = opt(sd.eigenvalue_crosscheck);
  j["completeness_residual"] = opt(sd.completeness_residual);
  emit_json(g, j);
  return kOk;
}

int cmd_measure_dims(const h::ExperimentConfig& c, const Globals& g) {
  const auto mu = h::build_measure(c);
  const auto grid = amo::measure::ScaleGrid::geometric(c.grid.base, c.grid.j_min, c.grid.j_max);
  const auto dr = amo::measure::dimension_report(mu, grid, c.q_list, c.m, c.n_samples, c.seed);
  if (g.format == "csv") {
    std::string s = "x,gamma_minus,gamma_plus,sigma_liminf,sigma_limsup\n";
    for (const auto& r : dr.samples)
      s += amo::io::format_double(r.x) + "," + amo::io::format_double(r.gamma_minus) + "," +
           amo::io::format_double(r.gamma_plus) + "," + amo::io::format_double(r.sigma_liminf) + "," +
           amo::io::format_double(r.sigma_limsup) + "\n";
    emit(g, s);
  } else {
    emit_json(g, amo::measure::to_json(dr));
  }
  return kOk;
}

int cmd_mborel(const h::ExperimentConfig& c, const Globals& g, const Overrides& o) {
  const auto mu = h::build_measure(c);
  const auto grid = amo::measure::ScaleGrid::geometric(c.grid.base, c.grid.j_min, c.grid.j_max);
  if (g.format == "csv") {
    std::string s = "eps,J\n";
    for (double e : grid.eps())
      s += amo::io::format_double(e) + "," + amo::io::format_double(amo::measure::m_borel(mu, o.m, o.x, e)) + "\n";
    emit(g, s);
    return kOk;
  }
  ordered_json j;
  j["x"] = o.x;
  j["m"] = o.m;
  ordered_json vals = ordered_json::array();
  for (double e : grid.eps()) vals.push_back({{"eps", e}, {"J", amo::measure::m_borel(mu, o.m, o.x, e)}});
  j["values"] = vals;
  j["scaling"] = amo::measure::to_json(amo::measure::j_scaling_exponent(mu, o.m, o.x, grid));
  emit_json(g, j);
  return kOk;
}

int cmd_lyapunov(const h::ExperimentConfig& c, const Globals& g, const Overrides& o) {
  const auto fb = h::build_frequency(c.frequency);
  const auto op = make_operator(c, fb);
  const auto L = amo::op::lyapunov(op, o.E, o.steps);
  ordered_json j;
  j["E"] = o.E;
  j["lambda"] = op.lambda();
  j["steps"] = L.steps;
  j["lyapunov"] = L.value;
  j["error_proxy"] = L.error_proxy;
  if (g.format == "csv")
    emit(g, "E,steps,lyapunov,error_proxy\n" + amo::io::format_double(o.E) + "," + std::to_string(L.steps) + "," +
                amo::io::format_double(L.value) + "," + amo::io::format_double(L.error_proxy) + "\n");
  else
    emit_json(g, j);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Almost Mathieu operator and m-Borel transform numerics"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  Overrides o;
  app.add_option("--config", g.config, "JSON experiment config")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "sampling seed");
  app.add_option("--out", g.out, "output file (default: stdout)");
  app.add_option("--format", g.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
  app.add_flag("--force", g.force, "overwrite an existing output file");

  auto add_freq = [&](CLI::App* s) {
    s->add_option("--alpha", o.alpha, "expand this frequency (golden, sqrt2-1, pi-3, e-2 or a decimal)");
    s->add_option("--beta", o.beta, "synthesize a frequency with this beta");
    s->add_option("--n-max", o.n_max, "partial quotients to expand");
    s->add_option("--q-cap", o.q_cap, "largest denominator when synthesizing");
    s->add_option("--tail-start", o.tail_start, "first n used for the beta estimate");
  };
  auto add_op = [&](CLI::App* s) {
    add_freq(s);
    auto* l = s->add_option("--lambda", o.lambda, "coupling");
    s->add_option("--log-lambda", o.log_lambda, "ln of the coupling")->excludes(l);
    s->add_option("--theta", o.theta, "phase");
  };

  auto* beta = app.add_subcommand("beta", "continued fraction and beta estimate");
  add_freq(beta);
  auto* spectrum = app.add_subcommand("spectrum", "eigenvalues and site amplitudes of the truncation to [-N, N]");
  add_op(spectrum);
  spectrum->add_option("--N", o.N, "half width");
  spectrum->add_option("--sites", o.sites, "sites whose amplitudes are reported");
  auto* mdims = app.add_subcommand("measure-dims", "dimension estimates of a measure");
  mdims->add_option("--measure-csv", o.measure_csv, "measure as position,weight CSV");
  auto* mborel = app.add_subcommand("mborel", "m-Borel transform over the scale grid");
  mborel->add_option("--measure-csv", o.measure_csv, "measure as position,weight CSV");
  mborel->add_option("--x", o.x, "evaluation point");
  mborel->add_option("--m", o.m, "exponent m > 0")->check(CLI::PositiveNumber);
  auto* lyap = app.add_subcommand("lyapunov", "Lyapunov exponent by renormalized transfer products");
  add_op(lyap);
  lyap->add_option("--E", o.E, "energy");
  lyap->add_option("--steps", o.steps, "number of steps")->check(CLI::PositiveNumber);
  auto* vm = app.add_subcommand("verify-mborel", "inequalities and identities on the synthetic measure suite");
  auto* vt = app.add_subcommand("verify-transition", "dimension bounds for the truncated spectral measure");
  add_op(vt);
  vt->add_option("--N", o.N, "half width");
  auto* loc = app.add_subcommand("localization", "decay of eigenvectors in resonant windows");
  add_op(loc);
  loc->add_option("--N", o.N, "half width");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfig;
  }

  try {
    CLI::App* sub = app.get_subcommands().front();
    const std::string name = sub->get_name();
    const auto cfg = make_config(name, g, o);
    if (name == "beta") return cmd_beta(cfg, g);
    if (name == "spectrum") return cmd_spectrum(cfg, g, o);
    if (name == "measure-dims") return cmd_measure_dims(cfg, g);
    if (name == "mborel") return cmd_mborel(cfg, g, o);
    if (name == "lyapunov") return cmd_lyapunov(cfg, g, o);
    if (sub == vm) return report_out(g, h::run_verify_mborel(cfg));
    if (sub == vt) return report_out(g, h::run_verify_transition(cfg));
    if (sub == loc) return report_out(g, h::run_localization_window(cfg));
  } catch (const amo::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfig;
  } catch (const amo::InvalidArgument& e) {
    std::fprintf(stderr, "invalid argument: %s\n", e.what());
    return kConfig;
  } catch (const amo::RegimeError& e) {
    std::fprintf(stderr, "regime refused: %s\n", e.what());
    return kRegime;
  } catch (const amo::NumericalError& e) {
    std::fprintf(stderr, "numerical error: %s\n", e.what());
    return kHardFail;
  }
  return kOk;
}
