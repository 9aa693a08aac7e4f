#include "amo/arith.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include <boost/math/constants/constants.hpp>

#include "amo/error.hpp"

namespace amo::arith {

namespace {

BigInt floor_to_int(const HighPrec& x) { return static_cast<BigInt>(floor(x)); }
BigInt ceil_to_int(const HighPrec& x) { return static_cast<BigInt>(ceil(x)); }

BigInt parse_bigint(const nlohmann::json& v) {
  if (v.is_string()) {
    const auto& s = v.get_ref<const std::string&>();
    if (s.empty() || !std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); }))
      throw InvalidArgument("not a non-negative integer: '" + s + "'");
    return BigInt(s);
  }
  if (v.is_number_unsigned()) return BigInt(v.get<std::uint64_t>());
  if (v.is_number_integer()) {
    auto x = v.get<std::int64_t>();
    if (x < 0) throw InvalidArgument("negative integer in frequency record");
    return BigInt(x);
  }
  throw InvalidArgument("expected an integer or a decimal string");
}

}  // namespace

std::string to_string(const BigInt& v) { return v.str(); }
double to_double(const HighPrec& v) { return static_cast<double>(v); }

Frequency Frequency::from_partial_quotients(std::vector<BigInt> a, std::optional<HighPrec> value,
                                            bool truncated) {
  require(!a.empty(), "at least one partial quotient is required");
  for (const auto& x : a) require(x >= 1, "partial quotients must be >= 1");

  Frequency f;
  f.a_ = std::move(a);
  f.truncated_ = truncated;
  f.conv_.reserve(f.a_.size() + 1);
  BigInt p_prev = 1, q_prev = 0, p = 0, q = 1;
  f.conv_.push_back({p, q});
  for (const auto& an : f.a_) {
    BigInt pn = an * p + p_prev;
    BigInt qn = an * q + q_prev;
    p_prev = p;
    q_prev = q;
    p = pn;
    q = qn;
    f.conv_.push_back({p, q});
  }
  f.value_ = value ? *value : HighPrec(p) / HighPrec(q);
  require(f.value_ > 0 && f.value_ < 1, "frequency must lie in (0,1)");
  f.shadow_ = to_double(f.value_);
  return f;
}

double Frequency::q_double(std::size_t n) const { return static_cast<double>(q(n)); }

ParsedAlpha parse_alpha(std::string_view text) {
  using boost::math::constants::pi;
  std::string s(text);
  if (s == "golden") return {(sqrt(HighPrec(5)) - 1) / 2, kWorkingDigits};
  if (s == "sqrt2-1" || s == "silver") return {sqrt(HighPrec(2)) - 1, kWorkingDigits};
  if (s == "pi-3") return {pi<HighPrec>() - 3, kWorkingDigits};
  if (s == "e-2") return {exp(HighPrec(1)) - 2, kWorkingDigits};

  // Decimal literal: count the significant digits it carries.
  int digits = 0;
  bool seen_nonzero = false, seen_point = false, bad = s.empty();
  std::size_t i = 0;
  for (; i < s.size(); ++i) {
    char c = s[i];
    if (c == '.') {
      if (seen_point) bad = true;
      seen_point = true;
    } else if (std::isdigit(static_cast<unsigned char>(c))) {
      if (c != '0') seen_nonzero = true;
      if (seen_nonzero) ++digits;
    } else if (c == 'e' || c == 'E') {
      break;
    } else {
      bad = true;
    }
  }
  if (bad || digits == 0) throw InvalidArgument("cannot parse frequency '" + s + "'");
  HighPrec v;
  try {
    v = HighPrec(s);
  } catch (const std::exception&) {
    throw InvalidArgument("cannot parse frequency '" + s + "'");
  }
  require(v > 0 && v < 1, "frequency must lie in (0,1)");
  return {v, std::min(digits, kWorkingDigits)};
}

Frequency cf_expand(const HighPrec& alpha, int n_max, int significant_digits) {
  require(alpha > 0 && alpha < 1, "alpha must lie in (0,1)");
  require(n_max >= 1, "n_max must be positive");
  require(significant_digits >= 3 && significant_digits <= kWorkingDigits,
          "significant_digits out of range");

  // Track the expansion of both ends of the uncertainty interval; a partial
  // quotient is accepted only when both ends agree on it.
  const HighPrec delta = alpha * pow(HighPrec(10), -significant_digits);
  HighPrec lo = alpha - delta, hi = alpha + delta;
  // Straddling an integer with this much precision left means the input is
  // a rational with a short expansion.
  const HighPrec rational_budget = pow(HighPrec(10), -30);

  std::vector<BigInt> a;
  BigInt q_prev = 0, q = 1;
  bool truncated = false;
  for (int n = 1; n <= n_max; ++n) {
    if (lo <= 0) {
      if (HighPrec(q) * HighPrec(q) * delta < rational_budget)
        throw NumericalError("rational input: expansion terminates after " +
                             std::to_string(a.size()) + " partial quotients");
      truncated = true;
      break;
    }
    HighPrec y_lo = 1 / hi, y_hi = 1 / lo;
    BigInt f_lo = floor_to_int(y_lo), f_hi = floor_to_int(y_hi);
    if (f_lo != f_hi) {
      BigInt q_next = f_lo * q + q_prev;
      if (HighPrec(q_next) * HighPrec(q_next) * delta < rational_budget)
        throw NumericalError("rational input: expansion terminates after " +
                             std::to_string(a.size() + 1) + " partial quotients");
      truncated = true;
      break;
    }
    a.push_back(f_lo);
    BigInt q_next = f_lo * q + q_prev;
    q_prev = q;
    q = q_next;
    lo = y_lo - HighPrec(f_lo);
    hi = y_hi - HighPrec(f_lo);
  }
  if (a.empty()) throw NumericalError("precision exhausted before the first partial quotient");
  return Frequency::from_partial_quotients(std::move(a), alpha, truncated);
}

Frequency cf_synthesize(double beta_target, const BigInt& q_cap) {
  require(std::isfinite(beta_target) && beta_target >= 0, "beta_target must be >= 0");
  require(q_cap > 1, "q_cap must exceed 1");
  const HighPrec b(beta_target);
  const HighPrec ln_cap = log(HighPrec(q_cap));

  std::vector<BigInt> a;
  BigInt q_prev = 0, q = 1;
  for (;;) {
    HighPrec qh(q);
    HighPrec t = b * qh;
    // a*q >= e^{beta q}, so the next denominator would already exceed the cap.
    if (t > ln_cap + 1) break;
    BigInt an = ceil_to_int(exp(t) / qh);
    if (an < 1) an = 1;
    BigInt q_next = an * q + q_prev;
    if (q_next > q_cap) break;
    a.push_back(an);
    q_prev = q;
    q = q_next;
  }
  if (a.size() < 3)
    throw NumericalError("insufficient scales: only " + std::to_string(a.size()) +
                         " denominators fit below q_cap");
  return Frequency::from_partial_quotients(std::move(a));
}

BetaEstimate beta_estimate(const Frequency& freq, std::size_t tail_start) {
  const std::size_t n_conv = freq.convergents().size();
  if (tail_start + 2 > n_conv)
    throw InvalidArgument("beta estimate needs at least tail_start+2 convergents (have " +
                          std::to_string(n_conv) + ")");
  BetaEstimate out;
  out.tail_start = tail_start;
  out.per_n.reserve(n_conv - 1);
  for (std::size_t n = 0; n + 1 < n_conv; ++n) {
    HighPrec r = log(HighPrec(freq.q(n + 1))) / HighPrec(freq.q(n));
    out.per_n.push_back(to_double(r));
  }
  out.value = *std::max_element(out.per_n.begin() + static_cast<std::ptrdiff_t>(tail_start),
                                out.per_n.end());
  return out;
}

double torus_distance(double x) {
  double y = x - std::floor(x);
  return std::min(y, 1.0 - y);
}

DiophantineResult diophantine_check(double theta, const Frequency& freq,
                                    const DiophantineParams& params) {
  require(params.kappa > 0, "kappa must be positive");
  require(params.nu > 0, "nu must be positive");
  require(params.k_max >= 0, "k_max must be non-negative");
  DiophantineResult res;
  if (params.k_max == 0) return res;
  PhaseReducer red(freq);
  for (std::int64_t k = 1; k <= params.k_max; ++k) {
    const double fk = red.frac_multiple(k);
    const double scale = std::pow(static_cast<double>(k), params.nu) / params.kappa;
    for (int sgn : {1, -1}) {
      double margin = torus_distance(2.0 * theta + sgn * fk) * scale;
      if (margin < res.worst_margin) {
        res.worst_margin = margin;
        res.worst_k = sgn * k;
      }
    }
  }
  res.holds = res.worst_margin >= 1.0;
  return res;
}

PhaseReducer::PhaseReducer(const Frequency& freq) {
  const BigInt limit = BigInt(1) << 62;
  std::size_t n = 0;
  for (std::size_t i = 0; i < freq.convergents().size(); ++i) {
    if (freq.q(i) < limit) n = i;
  }
  const auto& c = freq.convergent(n);
  p_ = static_cast<std::int64_t>(c.p);
  q_ = static_cast<std::int64_t>(c.q);
  delta_ = to_double(freq.value() - HighPrec(c.p) / HighPrec(c.q));
}

double PhaseReducer::frac_multiple(std::int64_t k) const {
  std::int64_t kk = k % q_;
  if (kk < 0) kk += q_;
  const auto r = static_cast<std::int64_t>((static_cast<__int128>(kk) * p_) % q_);
  double x = static_cast<double>(r) / static_cast<double>(q_) + static_cast<double>(k) * delta_;
  x -= std::floor(x);
  return x >= 1.0 ? 0.0 : x;
}

double PhaseReducer::orbit(double theta, std::int64_t k) const {
  double x = theta + frac_multiple(k);
  x -= std::floor(x);
  return x >= 1.0 ? 0.0 : x;
}

double PhaseReducer::error_bound(std::int64_t k) const {
  return 4.0 * std::numeric_limits<double>::epsilon() *
         (1.0 + std::abs(static_cast<double>(k) * delta_));
}

nlohmann::ordered_json to_json(const Frequency& freq) {
  nlohmann::ordered_json j;
  auto& pq = j["partial_quotients"] = nlohmann::ordered_json::array();
  for (const auto& a : freq.partial_quotients()) pq.push_back(to_string(a));
  auto& cv = j["convergents"] = nlohmann::ordered_json::array();
  for (const auto& c : freq.convergents())
    cv.push_back(nlohmann::ordered_json{{"p", to_string(c.p)}, {"q", to_string(c.q)}});
  j["shadow"] = freq.shadow();
  j["value"] = freq.value().str(kWorkingDigits);
  j["truncated"] = freq.truncated();
  return j;
}

Frequency frequency_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("partial_quotients") || !j["partial_quotients"].is_array())
    throw InvalidArgument("frequency record needs a 'partial_quotients' array");
  std::vector<BigInt> a;
  for (const auto& v : j["partial_quotients"]) a.push_back(parse_bigint(v));
  std::optional<HighPrec> value;
  if (j.contains("value")) {
    if (!j["value"].is_string()) throw InvalidArgument("'value' must be a decimal string");
    value = HighPrec(j["value"].get<std::string>());
  }
  bool truncated = j.value("truncated", false);
  Frequency f = Frequency::from_partial_quotients(std::move(a), value, truncated);
  if (j.contains("convergents")) {
    const auto& cv = j["convergents"];
    if (!cv.is_array() || cv.size() != f.convergents().size())
      throw InvalidArgument("convergent list does not match the partial quotients");
    for (std::size_t i = 0; i < cv.size(); ++i) {
      if (parse_bigint(cv[i].at("p")) != f.convergent(i).p ||
          parse_bigint(cv[i].at("q")) != f.convergent(i).q)
        throw InvalidArgument("convergent " + std::to_string(i) + " is inconsistent");
    }
  }
  return f;
}

nlohmann::ordered_json to_json(const BetaEstimate& b) {
  nlohmann::ordered_json j;
  j["value"] = b.value;
  j["tail_start"] = b.tail_start;
  j["per_n"] = b.per_n;
  return j;
}

}  // namespace amo::arith
