#include "amo/io.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "amo/error.hpp"

namespace amo::io {

using nlohmann::ordered_json;

std::string format_double(double v) {
  if (!std::isfinite(v)) return "null";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  std::string s(buf);
  // keep it a JSON float
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

namespace {

void put_indent(std::string& out, int indent, int level) {
  if (indent < 0) return;
  out += '\n';
  out.append(static_cast<std::size_t>(indent * level), ' ');
}

void emit(const ordered_json& j, std::string& out, int indent, int level) {
  switch (j.type()) {
    case ordered_json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += '{';
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out += ',';
        first = false;
        put_indent(out, indent, level + 1);
        out += ordered_json(it.key()).dump();
        out += indent < 0 ? ":" : ": ";
        emit(it.value(), out, indent, level + 1);
      }
      put_indent(out, indent, level);
      out += '}';
      return;
    }
    case ordered_json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      out += '[';
      bool first = true;
      for (const auto& v : j) {
        if (!first) out += ',';
        first = false;
        put_indent(out, indent, level + 1);
        emit(v, out, indent, level + 1);
      }
      put_indent(out, indent, level);
      out += ']';
      return;
    }
    case ordered_json::value_t::number_float:
      out += format_double(j.get<double>());
      return;
    default:
      out += j.dump();
  }
}

}  // namespace

std::string dump_json(const ordered_json& j, int indent) {
  std::string out;
  emit(j, out, indent, 0);
  out += '\n';
  return out;
}

void write_text(const std::string& path, const std::string& content, bool force) {
  namespace fs = std::filesystem;
  const fs::path p(path);
  if (fs::exists(p) && !force)
    throw ConfigError("refusing to overwrite existing file " + path + " (use --force)");
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream f(p, std::ios::binary | std::ios::trunc);
  if (!f) throw ConfigError("cannot open " + path + " for writing");
  f << content;
  if (!f) throw ConfigError("write to " + path + " failed");
}

std::string read_text(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot read " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::string measure_csv(const measure::DiscreteMeasure& mu) {
  std::string out = "position,weight\n";
  const auto& y = mu.positions();
  const auto& w = mu.weights();
  for (std::size_t i = 0; i < y.size(); ++i) {
    out += format_double(y[i]);
    out += ',';
    out += format_double(w[i]);
    out += '\n';
  }
  return out;
}

measure::DiscreteMeasure parse_measure_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::vector<double> y, w;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (lineno == 1 && line.rfind("position", 0) == 0) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw ConfigError("measure csv line " + std::to_string(lineno) + ": expected position,weight");
    try {
      std::size_t used = 0;
      const std::string a = line.substr(0, comma), b = line.substr(comma + 1);
      y.push_back(std::stod(a, &used));
      if (used != a.size()) throw std::invalid_argument(a);
      w.push_back(std::stod(b, &used));
      if (used != b.size()) throw std::invalid_argument(b);
    } catch (const std::logic_error&) {
      throw ConfigError("measure csv line " + std::to_string(lineno) + ": bad number");
    }
  }
  try {
    return measure::DiscreteMeasure(std::move(y), std::move(w));
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("measure csv: ") + e.what());
  }
}

measure::DiscreteMeasure read_measure_csv(const std::string& path) {
  return parse_measure_csv(read_text(path));
}

std::string profile_csv(const op::SolutionProfile& u) {
  std::string out = "n,value,log_abs\n";
  for (std::int64_t n = u.n_min(); n <= u.n_max(); ++n) {
    out += std::to_string(n);
    out += ',';
    out += format_double(u.value(n));
    out += ',';
    out += format_double(u.log_abs(n));
    out += '\n';
  }
  return out;
}

std::string spectral_csv(const spectral::SpectralData& d) {
  std::string out = "index,E";
  for (auto s : d.sites) out += ",psi_" + std::to_string(s);
  out += '\n';
  for (std::size_t k = 0; k < d.eigenvalues.size(); ++k) {
    out += std::to_string(d.first_index + k);
    out += ',';
    out += format_double(d.eigenvalues[k]);
    for (std::size_t s = 0; s < d.sites.size(); ++s) {
      out += ',';
      out += format_double(d.amplitudes[s][k]);
    }
    out += '\n';
  }
  return out;
}

ordered_json to_json(const measure::DiscreteMeasure& mu) {
  ordered_json j;
  j["n_atoms"] = mu.size();
  j["total_mass"] = mu.total_mass();
  j["positions"] = mu.positions();
  j["weights"] = mu.weights();
  return j;
}

}  // namespace amo::io
