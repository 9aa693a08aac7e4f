#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "amo/measure.hpp"
#include "amo/operator.hpp"
#include "amo/spectral.hpp"
#include "json.hpp"

namespace amo::io {

// Deterministic JSON text: keys in insertion order, every float printed with
// 17 significant digits, non-finite floats as null.
std::string dump_json(const nlohmann::ordered_json& j, int indent = 2);

// Writes `content` to `path`; refuses (ConfigError) to replace an existing file
// unless `force`. Parent directories are created.
void write_text(const std::string& path, const std::string& content, bool force);
std::string read_text(const std::string& path);

std::string format_double(double v);

// "position,weight" header, one atom per line in ascending order.
std::string measure_csv(const measure::DiscreteMeasure& mu);
measure::DiscreteMeasure parse_measure_csv(const std::string& text);
measure::DiscreteMeasure read_measure_csv(const std::string& path);

// "n,value,log_abs"
std::string profile_csv(const op::SolutionProfile& u);
// "index,E,psi_<site>,..." over the stored sites
std::string spectral_csv(const spectral::SpectralData& d);

nlohmann::ordered_json to_json(const measure::DiscreteMeasure& mu);

}  // namespace amo::io
