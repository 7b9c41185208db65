#pragma once

#include <string>

#include <json.hpp>

namespace hype {

using Json = nlohmann::ordered_json;

// Reals with |x| >= 1e-3 (and zero) print as "%.6f"; smaller magnitudes as
// "%.6g" so scales like 1e-05 survive. Non-finite values print as null.
std::string format_real(double x);

// Deterministic serialization: insertion key order, fixed real formatting,
// two-space indent. A trailing newline is appended.
std::string dump_json(const Json& value);

}  // namespace hype
