// JSON wire formats for the core types.
//
// Events travel as one JSON object per line with keys camera_id,
// frame_index, timestamp_ms, track_id, bbox, label, confidence. Unknown keys
// are rejected everywhere; the params file may omit keys (defaults apply).

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

#include <json.hpp>

#include "engage/core.hpp"

namespace engage {

using Json = nlohmann::ordered_json;

/// Malformed wire input (bad JSON, wrong types, unknown or missing keys).
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

Json to_json(const DetectionEvent& e);
Json to_json(const EngineParams& p);
Json to_json(const WindowAggregate& w);
Json to_json(const SessionReport& r);

/// Parses and validates one record. Throws ParseError for shape problems and
/// ValidationError for invariant violations.
DetectionEvent event_from_json(const Json& j);
EngineParams params_from_json(const Json& j);
WindowAggregate window_from_json(const Json& j);
SessionReport report_from_json(const Json& j);

/// Compact single-line encoding without the trailing newline.
std::string format_event_line(const DetectionEvent& e);
std::string format_window_line(const WindowAggregate& w);
/// Pretty-printed report with a trailing newline; the on-disk format.
std::string format_report(const SessionReport& r);
DetectionEvent parse_event_line(std::string_view line);

/// Parses text as JSON, rethrowing syntax errors as ParseError.
Json parse_json(std::string_view text);

EngineParams load_params_file(const std::string& path);

}  // namespace engage
