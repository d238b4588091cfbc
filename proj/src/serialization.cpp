#include "engage/serialization.hpp"

#include <fstream>
#include <initializer_list>
#include <sstream>

namespace engage {

namespace {

void reject_unknown_keys(const Json& j, std::initializer_list<std::string_view> allowed,
                         std::string_view what) {
  if (!j.is_object()) throw ParseError(std::string(what) + " must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (auto k : allowed) known = known || it.key() == k;
    if (!known) {
      throw ParseError("unknown key '" + it.key() + "' in " + std::string(what));
    }
  }
}

const Json& require(const Json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw ParseError(std::string("missing key '") + key + "'");
  return *it;
}

std::uint64_t as_unsigned(const Json& v, const char* key) {
  if (!v.is_number_unsigned()) {
    throw ParseError(std::string("'") + key + "' must be a non-negative integer");
  }
  return v.get<std::uint64_t>();
}

double as_number(const Json& v, const char* key) {
  if (!v.is_number()) throw ParseError(std::string("'") + key + "' must be a number");
  return v.get<double>();
}

Json optional_number(const std::optional<double>& v) {
  return v ? Json(*v) : Json(nullptr);
}

std::optional<double> read_optional_number(const Json& j, const char* key) {
  const Json& v = require(j, key);
  if (v.is_null()) return std::nullopt;
  return as_number(v, key);
}

EmotionVector read_gamma(const Json& v) {
  if (!v.is_array() || v.size() != kEmotionCount) {
    throw ParseError("'gamma' must be an array of 7 numbers");
  }
  EmotionVector g{};
  for (std::size_t i = 0; i < kEmotionCount; ++i) g[i] = as_number(v[i], "gamma");
  return g;
}

EngagementState read_state(const Json& v, const char* key) {
  if (!v.is_string()) throw ParseError(std::string("'") + key + "' must be a string");
  auto s = parse_state(v.get<std::string>());
  if (!s) throw ParseError(std::string("unknown engagement state in '") + key + "'");
  return *s;
}

}  // namespace

Json parse_json(std::string_view text) {
  try {
    return Json::parse(text.begin(), text.end());
  } catch (const Json::parse_error& e) {
    throw ParseError(std::string("invalid JSON: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Events
// ---------------------------------------------------------------------------

Json to_json(const DetectionEvent& e) {
  Json j;
  j["camera_id"] = e.camera_id;
  j["frame_index"] = e.frame_index;
  j["timestamp_ms"] = e.timestamp_ms;
  j["track_id"] = e.track_id;
  j["bbox"] = Json::array({e.bbox.cx, e.bbox.cy, e.bbox.width, e.bbox.height});
  j["label"] = std::string(to_string(e.label));
  j["confidence"] = e.confidence;
  return j;
}

DetectionEvent event_from_json(const Json& j) {
  reject_unknown_keys(j,
                      {"camera_id", "frame_index", "timestamp_ms", "track_id", "bbox",
                       "label", "confidence"},
                      "event");
  DetectionEvent e;
  const auto camera = as_unsigned(require(j, "camera_id"), "camera_id");
  if (camera > UINT32_MAX) throw ParseError("'camera_id' too large");
  e.camera_id = static_cast<std::uint32_t>(camera);
  e.frame_index = as_unsigned(require(j, "frame_index"), "frame_index");
  e.timestamp_ms = as_unsigned(require(j, "timestamp_ms"), "timestamp_ms");
  e.track_id = as_unsigned(require(j, "track_id"), "track_id");

  const Json& bbox = require(j, "bbox");
  if (!bbox.is_array() || bbox.size() != 4) {
    throw ParseError("'bbox' must be an array of 4 numbers");
  }
  e.bbox = {as_number(bbox[0], "bbox"), as_number(bbox[1], "bbox"),
            as_number(bbox[2], "bbox"), as_number(bbox[3], "bbox")};

  const Json& label = require(j, "label");
  if (!label.is_string()) throw ParseError("'label' must be a string");
  auto parsed = parse_emotion(label.get<std::string>());
  if (!parsed) throw ParseError("unknown label '" + label.get<std::string>() + "'");
  e.label = *parsed;
  e.confidence = as_number(require(j, "confidence"), "confidence");

  validate_event(e);
  return e;
}

std::string format_event_line(const DetectionEvent& e) { return to_json(e).dump(); }

DetectionEvent parse_event_line(std::string_view line) {
  return event_from_json(parse_json(line));
}

// ---------------------------------------------------------------------------
// Params
// ---------------------------------------------------------------------------

Json to_json(const EngineParams& p) {
  Json j;
  Json beta = Json::object();
  for (Emotion e : kAllEmotions) beta[std::string(to_string(e))] = p.beta[slot(e)];
  j["beta"] = beta;
  j["eta"] = p.eta;
  j["lambda_reg"] = p.lambda_reg;
  j["alpha"] = p.alpha;
  j["delta"] = p.delta;
  j["theta"] = p.theta;
  j["window_ms"] = p.window_ms;
  j["variance_window"] = p.variance_window;
  j["thresholds"] = Json::array({p.thresholds.t1, p.thresholds.t2, p.thresholds.t3});
  j["gamma_denominator"] = std::string(to_string(p.gamma_denominator));
  return j;
}

EngineParams params_from_json(const Json& j) {
  reject_unknown_keys(j,
                      {"beta", "eta", "lambda_reg", "alpha", "delta", "theta",
                       "window_ms", "variance_window", "thresholds",
                       "gamma_denominator"},
                      "params");
  EngineParams p;
  if (auto it = j.find("beta"); it != j.end()) {
    if (!it->is_object()) throw ParseError("'beta' must be an object keyed by label");
    for (auto b = it->begin(); b != it->end(); ++b) {
      auto e = parse_emotion(b.key());
      if (!e) throw ParseError("unknown key '" + b.key() + "' in beta");
      p.beta[slot(*e)] = as_number(b.value(), "beta");
    }
  }
  auto number = [&](const char* key, double& out) {
    if (auto it = j.find(key); it != j.end()) out = as_number(*it, key);
  };
  number("eta", p.eta);
  number("lambda_reg", p.lambda_reg);
  number("alpha", p.alpha);
  number("delta", p.delta);
  number("theta", p.theta);
  if (auto it = j.find("window_ms"); it != j.end()) {
    p.window_ms = as_unsigned(*it, "window_ms");
  }
  if (auto it = j.find("variance_window"); it != j.end()) {
    p.variance_window = as_unsigned(*it, "variance_window");
  }
  if (auto it = j.find("thresholds"); it != j.end()) {
    if (!it->is_array() || it->size() != 3) {
      throw ParseError("'thresholds' must be an array of 3 numbers");
    }
    p.thresholds = {as_number((*it)[0], "thresholds"), as_number((*it)[1], "thresholds"),
                    as_number((*it)[2], "thresholds")};
  }
  if (auto it = j.find("gamma_denominator"); it != j.end()) {
    if (!it->is_string()) throw ParseError("'gamma_denominator' must be a string");
    auto d = parse_gamma_denominator(it->get<std::string>());
    if (!d) throw ParseError("'gamma_denominator' must be detections or frames");
    p.gamma_denominator = *d;
  }
  validate_params(p);
  return p;
}

EngineParams load_params_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open params file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return params_from_json(parse_json(buf.str()));
}

// ---------------------------------------------------------------------------
// Windows and reports
// ---------------------------------------------------------------------------

Json to_json(const WindowAggregate& w) {
  Json j;
  j["window_index"] = w.window_index;
  j["retained_count"] = w.retained_count;
  j["gamma"] = Json(w.gamma);
  j["psi"] = optional_number(w.psi);
  j["a_star"] = optional_number(w.a_star);
  j["a_smooth"] = optional_number(w.a_smooth);
  j["state_hint"] =
      w.state_hint ? Json(std::string(to_string(*w.state_hint))) : Json(nullptr);
  return j;
}

std::string format_window_line(const WindowAggregate& w) { return to_json(w).dump(); }

std::string format_report(const SessionReport& r) { return to_json(r).dump(2) + "\n"; }

WindowAggregate window_from_json(const Json& j) {
  reject_unknown_keys(j,
                      {"window_index", "retained_count", "gamma", "psi", "a_star",
                       "a_smooth", "state_hint"},
                      "window");
  WindowAggregate w;
  w.window_index = as_unsigned(require(j, "window_index"), "window_index");
  w.retained_count = as_unsigned(require(j, "retained_count"), "retained_count");
  w.gamma = read_gamma(require(j, "gamma"));
  w.psi = read_optional_number(j, "psi");
  w.a_star = read_optional_number(j, "a_star");
  w.a_smooth = read_optional_number(j, "a_smooth");
  const Json& hint = require(j, "state_hint");
  if (!hint.is_null()) w.state_hint = read_state(hint, "state_hint");
  return w;
}

Json to_json(const SessionReport& r) {
  Json j;
  j["lambda_star"] = r.lambda_star;
  j["final_state"] = std::string(to_string(r.final_state));
  j["transition_count"] = r.transition_count;
  Json windows = Json::array();
  for (const auto& w : r.windows) windows.push_back(to_json(w));
  j["windows"] = std::move(windows);
  j["params_used"] = to_json(r.params_used);
  return j;
}

SessionReport report_from_json(const Json& j) {
  reject_unknown_keys(
      j, {"lambda_star", "final_state", "transition_count", "windows", "params_used"},
      "report");
  SessionReport r;
  r.lambda_star = as_number(require(j, "lambda_star"), "lambda_star");
  r.final_state = read_state(require(j, "final_state"), "final_state");
  r.transition_count = as_unsigned(require(j, "transition_count"), "transition_count");
  const Json& windows = require(j, "windows");
  if (!windows.is_array()) throw ParseError("'windows' must be an array");
  for (const auto& w : windows) r.windows.push_back(window_from_json(w));
  r.params_used = params_from_json(require(j, "params_used"));
  return r;
}

}  // namespace engage
