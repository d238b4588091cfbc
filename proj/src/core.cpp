#include "engage/core.hpp"

#include <cmath>
#include <string>
#include <tuple>

namespace engage {

namespace {

constexpr std::array<std::string_view, kEmotionCount> kEmotionNames = {
    "neutral", "happiness", "surprise", "sadness", "anger", "disgust", "fear"};

constexpr std::array<std::string_view, kStateCount> kStateNames = {
    "attentive_listening", "active_participation", "passive_presence",
    "disengaged"};

bool in_unit_interval(double v) { return v >= 0.0 && v <= 1.0; }

}  // namespace

Emotion emotion_from_index(int index) {
  if (index < 1 || index > static_cast<int>(kEmotionCount)) {
    throw ValidationError("emotion index out of range: " + std::to_string(index));
  }
  return static_cast<Emotion>(index - 1);
}

std::string_view to_string(Emotion e) { return kEmotionNames[slot(e)]; }

std::optional<Emotion> parse_emotion(std::string_view name) {
  for (std::size_t i = 0; i < kEmotionCount; ++i) {
    if (kEmotionNames[i] == name) return static_cast<Emotion>(i);
  }
  return std::nullopt;
}

EngagementState state_from_ordinal(int value) {
  if (value < 0 || value >= static_cast<int>(kStateCount)) {
    throw ValidationError("engagement state ordinal out of range: " +
                          std::to_string(value));
  }
  return static_cast<EngagementState>(value);
}

std::string_view to_string(EngagementState s) {
  return kStateNames[static_cast<std::size_t>(s)];
}

std::optional<EngagementState> parse_state(std::string_view name) {
  for (std::size_t i = 0; i < kStateCount; ++i) {
    if (kStateNames[i] == name) return static_cast<EngagementState>(i);
  }
  return std::nullopt;
}

std::string_view to_string(GammaDenominator d) {
  return d == GammaDenominator::Detections ? "detections" : "frames";
}

std::optional<GammaDenominator> parse_gamma_denominator(std::string_view name) {
  if (name == "detections") return GammaDenominator::Detections;
  if (name == "frames") return GammaDenominator::Frames;
  return std::nullopt;
}

void validate_event(const DetectionEvent& e) {
  if (!std::isfinite(e.confidence) || !in_unit_interval(e.confidence)) {
    throw ValidationError("confidence out of range [0,1]");
  }
  const auto& b = e.bbox;
  if (!std::isfinite(b.cx) || !std::isfinite(b.cy) || !in_unit_interval(b.cx) ||
      !in_unit_interval(b.cy)) {
    throw ValidationError("bbox center out of range [0,1]");
  }
  if (!(b.width > 0.0) || !(b.height > 0.0) || !std::isfinite(b.width) ||
      !std::isfinite(b.height)) {
    throw ValidationError("bbox width and height must be positive");
  }
}

bool event_order_less(const DetectionEvent& a, const DetectionEvent& b) {
  auto key = [](const DetectionEvent& e) {
    return std::tie(e.timestamp_ms, e.camera_id, e.track_id, e.frame_index,
                    e.label, e.confidence, e.bbox.cx, e.bbox.cy, e.bbox.width,
                    e.bbox.height);
  };
  return key(a) < key(b);
}

void validate_thresholds(const Thresholds& t) {
  if (!std::isfinite(t.t1) || !std::isfinite(t.t2) || !std::isfinite(t.t3)) {
    throw ValidationError("thresholds must be finite");
  }
  if (!(t.t1 < t.t2 && t.t2 < t.t3)) {
    throw ValidationError("thresholds not strictly increasing");
  }
}

const EngineParams& validate_params(const EngineParams& p) {
  for (Emotion e : kAllEmotions) {
    const double b = p.beta[slot(e)];
    if (!std::isfinite(b) || !(b > 0.0 && b <= 1.0)) {
      throw ValidationError("beta." + std::string(to_string(e)) +
                            " out of range (0,1]");
    }
  }
  if (!std::isfinite(p.eta)) throw ValidationError("eta must be finite");
  if (!std::isfinite(p.alpha) || !in_unit_interval(p.alpha)) {
    throw ValidationError("alpha out of range");
  }
  if (!std::isfinite(p.lambda_reg) || p.lambda_reg < 0.0) {
    throw ValidationError("lambda_reg negative");
  }
  if (!std::isfinite(p.delta) || p.delta < 0.0) {
    throw ValidationError("delta negative");
  }
  if (!std::isfinite(p.theta) || !in_unit_interval(p.theta)) {
    throw ValidationError("theta out of range");
  }
  if (p.window_ms == 0) throw ValidationError("window_ms must be positive");
  if (p.variance_window == 0) {
    throw ValidationError("variance_window must be positive");
  }
  validate_thresholds(p.thresholds);
  return p;
}

}  // namespace engage
