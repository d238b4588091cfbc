// Shared domain types for the engagement analytics engine.
//
// Every other module consumes these. All types are plain values: copy them
// freely across threads, nothing here holds shared mutable state.

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace engage {

/// Raised when a parameter set or a record violates a type invariant.
/// The message names the offending field.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// ---------------------------------------------------------------------------
// Emotion labels
// ---------------------------------------------------------------------------

enum class Emotion : std::uint8_t {
  Neutral,
  Happiness,
  Surprise,
  Sadness,
  Anger,
  Disgust,
  Fear,
};

inline constexpr std::size_t kEmotionCount = 7;

inline constexpr std::array<Emotion, kEmotionCount> kAllEmotions = {
    Emotion::Neutral, Emotion::Happiness, Emotion::Surprise, Emotion::Sadness,
    Emotion::Anger,   Emotion::Disgust,   Emotion::Fear,
};

/// One real value per emotion, indexed by slot(emotion).
using EmotionVector = std::array<double, kEmotionCount>;

/// 1-based category index (Neutral = 1 ... Fear = 7).
constexpr int emotion_index(Emotion e) { return static_cast<int>(e) + 1; }

/// 0-based array slot for EmotionVector access.
constexpr std::size_t slot(Emotion e) { return static_cast<std::size_t>(e); }

/// Inverse of emotion_index; throws ValidationError outside 1..7.
Emotion emotion_from_index(int index);

/// Lowercase wire name ("neutral", "happiness", ...).
std::string_view to_string(Emotion e);
std::optional<Emotion> parse_emotion(std::string_view name);

// ---------------------------------------------------------------------------
// Engagement states
// ---------------------------------------------------------------------------

/// Ordinal severity encoding; higher session score means a higher value.
enum class EngagementState : std::uint8_t {
  AttentiveListening = 0,
  ActiveParticipation = 1,
  PassivePresence = 2,
  Disengaged = 3,
};

inline constexpr std::size_t kStateCount = 4;

inline constexpr std::array<EngagementState, kStateCount> kAllStates = {
    EngagementState::AttentiveListening, EngagementState::ActiveParticipation,
    EngagementState::PassivePresence, EngagementState::Disengaged};

constexpr int ordinal(EngagementState s) { return static_cast<int>(s); }
EngagementState state_from_ordinal(int value);

std::string_view to_string(EngagementState s);
std::optional<EngagementState> parse_state(std::string_view name);

// ---------------------------------------------------------------------------
// Detection events
// ---------------------------------------------------------------------------

/// Normalized image-space box: center (cx, cy), width, height.
struct BoundingBox {
  double cx = 0.5;
  double cy = 0.5;
  double width = 0.1;
  double height = 0.1;

  bool operator==(const BoundingBox&) const = default;
};

/// One face observation at one frame.
struct DetectionEvent {
  std::uint32_t camera_id = 0;
  std::uint64_t frame_index = 0;
  std::uint64_t timestamp_ms = 0;
  std::uint64_t track_id = 0;
  BoundingBox bbox;
  Emotion label = Emotion::Neutral;
  double confidence = 0.0;

  bool operator==(const DetectionEvent&) const = default;
};

/// Throws ValidationError when confidence or bbox invariants do not hold.
void validate_event(const DetectionEvent& e);

/// Total order used for batch contents: (timestamp, camera, track), then the
/// remaining fields so that equal-keyed events still sort deterministically.
bool event_order_less(const DetectionEvent& a, const DetectionEvent& b);

// ---------------------------------------------------------------------------
// Engine parameters
// ---------------------------------------------------------------------------

struct Thresholds {
  double t1 = 0.58;
  double t2 = 0.61;
  double t3 = 0.64;

  bool operator==(const Thresholds&) const = default;
};

/// How the per-window emotion frequency is normalized.
enum class GammaDenominator : std::uint8_t {
  Detections,  // divide by the number of retained detections
  Frames,      // divide by the number of distinct (camera, frame) pairs
};

std::string_view to_string(GammaDenominator d);
std::optional<GammaDenominator> parse_gamma_denominator(std::string_view name);

/// Published emotion weights, in emotion_index order.
inline constexpr EmotionVector kDefaultBeta = {0.5, 0.7, 0.6, 0.75, 0.85, 0.8, 0.9};

struct EngineParams {
  EmotionVector beta = kDefaultBeta;
  double eta = 0.0;
  double lambda_reg = 0.1;
  double alpha = 0.7;
  double delta = 0.05;
  double theta = 0.5;
  std::uint64_t window_ms = 60'000;
  std::size_t variance_window = 5;
  Thresholds thresholds;
  GammaDenominator gamma_denominator = GammaDenominator::Detections;

  bool operator==(const EngineParams&) const = default;
};

/// Returns p unchanged when every invariant holds; otherwise throws
/// ValidationError naming the first offending field.
const EngineParams& validate_params(const EngineParams& p);

/// Threshold check on its own, shared by the params validator and the
/// threshold-perturbation analysis.
void validate_thresholds(const Thresholds& t);

// ---------------------------------------------------------------------------
// Engine outputs
// ---------------------------------------------------------------------------

struct WindowAggregate {
  std::uint64_t window_index = 0;
  std::size_t retained_count = 0;
  EmotionVector gamma{};
  // Absent for windows with no retained detections.
  std::optional<double> psi;
  std::optional<double> a_star;
  // Absent only while no window has been scored yet.
  std::optional<double> a_smooth;
  std::optional<EngagementState> state_hint;

  bool empty() const { return retained_count == 0; }
  bool operator==(const WindowAggregate&) const = default;
};

struct SessionReport {
  double lambda_star = 0.0;
  EngagementState final_state = EngagementState::AttentiveListening;
  std::vector<WindowAggregate> windows;
  std::size_t transition_count = 0;
  EngineParams params_used;

  bool operator==(const SessionReport&) const = default;
};

}  // namespace engage
