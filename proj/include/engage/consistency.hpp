// Per-track temporal label smoothing.
//
// Hysteresis rule: the emitted label switches from L to L' only once L' has
// been observed in `persistence` consecutive events of the track. Until then
// L keeps being emitted. The first event of a track initializes L. A
// persistence of 1 reproduces the input labels.

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "engage/core.hpp"
#include "engage/ingest.hpp"

namespace engage::consistency {

inline constexpr unsigned kDefaultPersistence = 3;

struct TrackState {
  std::uint64_t track_id = 0;
  Emotion current_label = Emotion::Neutral;
  std::optional<Emotion> candidate_label;
  unsigned candidate_run = 0;

  /// Feeds one observed label and returns the label to emit.
  Emotion observe(Emotion label, unsigned persistence);
};

/// Smooths one track's events. All events must share a track_id.
std::vector<DetectionEvent> smooth_track(std::span<const DetectionEvent> events,
                                         unsigned persistence);

/// Session-scoped smoother: state for each track carries across batches,
/// which must be fed in window order.
class LabelSmoother {
 public:
  explicit LabelSmoother(unsigned persistence = kDefaultPersistence);

  ingest::WindowBatch smooth_batch(ingest::WindowBatch batch);
  unsigned persistence() const { return persistence_; }
  std::size_t track_count() const { return tracks_.size(); }

 private:
  unsigned persistence_;
  std::unordered_map<std::uint64_t, TrackState> tracks_;
};

/// Number of adjacent label changes in a sequence of events.
std::size_t label_transitions(std::span<const DetectionEvent> events);

}  // namespace engage::consistency
