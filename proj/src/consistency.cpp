#include "engage/consistency.hpp"

namespace engage::consistency {

Emotion TrackState::observe(Emotion label, unsigned persistence) {
  if (label == current_label) {
    candidate_label.reset();
    candidate_run = 0;
    return current_label;
  }
  if (candidate_label == label) {
    ++candidate_run;
  } else {
    candidate_label = label;
    candidate_run = 1;
  }
  if (candidate_run >= persistence) {
    current_label = label;
    candidate_label.reset();
    candidate_run = 0;
  }
  return current_label;
}

std::vector<DetectionEvent> smooth_track(std::span<const DetectionEvent> events,
                                         unsigned persistence) {
  if (persistence == 0) throw ValidationError("persistence must be at least 1");
  std::vector<DetectionEvent> out(events.begin(), events.end());
  if (out.empty()) return out;

  TrackState state{out.front().track_id, out.front().label, std::nullopt, 0};
  for (auto& e : out) {
    if (e.track_id != state.track_id) {
      throw ValidationError("smooth_track: mixed track ids");
    }
    e.label = state.observe(e.label, persistence);
  }
  return out;
}

LabelSmoother::LabelSmoother(unsigned persistence) : persistence_(persistence) {
  if (persistence_ == 0) throw ValidationError("persistence must be at least 1");
}

ingest::WindowBatch LabelSmoother::smooth_batch(ingest::WindowBatch batch) {
  // Batch events are timestamp-ordered, so walking them in place visits each
  // track's events in its own time order.
  for (auto& e : batch.events) {
    auto [it, inserted] = tracks_.try_emplace(e.track_id);
    TrackState& state = it->second;
    if (inserted) {
      state.track_id = e.track_id;
      state.current_label = e.label;
      continue;
    }
    e.label = state.observe(e.label, persistence_);
  }
  return batch;
}

std::size_t label_transitions(std::span<const DetectionEvent> events) {
  std::size_t n = 0;
  for (std::size_t i = 1; i < events.size(); ++i) {
    if (events[i].label != events[i - 1].label) ++n;
  }
  return n;
}

}  // namespace engage::consistency
