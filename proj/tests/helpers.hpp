#pragma once

#include <cstdint>
#include <vector>

#include "engage/core.hpp"

namespace testutil {

inline engage::DetectionEvent ev(std::uint64_t ts, engage::Emotion label, double conf,
                                 std::uint64_t track = 0, std::uint32_t camera = 0,
                                 std::uint64_t frame = 0) {
  engage::DetectionEvent e;
  e.timestamp_ms = ts;
  e.label = label;
  e.confidence = conf;
  e.track_id = track;
  e.camera_id = camera;
  e.frame_index = frame;
  return e;
}

}  // namespace testutil
