// Event ingestion: confidence filtering, window assignment, multi-source
// merging with per-source watermarks, and replay of JSON-line event logs.

#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "engage/core.hpp"
#include "engage/serialization.hpp"

namespace engage::ingest {

/// All events retained for one window, sorted by event_order_less.
struct WindowBatch {
  std::uint64_t window_index = 0;
  std::vector<DetectionEvent> events;

  bool operator==(const WindowBatch&) const = default;
};

/// Keeps the event iff confidence > theta (strict).
std::optional<DetectionEvent> filter_event(const DetectionEvent& e, double theta);

/// floor(timestamp_ms / window_ms). window_ms must be positive.
std::uint64_t assign_window(const DetectionEvent& e, std::uint64_t window_ms);

struct DropStats {
  std::uint64_t accepted = 0;      // events that reached a window buffer
  std::uint64_t below_theta = 0;   // accepted but removed by confidence filter
  std::uint64_t out_of_order = 0;  // older than an earlier event of the same source
  std::uint64_t late = 0;          // window already emitted
};

using SourceId = std::size_t;

/// Merges timestamp-ordered sources into a strictly increasing sequence of
/// window batches. A window is emitted once every open source has delivered
/// an event at or past its end, or has closed. Windows between the first and
/// the last observed window are emitted even when empty.
///
/// Single-threaded owner; only stats() may be called from other threads.
class StreamMerger {
 public:
  /// Receives every accepted event (including those removed by the
  /// confidence filter) of each window at emission, in batch order.
  using AcceptedSink = std::function<void(const DetectionEvent&)>;

  StreamMerger(std::uint64_t window_ms, double theta);

  SourceId add_source();
  std::vector<WindowBatch> push(SourceId source, const DetectionEvent& e);
  std::vector<WindowBatch> close_source(SourceId source);
  /// Closes every source and flushes all pending windows.
  std::vector<WindowBatch> finish();

  void set_accepted_sink(AcceptedSink sink) { accepted_sink_ = std::move(sink); }

  DropStats stats() const;
  std::optional<std::uint64_t> next_window() const { return next_window_; }

 private:
  struct Source {
    std::uint64_t watermark = 0;
    bool seen = false;
    bool open = true;
  };
  struct Pending {
    std::vector<DetectionEvent> accepted;
  };

  std::vector<WindowBatch> drain(bool flush_all);

  std::uint64_t window_ms_;
  double theta_;
  std::vector<Source> sources_;
  std::map<std::uint64_t, Pending> pending_;
  std::optional<std::uint64_t> next_window_;
  AcceptedSink accepted_sink_;

  std::atomic<std::uint64_t> accepted_{0};
  std::atomic<std::uint64_t> below_theta_{0};
  std::atomic<std::uint64_t> out_of_order_{0};
  std::atomic<std::uint64_t> late_{0};
};

/// Convenience: merge fully materialized sources.
std::vector<WindowBatch> merge_streams(const std::vector<std::vector<DetectionEvent>>& sources,
                                       std::uint64_t window_ms, double theta,
                                       DropStats* stats = nullptr);

/// Reads canonical JSON-line events in file order. speed == 0 replays as fast
/// as possible; speed > 0 sleeps timestamp_delta / speed between events.
/// A malformed line raises ParseError naming its 1-based line number.
class ReplayReader {
 public:
  ReplayReader(const std::string& path, double speed = 0.0);

  std::optional<DetectionEvent> next();
  std::size_t line_number() const { return line_no_; }

 private:
  std::ifstream in_;
  double speed_;
  std::size_t line_no_ = 0;
  std::optional<std::uint64_t> last_timestamp_;
  std::chrono::steady_clock::time_point last_wall_;
};

std::vector<DetectionEvent> read_events(const std::string& path);
void write_events(const std::string& path, const std::vector<DetectionEvent>& events);

}  // namespace engage::ingest
