#include "engage/ingest.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>
#include <thread>

namespace engage::ingest {

std::optional<DetectionEvent> filter_event(const DetectionEvent& e, double theta) {
  if (e.confidence > theta) return e;
  return std::nullopt;
}

std::uint64_t assign_window(const DetectionEvent& e, std::uint64_t window_ms) {
  if (window_ms == 0) throw ValidationError("window_ms must be positive");
  return e.timestamp_ms / window_ms;
}

// ---------------------------------------------------------------------------
// StreamMerger
// ---------------------------------------------------------------------------

StreamMerger::StreamMerger(std::uint64_t window_ms, double theta)
    : window_ms_(window_ms), theta_(theta) {
  if (window_ms_ == 0) throw ValidationError("window_ms must be positive");
}

SourceId StreamMerger::add_source() {
  sources_.push_back({});
  return sources_.size() - 1;
}

std::vector<WindowBatch> StreamMerger::push(SourceId source, const DetectionEvent& e) {
  if (source >= sources_.size() || !sources_[source].open) {
    throw std::logic_error("push to unknown or closed source");
  }
  Source& src = sources_[source];
  if (src.seen && e.timestamp_ms < src.watermark) {
    out_of_order_.fetch_add(1, std::memory_order_relaxed);
    return {};
  }
  src.watermark = e.timestamp_ms;
  src.seen = true;

  const auto w = assign_window(e, window_ms_);
  if (next_window_ && w < *next_window_) {
    late_.fetch_add(1, std::memory_order_relaxed);
  } else {
    pending_[w].accepted.push_back(e);
    accepted_.fetch_add(1, std::memory_order_relaxed);
    if (!filter_event(e, theta_)) below_theta_.fetch_add(1, std::memory_order_relaxed);
  }
  return drain(false);
}

std::vector<WindowBatch> StreamMerger::close_source(SourceId source) {
  if (source >= sources_.size()) throw std::logic_error("close of unknown source");
  sources_[source].open = false;
  return drain(false);
}

std::vector<WindowBatch> StreamMerger::finish() {
  for (auto& s : sources_) s.open = false;
  return drain(true);
}

std::vector<WindowBatch> StreamMerger::drain(bool flush_all) {
  if (pending_.empty()) return {};

  std::uint64_t end = 0;  // exclusive
  bool any_open = false;
  std::uint64_t min_watermark = std::numeric_limits<std::uint64_t>::max();
  for (const auto& s : sources_) {
    if (!s.open) continue;
    any_open = true;
    if (!s.seen) return {};  // a silent source could still deliver anything
    min_watermark = std::min(min_watermark, s.watermark);
  }
  if (flush_all || !any_open) {
    end = pending_.rbegin()->first + 1;
  } else {
    end = min_watermark / window_ms_;
  }

  const std::uint64_t start = next_window_.value_or(pending_.begin()->first);
  if (end <= start) return {};

  std::vector<WindowBatch> out;
  out.reserve(end - start);
  for (std::uint64_t w = start; w < end; ++w) {
    WindowBatch batch{w, {}};
    if (auto it = pending_.find(w); it != pending_.end()) {
      auto& accepted = it->second.accepted;
      std::sort(accepted.begin(), accepted.end(), event_order_less);
      for (const auto& e : accepted) {
        if (accepted_sink_) accepted_sink_(e);
        if (filter_event(e, theta_)) batch.events.push_back(e);
      }
      pending_.erase(it);
    }
    out.push_back(std::move(batch));
  }
  next_window_ = end;
  return out;
}

DropStats StreamMerger::stats() const {
  return {accepted_.load(std::memory_order_relaxed),
          below_theta_.load(std::memory_order_relaxed),
          out_of_order_.load(std::memory_order_relaxed),
          late_.load(std::memory_order_relaxed)};
}

std::vector<WindowBatch> merge_streams(const std::vector<std::vector<DetectionEvent>>& sources,
                                       std::uint64_t window_ms, double theta,
                                       DropStats* stats) {
  StreamMerger merger(window_ms, theta);
  std::vector<SourceId> ids;
  for (std::size_t i = 0; i < sources.size(); ++i) ids.push_back(merger.add_source());

  std::vector<WindowBatch> out;
  auto append = [&](std::vector<WindowBatch>&& batches) {
    for (auto& b : batches) out.push_back(std::move(b));
  };
  // Feed sources round-robin by timestamp so the watermark advances the way
  // concurrent live sources would.
  std::vector<std::size_t> cursor(sources.size(), 0);
  for (std::size_t i = 0; i < sources.size(); ++i) {
    if (sources[i].empty()) append(merger.close_source(ids[i]));
  }
  while (true) {
    std::optional<std::size_t> pick;
    for (std::size_t i = 0; i < sources.size(); ++i) {
      if (cursor[i] >= sources[i].size()) continue;
      if (!pick || sources[i][cursor[i]].timestamp_ms <
                       sources[*pick][cursor[*pick]].timestamp_ms) {
        pick = i;
      }
    }
    if (!pick) break;
    append(merger.push(ids[*pick], sources[*pick][cursor[*pick]]));
    if (++cursor[*pick] == sources[*pick].size()) append(merger.close_source(ids[*pick]));
  }
  append(merger.finish());
  if (stats) *stats = merger.stats();
  return out;
}

// ---------------------------------------------------------------------------
// Replay
// ---------------------------------------------------------------------------

ReplayReader::ReplayReader(const std::string& path, double speed)
    : in_(path), speed_(speed) {
  if (!in_) throw ParseError("cannot open event file " + path);
  if (!(speed_ >= 0.0)) throw ValidationError("speed must be non-negative");
}

std::optional<DetectionEvent> ReplayReader::next() {
  std::string line;
  while (std::getline(in_, line)) {
    ++line_no_;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;

    DetectionEvent e;
    try {
      e = parse_event_line(line);
    } catch (const std::exception& err) {
      throw ParseError("line " + std::to_string(line_no_) + ": " + err.what());
    }

    if (speed_ > 0.0) {
      const auto now = std::chrono::steady_clock::now();
      if (last_timestamp_ && e.timestamp_ms > *last_timestamp_) {
        const double delta_ms =
            static_cast<double>(e.timestamp_ms - *last_timestamp_) / speed_;
        const auto target =
            last_wall_ + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                             std::chrono::duration<double, std::milli>(delta_ms));
        std::this_thread::sleep_until(target);
        last_wall_ = target;
      } else if (!last_timestamp_) {
        last_wall_ = now;
      }
      last_timestamp_ = e.timestamp_ms;
    }
    return e;
  }
  return std::nullopt;
}

std::vector<DetectionEvent> read_events(const std::string& path) {
  ReplayReader reader(path);
  std::vector<DetectionEvent> out;
  while (auto e = reader.next()) out.push_back(*e);
  return out;
}

void write_events(const std::string& path, const std::vector<DetectionEvent>& events) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (const auto& e : events) out << format_event_line(e) << '\n';
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace engage::ingest
