// End-to-end composition: merge -> label smoothing -> scoring.

#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "engage/calibration.hpp"
#include "engage/consistency.hpp"
#include "engage/core.hpp"
#include "engage/engine.hpp"
#include "engage/ingest.hpp"
#include "engage/synth.hpp"

namespace engage::pipeline {

struct PipelineOptions {
  EngineParams params;
  unsigned persistence = consistency::kDefaultPersistence;
  bool smoothing = true;
};

/// Incremental driver shared by replay, simulation and the live server.
class Pipeline {
 public:
  using WindowSink = std::function<void(const WindowAggregate&)>;

  explicit Pipeline(const PipelineOptions& options);

  void set_window_sink(WindowSink sink) { window_sink_ = std::move(sink); }
  /// Runs one merged batch through smoothing and scoring.
  WindowAggregate process(ingest::WindowBatch batch);
  void process_all(std::vector<ingest::WindowBatch>&& batches);

  const engine::Session& session() const { return session_; }
  SessionReport report() const { return session_.report(); }

 private:
  PipelineOptions options_;
  std::optional<consistency::LabelSmoother> smoother_;
  engine::Session session_;
  WindowSink window_sink_;
};

struct RunResult {
  SessionReport report;
  ingest::DropStats drops;
};

/// Single-source run over an in-memory, timestamp-ordered stream. Throws
/// std::invalid_argument("no windows") for an empty stream.
RunResult run_events(std::span<const DetectionEvent> events, const PipelineOptions& options,
                     const Pipeline::WindowSink& sink = {});

/// Per-window frequencies of one segment's events, post-smoothing.
calibration::LabeledSegment label_segment_events(std::span<const DetectionEvent> events,
                                                 EngagementState truth,
                                                 const PipelineOptions& options);

struct CorpusSpec {
  std::size_t segments = 300;
  std::uint64_t seed = 1;
  unsigned students = 30;
  double fps = 25.0;
  std::uint64_t duration_ms = 300'000;
  bool noise = true;
};

/// Stratified synthetic segments pushed through the pipeline front end.
std::vector<calibration::LabeledSegment> build_corpus(const CorpusSpec& spec,
                                                      const PipelineOptions& options);

}  // namespace engage::pipeline
