#include "engage/pipeline.hpp"

#include <stdexcept>

namespace engage::pipeline {

Pipeline::Pipeline(const PipelineOptions& options)
    : options_(options), session_(options.params) {
  if (options_.smoothing) smoother_.emplace(options_.persistence);
}

WindowAggregate Pipeline::process(ingest::WindowBatch batch) {
  if (smoother_) batch = smoother_->smooth_batch(std::move(batch));
  WindowAggregate w = session_.process_window(batch);
  if (window_sink_) window_sink_(w);
  return w;
}

void Pipeline::process_all(std::vector<ingest::WindowBatch>&& batches) {
  for (auto& b : batches) process(std::move(b));
}

RunResult run_events(std::span<const DetectionEvent> events, const PipelineOptions& options,
                     const Pipeline::WindowSink& sink) {
  validate_params(options.params);
  ingest::StreamMerger merger(options.params.window_ms, options.params.theta);
  const auto source = merger.add_source();
  Pipeline pipe(options);
  pipe.set_window_sink(sink);
  for (const auto& e : events) pipe.process_all(merger.push(source, e));
  pipe.process_all(merger.finish());
  if (pipe.session().windows().empty()) throw std::invalid_argument("no windows");
  return {pipe.report(), merger.stats()};
}

calibration::LabeledSegment label_segment_events(std::span<const DetectionEvent> events,
                                                 EngagementState truth,
                                                 const PipelineOptions& options) {
  calibration::LabeledSegment seg;
  seg.truth = truth;
  const auto result = run_events(events, options);
  for (const auto& w : result.report.windows) {
    seg.gamma_sequence.push_back({w.gamma, w.empty()});
  }
  return seg;
}

std::vector<calibration::LabeledSegment> build_corpus(const CorpusSpec& spec,
                                                      const PipelineOptions& options) {
  const auto specs = synth::stratified_segments(spec.segments, spec.seed, spec.students,
                                                spec.fps, spec.duration_ms);
  std::vector<calibration::LabeledSegment> corpus;
  corpus.reserve(specs.size());
  for (std::size_t i = 0; i < specs.size(); ++i) {
    auto seg = synth::generate_segment(specs[i]);
    if (spec.noise) {
      seg.events = synth::inject_classifier_noise(std::move(seg.events),
                                                  synth::derive_seed(spec.seed, 2'000'000 + i));
    }
    corpus.push_back(label_segment_events(seg.events, seg.truth, options));
  }
  return corpus;
}

}  // namespace engage::pipeline
