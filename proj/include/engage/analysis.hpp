// Metrics, sensitivity sweeps and ablations over labeled corpora.

#pragma once

#include <array>
#include <optional>
#include <span>
#include <vector>

#include "engage/calibration.hpp"
#include "engage/core.hpp"
#include "engage/pipeline.hpp"
#include "engage/synth.hpp"

namespace engage::analysis {

struct Prediction {
  EngagementState predicted = EngagementState::AttentiveListening;
  EngagementState truth = EngagementState::AttentiveListening;
};

using ConfusionMatrix = std::array<std::array<std::size_t, kStateCount>, kStateCount>;

struct ClassificationMetrics {
  double accuracy = 0.0;
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double macro_f1 = 0.0;
  // Over the ordinal state encoding (attentive 0 ... disengaged 3).
  double mse = 0.0;
  double mae = 0.0;
  /// confusion[truth][predicted]
  ConfusionMatrix confusion{};
  std::size_t total = 0;

  double recall(EngagementState s) const;
};

/// Macro averages run over states seen in truth or predictions.
/// Throws std::invalid_argument on empty input.
ClassificationMetrics score_predictions(std::span<const Prediction> pairs);

enum class ThresholdPolicy {
  Fixed,  // classify with params.thresholds
  Refit,  // re-derive thresholds on the fit corpus for every evaluation
};

/// Scores an evaluation corpus under modified parameters. With Refit, each
/// evaluation first fits thresholds on the fit corpus scored the same way.
class CorpusEvaluator {
 public:
  CorpusEvaluator(std::span<const calibration::LabeledSegment> fit,
                  std::span<const calibration::LabeledSegment> eval, EngineParams params,
                  ThresholdPolicy policy);

  struct Outcome {
    Thresholds thresholds;
    ClassificationMetrics metrics;
  };

  Outcome evaluate(const EngineParams& params,
                   std::optional<Emotion> ablated = std::nullopt) const;
  Outcome evaluate_with_thresholds(const Thresholds& t) const;
  const Outcome& baseline() const { return baseline_; }
  const EngineParams& params() const { return params_; }

 private:
  std::span<const calibration::LabeledSegment> fit_;
  std::span<const calibration::LabeledSegment> eval_;
  EngineParams params_;
  ThresholdPolicy policy_;
  Outcome baseline_;
};

struct WeightPerturbation {
  Emotion emotion = Emotion::Neutral;
  double accuracy_minus = 0.0;  // beta * (1 - fraction)
  double accuracy_plus = 0.0;   // beta * (1 + fraction), clamped to 1
  double max_abs_delta = 0.0;
};

std::array<WeightPerturbation, kEmotionCount> perturb_weights(const CorpusEvaluator& evaluator,
                                                              double fraction);

struct ThresholdShift {
  std::string label;  // "t1-", "t1+", ..., "all-", "all+"
  Thresholds thresholds;
  double accuracy = 0.0;
};

struct ThresholdSensitivity {
  Thresholds baseline_thresholds;
  double baseline_accuracy = 0.0;
  std::vector<ThresholdShift> shifts;
};

/// Shifts each threshold alone by -eps and +eps, then all three together.
/// Throws ValidationError("threshold ordering violated") if any shift breaks
/// strict ordering.
ThresholdSensitivity perturb_thresholds(const CorpusEvaluator& evaluator, double eps);

struct AblationResult {
  Emotion emotion = Emotion::Neutral;
  double accuracy = 0.0;
  double accuracy_reduction = 0.0;  // baseline - ablated
  std::array<double, kStateCount> recall{};
  std::array<double, kStateCount> recall_reduction{};
};

/// Forces gamma of one emotion to zero (no renormalization) and re-scores.
AblationResult ablate_emotion(const CorpusEvaluator& evaluator, Emotion emotion);

/// One result per emotion, ordered by accuracy reduction (largest first,
/// ties by emotion index).
std::vector<AblationResult> ablation_ranking(const CorpusEvaluator& evaluator);

struct SmoothingAblation {
  std::size_t raw_transitions = 0;
  std::size_t smoothed_transitions = 0;
  double reduction_ratio = 0.0;
  std::optional<ClassificationMetrics> raw_metrics;
  std::optional<ClassificationMetrics> smoothed_metrics;
};

/// Runs the stream twice: with lambda = alpha = 0 and with the configured
/// values. window_truth, when given, maps each window position to its true
/// state for per-window metrics.
SmoothingAblation smoothing_ablation(std::span<const DetectionEvent> events,
                                     const pipeline::PipelineOptions& options,
                                     std::span<const EngagementState> window_truth = {});

/// True state of each window position of a synthetic session: the segment
/// containing the window's start, counted from the window of the first event.
std::vector<EngagementState> window_truths(const synth::SynthSession& session,
                                           std::uint64_t window_ms);

Json to_json(const ClassificationMetrics& m);

}  // namespace engage::analysis
