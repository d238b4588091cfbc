// Weight and threshold calibration against labeled segments.
//
// Weights: exhaustive grid search scored by the mean per-state F1, then
// k-fold cross-validation of the top candidates. Thresholds: exact search of
// the accuracy-maximizing ordinal split triple over midpoints of adjacent
// sorted scores.

#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "engage/core.hpp"
#include "engage/serialization.hpp"

namespace engage::calibration {

struct WindowGamma {
  EmotionVector gamma{};
  bool empty = false;

  bool operator==(const WindowGamma&) const = default;
};

/// Per-window frequency vectors of one annotated segment.
struct LabeledSegment {
  std::vector<WindowGamma> gamma_sequence;
  EngagementState truth = EngagementState::AttentiveListening;

  bool operator==(const LabeledSegment&) const = default;
};

/// Session score of one segment under params (same engine path as live).
double segment_score(const LabeledSegment& segment, const EngineParams& params);
EngagementState classify_segment(const LabeledSegment& segment, const EngineParams& params);

struct WeightCandidateGrid {
  /// Candidate values per emotion, in emotion_index order.
  std::array<std::vector<double>, kEmotionCount> values;

  /// Neutral fixed at 0.5; five values at step 0.05 centered on 0.65
  /// (happiness, surprise), 0.75 (sadness) and 0.85 (anger, disgust, fear).
  static WeightCandidateGrid defaults();
  std::size_t combinations() const;
};

/// Throws ValidationError when a value leaves [0.1, 1.0] or the ordering
/// negative >= positive >= 0.5 does not hold for every candidate pair.
void validate_grid(const WeightCandidateGrid& grid);

struct WeightEvaluation {
  EmotionVector beta{};
  std::array<double, kStateCount> f1{};
  /// Mean F1 over states that occur in truth or predictions.
  double mean_f1 = 0.0;
};

/// Per-state F1 for (predicted, truth) pairs; states absent from both sides
/// are excluded from the mean.
WeightEvaluation f1_scores(std::span<const EngagementState> predicted,
                           std::span<const EngagementState> truth);

WeightEvaluation evaluate_weights(const EmotionVector& beta,
                                  std::span<const LabeledSegment> segments,
                                  const EngineParams& params);

struct GridSearchResult {
  /// Sorted by mean_f1 descending, ties by lexicographic beta ascending.
  std::vector<WeightEvaluation> ranked;
  std::size_t evaluation_count = 0;
};

GridSearchResult grid_search_weights(const WeightCandidateGrid& grid,
                                     std::span<const LabeledSegment> segments,
                                     const EngineParams& params, unsigned threads = 0);

struct CrossValidationResult {
  EmotionVector beta{};
  double mean_f1 = 0.0;
  std::vector<double> fold_f1;
};

/// Seeded fold assignment: a shuffled index list dealt round-robin into k
/// folds. Fold sizes differ by at most one.
std::vector<std::vector<std::size_t>> assign_folds(std::size_t n, std::size_t k,
                                                   std::uint64_t seed);

/// Picks the candidate with the best mean held-out F1. Requires k >= 2 and
/// at least k segments.
CrossValidationResult cross_validate(std::span<const EmotionVector> candidates,
                                     std::span<const LabeledSegment> segments,
                                     const EngineParams& params, std::size_t folds = 5,
                                     std::uint64_t seed = 0);

struct ScoredTruth {
  double score = 0.0;
  EngagementState truth = EngagementState::AttentiveListening;
};

struct ThresholdFit {
  Thresholds thresholds;
  double accuracy = 0.0;
};

/// Accuracy-maximizing split triple; ties go to the lowest thresholds.
/// Throws ValidationError naming any state absent from the input.
ThresholdFit find_thresholds(std::span<const ScoredTruth> scores);

std::vector<ScoredTruth> score_segments(std::span<const LabeledSegment> segments,
                                        const EngineParams& params);

// Corpus files: one JSON object per line,
// {"truth": "<state>", "gamma_sequence": [[7 numbers], ...], "empty": [bools]}.
Json to_json(const LabeledSegment& s);
LabeledSegment segment_from_json(const Json& j);
void write_corpus(const std::string& path, std::span<const LabeledSegment> segments);
std::vector<LabeledSegment> read_corpus(const std::string& path);

WeightCandidateGrid grid_from_json(const Json& j);

}  // namespace engage::calibration
