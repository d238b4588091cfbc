// Windowed engagement scoring.
//
// Per window: confidence-weighted emotion frequencies (gamma), the weighted
// raw score psi = sum(gamma * beta) + eta, a variance penalty over the last W
// raw scores, and an exponential moving average. A session score is the
// (1 + delta * tau)-weighted mean of the smoothed scores, clamped to [0, 1],
// and is mapped to an engagement state by three ascending thresholds.
//
// Windows without retained detections hold the previous smoothed score and
// do not enter the variance history.

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "engage/core.hpp"
#include "engage/ingest.hpp"

namespace engage::engine {

struct Frequencies {
  EmotionVector gamma{};
  std::size_t retained = 0;
  bool empty() const { return retained == 0; }
};

Frequencies compute_frequencies(std::span<const DetectionEvent> events,
                                GammaDenominator denominator = GammaDenominator::Detections);
inline Frequencies compute_frequencies(const ingest::WindowBatch& batch,
                                       GammaDenominator denominator = GammaDenominator::Detections) {
  return compute_frequencies(batch.events, denominator);
}

double raw_score(const EmotionVector& gamma, const EngineParams& params);

/// Recursive state shared by the variance and EMA steps.
class EmaState {
 public:
  explicit EmaState(std::size_t variance_window = 5);

  void push_history(double psi);
  std::span<const double> history() const { return history_; }
  std::size_t capacity() const { return capacity_; }

  std::optional<double> previous;

 private:
  std::size_t capacity_;
  std::vector<double> history_;
};

/// Population variance; 0 for fewer than two samples.
double population_variance(std::span<const double> values);

/// psi - lambda * Var(history). The history must already contain psi.
double variance_regularize(double psi, const EmaState& state, const EngineParams& params);

/// First call returns a_star; later calls alpha * previous + (1 - alpha) * a_star.
double ema_update(double a_star, EmaState& state, const EngineParams& params);

/// Weighted mean of smoothed scores with weights 1 + delta * position,
/// clamped to [0, 1]. Throws std::invalid_argument("no windows") when empty.
double aggregate_session(std::span<const double> smoothed, const EngineParams& params);

/// Lower-closed, upper-open bands: < t1, [t1, t2), [t2, t3), >= t3.
EngagementState classify_state(double score, const Thresholds& thresholds);
inline EngagementState classify_state(double score, const EngineParams& params) {
  return classify_state(score, params.thresholds);
}

std::size_t count_transitions(std::span<const WindowAggregate> windows);

/// One scoring session. Windows must be fed in strictly increasing index.
class Session {
 public:
  explicit Session(const EngineParams& params);

  WindowAggregate process_window(const ingest::WindowBatch& batch);
  /// Same step from precomputed frequencies (calibration and analysis path).
  WindowAggregate process_frequencies(std::uint64_t window_index, const Frequencies& freq);

  const std::vector<WindowAggregate>& windows() const { return windows_; }
  const EngineParams& params() const { return params_; }

  /// Aggregates every scored window. Throws "no windows" if none was scored.
  SessionReport report() const;

 private:
  EngineParams params_;
  EmaState state_;
  std::optional<std::uint64_t> last_index_;
  std::vector<WindowAggregate> windows_;
};

SessionReport run_session(std::span<const ingest::WindowBatch> batches,
                          const EngineParams& params);

}  // namespace engage::engine
