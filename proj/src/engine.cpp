#include "engage/engine.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>
#include <utility>

namespace engage::engine {

Frequencies compute_frequencies(std::span<const DetectionEvent> events,
                                GammaDenominator denominator) {
  Frequencies f;
  f.retained = events.size();
  if (events.empty()) return f;

  for (const auto& e : events) f.gamma[slot(e.label)] += e.confidence;

  std::size_t divisor = events.size();
  if (denominator == GammaDenominator::Frames) {
    std::set<std::pair<std::uint32_t, std::uint64_t>> frames;
    for (const auto& e : events) frames.emplace(e.camera_id, e.frame_index);
    divisor = frames.size();
  }
  for (double& g : f.gamma) g /= static_cast<double>(divisor);
  return f;
}

double raw_score(const EmotionVector& gamma, const EngineParams& params) {
  double psi = params.eta;
  for (std::size_t q = 0; q < kEmotionCount; ++q) psi += gamma[q] * params.beta[q];
  return psi;
}

EmaState::EmaState(std::size_t variance_window) : capacity_(variance_window) {
  if (capacity_ == 0) throw ValidationError("variance_window must be positive");
}

void EmaState::push_history(double psi) {
  history_.push_back(psi);
  if (history_.size() > capacity_) history_.erase(history_.begin(), history_.end() - static_cast<std::ptrdiff_t>(capacity_));
}

double population_variance(std::span<const double> values) {
  if (values.size() < 2) return 0.0;
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return ss / static_cast<double>(values.size());
}

double variance_regularize(double psi, const EmaState& state, const EngineParams& params) {
  return psi - params.lambda_reg * population_variance(state.history());
}

double ema_update(double a_star, EmaState& state, const EngineParams& params) {
  const double smoothed =
      state.previous ? params.alpha * *state.previous + (1.0 - params.alpha) * a_star
                     : a_star;
  state.previous = smoothed;
  return smoothed;
}

double aggregate_session(std::span<const double> smoothed, const EngineParams& params) {
  if (smoothed.empty()) throw std::invalid_argument("no windows");
  double weighted = 0.0;
  double total_weight = 0.0;
  for (std::size_t tau = 0; tau < smoothed.size(); ++tau) {
    const double w = 1.0 + params.delta * static_cast<double>(tau);
    weighted += w * smoothed[tau];
    total_weight += w;
  }
  return std::clamp(weighted / total_weight, 0.0, 1.0);
}

EngagementState classify_state(double score, const Thresholds& t) {
  if (score < t.t1) return EngagementState::AttentiveListening;
  if (score < t.t2) return EngagementState::ActiveParticipation;
  if (score < t.t3) return EngagementState::PassivePresence;
  return EngagementState::Disengaged;
}

std::size_t count_transitions(std::span<const WindowAggregate> windows) {
  std::size_t n = 0;
  std::optional<EngagementState> last;
  for (const auto& w : windows) {
    if (!w.state_hint) continue;
    if (last && *last != *w.state_hint) ++n;
    last = w.state_hint;
  }
  return n;
}

// ---------------------------------------------------------------------------
// Session
// ---------------------------------------------------------------------------

Session::Session(const EngineParams& params)
    : params_(validate_params(params)), state_(params.variance_window) {}

WindowAggregate Session::process_window(const ingest::WindowBatch& batch) {
  return process_frequencies(batch.window_index,
                             compute_frequencies(batch.events, params_.gamma_denominator));
}

WindowAggregate Session::process_frequencies(std::uint64_t window_index,
                                             const Frequencies& freq) {
  if (last_index_ && window_index <= *last_index_) {
    throw std::invalid_argument("window " + std::to_string(window_index) +
                                " out of order (last " + std::to_string(*last_index_) + ")");
  }
  last_index_ = window_index;

  WindowAggregate w;
  w.window_index = window_index;
  w.retained_count = freq.retained;
  w.gamma = freq.gamma;

  if (freq.empty()) {
    w.a_smooth = state_.previous;
  } else {
    const double psi = raw_score(freq.gamma, params_);
    state_.push_history(psi);
    const double a_star = variance_regularize(psi, state_, params_);
    w.psi = psi;
    w.a_star = a_star;
    w.a_smooth = ema_update(a_star, state_, params_);
  }
  if (w.a_smooth) w.state_hint = classify_state(*w.a_smooth, params_.thresholds);
  windows_.push_back(w);
  return w;
}

SessionReport Session::report() const {
  std::vector<double> smoothed;
  smoothed.reserve(windows_.size());
  for (const auto& w : windows_) {
    if (w.a_smooth) smoothed.push_back(*w.a_smooth);
  }
  SessionReport r;
  r.lambda_star = aggregate_session(smoothed, params_);
  r.final_state = classify_state(r.lambda_star, params_.thresholds);
  r.windows = windows_;
  r.transition_count = count_transitions(windows_);
  r.params_used = params_;
  return r;
}

SessionReport run_session(std::span<const ingest::WindowBatch> batches,
                          const EngineParams& params) {
  if (batches.empty()) throw std::invalid_argument("no windows");
  Session session(params);
  for (const auto& b : batches) session.process_window(b);
  return session.report();
}

}  // namespace engage::engine
