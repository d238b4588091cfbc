#include "engage/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace engage::analysis {

namespace {

using calibration::LabeledSegment;

std::vector<LabeledSegment> without_emotion(std::span<const LabeledSegment> segments,
                                            Emotion e) {
  std::vector<LabeledSegment> out(segments.begin(), segments.end());
  for (auto& s : out) {
    for (auto& w : s.gamma_sequence) w.gamma[slot(e)] = 0.0;
  }
  return out;
}

ClassificationMetrics classify_all(std::span<const LabeledSegment> segments,
                                   const EngineParams& params) {
  std::vector<Prediction> pairs;
  pairs.reserve(segments.size());
  for (const auto& s : segments) {
    pairs.push_back({calibration::classify_segment(s, params), s.truth});
  }
  return score_predictions(pairs);
}

}  // namespace

double ClassificationMetrics::recall(EngagementState s) const {
  const auto& row = confusion[static_cast<std::size_t>(ordinal(s))];
  std::size_t support = 0;
  for (auto c : row) support += c;
  return support == 0 ? 0.0
                      : static_cast<double>(row[static_cast<std::size_t>(ordinal(s))]) /
                            static_cast<double>(support);
}

ClassificationMetrics score_predictions(std::span<const Prediction> pairs) {
  if (pairs.empty()) throw std::invalid_argument("no predictions to score");
  ClassificationMetrics m;
  m.total = pairs.size();
  double sq = 0.0, abs = 0.0;
  std::size_t correct = 0;
  for (const auto& p : pairs) {
    const int t = ordinal(p.truth), y = ordinal(p.predicted);
    ++m.confusion[static_cast<std::size_t>(t)][static_cast<std::size_t>(y)];
    if (t == y) ++correct;
    sq += static_cast<double>((t - y) * (t - y));
    abs += std::abs(t - y);
  }
  const auto n = static_cast<double>(pairs.size());
  m.accuracy = static_cast<double>(correct) / n;
  m.mse = sq / n;
  m.mae = abs / n;

  std::size_t present = 0;
  for (std::size_t k = 0; k < kStateCount; ++k) {
    std::size_t tp = m.confusion[k][k], support = 0, predicted = 0;
    for (std::size_t j = 0; j < kStateCount; ++j) {
      support += m.confusion[k][j];
      predicted += m.confusion[j][k];
    }
    if (support == 0 && predicted == 0) continue;
    ++present;
    const double prec = predicted == 0 ? 0.0 : static_cast<double>(tp) / predicted;
    const double rec = support == 0 ? 0.0 : static_cast<double>(tp) / support;
    const double f1 = 2.0 * tp / static_cast<double>(support + predicted);
    m.macro_precision += prec;
    m.macro_recall += rec;
    m.macro_f1 += f1;
  }
  m.macro_precision /= present;
  m.macro_recall /= present;
  m.macro_f1 /= present;
  return m;
}

CorpusEvaluator::CorpusEvaluator(std::span<const LabeledSegment> fit,
                                 std::span<const LabeledSegment> eval, EngineParams params,
                                 ThresholdPolicy policy)
    : fit_(fit), eval_(eval), params_(std::move(params)), policy_(policy) {
  validate_params(params_);
  if (eval_.empty()) throw std::invalid_argument("evaluation corpus is empty");
  if (policy_ == ThresholdPolicy::Refit && fit_.empty()) {
    throw std::invalid_argument("fit corpus is empty");
  }
  baseline_ = evaluate(params_);
}

CorpusEvaluator::Outcome CorpusEvaluator::evaluate(const EngineParams& params,
                                                   std::optional<Emotion> ablated) const {
  std::vector<LabeledSegment> fit_copy, eval_copy;
  auto fit = fit_;
  auto eval = eval_;
  if (ablated) {
    fit_copy = without_emotion(fit_, *ablated);
    eval_copy = without_emotion(eval_, *ablated);
    fit = fit_copy;
    eval = eval_copy;
  }
  EngineParams p = params;
  if (policy_ == ThresholdPolicy::Refit) {
    const auto scored = calibration::score_segments(fit, p);
    p.thresholds = calibration::find_thresholds(scored).thresholds;
  }
  return {p.thresholds, classify_all(eval, p)};
}

CorpusEvaluator::Outcome CorpusEvaluator::evaluate_with_thresholds(const Thresholds& t) const {
  validate_thresholds(t);
  EngineParams p = params_;
  p.thresholds = t;
  return {t, classify_all(eval_, p)};
}

std::array<WeightPerturbation, kEmotionCount> perturb_weights(const CorpusEvaluator& evaluator,
                                                              double fraction) {
  if (!(fraction >= 0.0 && fraction < 1.0)) {
    throw ValidationError("perturbation fraction out of range [0,1)");
  }
  const double base = evaluator.baseline().metrics.accuracy;
  std::array<WeightPerturbation, kEmotionCount> out{};
  for (Emotion e : kAllEmotions) {
    auto& r = out[slot(e)];
    r.emotion = e;
    EngineParams p = evaluator.params();
    const double b = p.beta[slot(e)];
    p.beta[slot(e)] = b * (1.0 - fraction);
    r.accuracy_minus = evaluator.evaluate(p).metrics.accuracy;
    p.beta[slot(e)] = std::min(1.0, b * (1.0 + fraction));
    r.accuracy_plus = evaluator.evaluate(p).metrics.accuracy;
    r.max_abs_delta = std::max(std::abs(r.accuracy_minus - base), std::abs(r.accuracy_plus - base));
  }
  return out;
}

ThresholdSensitivity perturb_thresholds(const CorpusEvaluator& evaluator, double eps) {
  if (!(eps >= 0.0)) throw ValidationError("eps must be non-negative");
  ThresholdSensitivity out;
  out.baseline_thresholds = evaluator.baseline().thresholds;
  out.baseline_accuracy = evaluator.baseline().metrics.accuracy;

  const Thresholds& b = out.baseline_thresholds;
  std::vector<ThresholdShift> shifts;
  for (int k = 0; k < 3; ++k) {
    for (int sign : {-1, 1}) {
      Thresholds t = b;
      double* v = k == 0 ? &t.t1 : k == 1 ? &t.t2 : &t.t3;
      *v += sign * eps;
      shifts.push_back({"t" + std::to_string(k + 1) + (sign < 0 ? "-" : "+"), t, 0.0});
    }
  }
  for (int sign : {-1, 1}) {
    shifts.push_back({sign < 0 ? "all-" : "all+",
                      {b.t1 + sign * eps, b.t2 + sign * eps, b.t3 + sign * eps},
                      0.0});
  }
  for (const auto& s : shifts) {
    if (!(s.thresholds.t1 < s.thresholds.t2 && s.thresholds.t2 < s.thresholds.t3)) {
      throw ValidationError("threshold ordering violated");
    }
  }
  for (auto& s : shifts) s.accuracy = evaluator.evaluate_with_thresholds(s.thresholds).metrics.accuracy;
  out.shifts = std::move(shifts);
  return out;
}

AblationResult ablate_emotion(const CorpusEvaluator& evaluator, Emotion emotion) {
  const auto& base = evaluator.baseline().metrics;
  const auto outcome = evaluator.evaluate(evaluator.params(), emotion);
  AblationResult r;
  r.emotion = emotion;
  r.accuracy = outcome.metrics.accuracy;
  r.accuracy_reduction = base.accuracy - r.accuracy;
  for (EngagementState s : kAllStates) {
    const auto k = static_cast<std::size_t>(ordinal(s));
    r.recall[k] = outcome.metrics.recall(s);
    r.recall_reduction[k] = base.recall(s) - r.recall[k];
  }
  return r;
}

std::vector<AblationResult> ablation_ranking(const CorpusEvaluator& evaluator) {
  std::vector<AblationResult> out;
  for (Emotion e : kAllEmotions) out.push_back(ablate_emotion(evaluator, e));
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return a.accuracy_reduction > b.accuracy_reduction;
  });
  return out;
}

SmoothingAblation smoothing_ablation(std::span<const DetectionEvent> events,
                                     const pipeline::PipelineOptions& options,
                                     std::span<const EngagementState> window_truth) {
  pipeline::PipelineOptions raw = options;
  raw.params.lambda_reg = 0.0;
  raw.params.alpha = 0.0;
  const auto raw_report = pipeline::run_events(events, raw).report;
  const auto smooth_report = pipeline::run_events(events, options).report;

  SmoothingAblation out;
  out.raw_transitions = raw_report.transition_count;
  out.smoothed_transitions = smooth_report.transition_count;
  out.reduction_ratio =
      out.raw_transitions == 0
          ? 0.0
          : 1.0 - static_cast<double>(out.smoothed_transitions) / out.raw_transitions;

  if (!window_truth.empty()) {
    auto metrics = [&](const SessionReport& r) -> std::optional<ClassificationMetrics> {
      std::vector<Prediction> pairs;
      for (std::size_t i = 0; i < r.windows.size() && i < window_truth.size(); ++i) {
        if (r.windows[i].state_hint) pairs.push_back({*r.windows[i].state_hint, window_truth[i]});
      }
      if (pairs.empty()) return std::nullopt;
      return score_predictions(pairs);
    };
    out.raw_metrics = metrics(raw_report);
    out.smoothed_metrics = metrics(smooth_report);
  }
  return out;
}

std::vector<EngagementState> window_truths(const synth::SynthSession& session,
                                           std::uint64_t window_ms) {
  std::vector<EngagementState> out;
  if (session.events.empty() || window_ms == 0) return out;
  const std::uint64_t first = session.events.front().timestamp_ms / window_ms;
  const std::uint64_t last = session.events.back().timestamp_ms / window_ms;
  for (std::uint64_t w = first; w <= last; ++w) {
    const std::uint64_t start = w * window_ms;
    std::size_t k = 0;
    while (k + 1 < session.segment_start_ms.size() && session.segment_start_ms[k + 1] <= start) ++k;
    out.push_back(session.truths.at(k));
  }
  return out;
}

Json to_json(const ClassificationMetrics& m) {
  Json confusion = Json::array();
  for (const auto& row : m.confusion) confusion.push_back(row);
  return Json{{"accuracy", m.accuracy},       {"macro_precision", m.macro_precision},
              {"macro_recall", m.macro_recall}, {"macro_f1", m.macro_f1},
              {"mse", m.mse},                 {"mae", m.mae},
              {"total", m.total},             {"confusion", confusion}};
}

}  // namespace engage::analysis
