#include "engage/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <thread>

#include "engage/engine.hpp"
#include "engage/synth.hpp"

namespace engage::calibration {

double segment_score(const LabeledSegment& segment, const EngineParams& params) {
  engine::Session session(params);
  std::uint64_t index = 0;
  for (const auto& w : segment.gamma_sequence) {
    engine::Frequencies f;
    f.gamma = w.gamma;
    f.retained = w.empty ? 0 : 1;
    session.process_frequencies(index++, f);
  }
  return session.report().lambda_star;
}

EngagementState classify_segment(const LabeledSegment& segment, const EngineParams& params) {
  return engine::classify_state(segment_score(segment, params), params.thresholds);
}

std::vector<ScoredTruth> score_segments(std::span<const LabeledSegment> segments,
                                        const EngineParams& params) {
  std::vector<ScoredTruth> out;
  out.reserve(segments.size());
  for (const auto& s : segments) out.push_back({segment_score(s, params), s.truth});
  return out;
}

// ---------------------------------------------------------------------------
// Weight grid
// ---------------------------------------------------------------------------

namespace {

std::vector<double> band(double center) {
  std::vector<double> v;
  for (int i = -2; i <= 2; ++i) {
    // Round to the 0.05 lattice so candidates print and compare cleanly.
    v.push_back(std::round((center + 0.05 * i) * 100.0) / 100.0);
  }
  return v;
}

bool is_negative(Emotion e) {
  return e == Emotion::Anger || e == Emotion::Disgust || e == Emotion::Fear;
}
bool is_positive(Emotion e) { return e == Emotion::Happiness || e == Emotion::Surprise; }

}  // namespace

WeightCandidateGrid WeightCandidateGrid::defaults() {
  WeightCandidateGrid g;
  g.values[slot(Emotion::Neutral)] = {0.5};
  g.values[slot(Emotion::Happiness)] = band(0.65);
  g.values[slot(Emotion::Surprise)] = band(0.65);
  g.values[slot(Emotion::Sadness)] = band(0.75);
  g.values[slot(Emotion::Anger)] = band(0.85);
  g.values[slot(Emotion::Disgust)] = band(0.85);
  g.values[slot(Emotion::Fear)] = band(0.85);
  return g;
}

std::size_t WeightCandidateGrid::combinations() const {
  std::size_t n = 1;
  for (const auto& v : values) n *= v.size();
  return n;
}

void validate_grid(const WeightCandidateGrid& grid) {
  double min_negative = 1.0;
  double max_positive = 0.0;
  double min_positive = 1.0;
  for (Emotion e : kAllEmotions) {
    const auto& vals = grid.values[slot(e)];
    if (vals.empty()) {
      throw ValidationError("grid has no candidates for " + std::string(to_string(e)));
    }
    for (double v : vals) {
      if (!(v >= 0.1 - 1e-12 && v <= 1.0 + 1e-12)) {
        throw ValidationError("grid value for " + std::string(to_string(e)) +
                              " outside [0.1, 1.0]");
      }
      if (is_negative(e)) min_negative = std::min(min_negative, v);
      if (is_positive(e)) {
        max_positive = std::max(max_positive, v);
        min_positive = std::min(min_positive, v);
      }
    }
  }
  if (min_negative + 1e-12 < max_positive) {
    throw ValidationError("grid breaks ordering: negative-emotion weights below positive");
  }
  if (min_positive + 1e-12 < 0.5) {
    throw ValidationError("grid breaks ordering: positive-emotion weights below 0.5");
  }
}

// ---------------------------------------------------------------------------
// Scoring
// ---------------------------------------------------------------------------

WeightEvaluation f1_scores(std::span<const EngagementState> predicted,
                           std::span<const EngagementState> truth) {
  if (predicted.size() != truth.size()) {
    throw std::invalid_argument("prediction and truth lengths differ");
  }
  std::array<std::size_t, kStateCount> tp{}, fp{}, fn{};
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const auto p = static_cast<std::size_t>(ordinal(predicted[i]));
    const auto t = static_cast<std::size_t>(ordinal(truth[i]));
    if (p == t) {
      ++tp[t];
    } else {
      ++fp[p];
      ++fn[t];
    }
  }
  WeightEvaluation out;
  double sum = 0.0;
  std::size_t used = 0;
  for (std::size_t s = 0; s < kStateCount; ++s) {
    const std::size_t denom = 2 * tp[s] + fp[s] + fn[s];
    if (denom == 0) continue;
    out.f1[s] = 2.0 * static_cast<double>(tp[s]) / static_cast<double>(denom);
    sum += out.f1[s];
    ++used;
  }
  out.mean_f1 = used ? sum / static_cast<double>(used) : 0.0;
  return out;
}

WeightEvaluation evaluate_weights(const EmotionVector& beta,
                                  std::span<const LabeledSegment> segments,
                                  const EngineParams& params) {
  if (segments.empty()) throw std::invalid_argument("no segments to evaluate");
  EngineParams p = params;
  p.beta = beta;
  std::vector<EngagementState> predicted, truth;
  predicted.reserve(segments.size());
  truth.reserve(segments.size());
  for (const auto& s : segments) {
    predicted.push_back(classify_segment(s, p));
    truth.push_back(s.truth);
  }
  WeightEvaluation out = f1_scores(predicted, truth);
  out.beta = beta;
  return out;
}

GridSearchResult grid_search_weights(const WeightCandidateGrid& grid,
                                     std::span<const LabeledSegment> segments,
                                     const EngineParams& params, unsigned threads) {
  validate_grid(grid);
  if (segments.empty()) throw std::invalid_argument("no segments to evaluate");

  const std::size_t total = grid.combinations();
  auto candidate = [&](std::size_t index) {
    EmotionVector beta{};
    for (std::size_t q = kEmotionCount; q-- > 0;) {
      const auto& vals = grid.values[q];
      beta[q] = vals[index % vals.size()];
      index /= vals.size();
    }
    return beta;
  };

  GridSearchResult result;
  result.ranked.resize(total);
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, total));

  std::vector<std::size_t> counted(threads, 0);
  auto worker = [&](unsigned t) {
    for (std::size_t i = t; i < total; i += threads) {
      result.ranked[i] = evaluate_weights(candidate(i), segments, params);
      ++counted[t];
    }
  };
  if (threads == 1) {
    worker(0);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker, t);
  }
  result.evaluation_count = std::accumulate(counted.begin(), counted.end(), std::size_t{0});

  std::sort(result.ranked.begin(), result.ranked.end(),
            [](const WeightEvaluation& a, const WeightEvaluation& b) {
              if (a.mean_f1 != b.mean_f1) return a.mean_f1 > b.mean_f1;
              return a.beta < b.beta;
            });
  return result;
}

// ---------------------------------------------------------------------------
// Cross-validation
// ---------------------------------------------------------------------------

std::vector<std::vector<std::size_t>> assign_folds(std::size_t n, std::size_t k,
                                                   std::uint64_t seed) {
  if (k < 2) throw std::invalid_argument("cross-validation needs at least 2 folds");
  if (n < k) throw std::invalid_argument("fewer segments than folds");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  synth::Rng rng(seed);
  for (std::size_t i = n; i > 1; --i) {  // Fisher-Yates
    const auto j = static_cast<std::size_t>(rng.next() % i);
    std::swap(order[i - 1], order[j]);
  }
  std::vector<std::vector<std::size_t>> folds(k);
  for (std::size_t i = 0; i < n; ++i) folds[i % k].push_back(order[i]);
  for (auto& f : folds) std::sort(f.begin(), f.end());
  return folds;
}

CrossValidationResult cross_validate(std::span<const EmotionVector> candidates,
                                     std::span<const LabeledSegment> segments,
                                     const EngineParams& params, std::size_t folds,
                                     std::uint64_t seed) {
  if (candidates.empty()) throw std::invalid_argument("no candidates to cross-validate");
  const auto fold_index = assign_folds(segments.size(), folds, seed);

  CrossValidationResult best;
  bool have_best = false;
  for (const auto& beta : candidates) {
    CrossValidationResult r;
    r.beta = beta;
    for (const auto& fold : fold_index) {
      std::vector<LabeledSegment> held_out;
      held_out.reserve(fold.size());
      for (auto i : fold) held_out.push_back(segments[i]);
      r.fold_f1.push_back(evaluate_weights(beta, held_out, params).mean_f1);
    }
    r.mean_f1 = std::accumulate(r.fold_f1.begin(), r.fold_f1.end(), 0.0) /
                static_cast<double>(r.fold_f1.size());
    if (!have_best || r.mean_f1 > best.mean_f1) {
      best = std::move(r);
      have_best = true;
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// Threshold search
// ---------------------------------------------------------------------------

ThresholdFit find_thresholds(std::span<const ScoredTruth> scores) {
  std::array<bool, kStateCount> present{};
  for (const auto& s : scores) {
    if (!std::isfinite(s.score)) throw ValidationError("non-finite score");
    present[static_cast<std::size_t>(ordinal(s.truth))] = true;
  }
  for (auto s : kAllStates) {
    if (!present[static_cast<std::size_t>(ordinal(s))]) {
      throw ValidationError("state " + std::string(to_string(s)) + " absent");
    }
  }

  std::vector<ScoredTruth> sorted(scores.begin(), scores.end());
  std::sort(sorted.begin(), sorted.end(),
            [](const ScoredTruth& a, const ScoredTruth& b) { return a.score < b.score; });

  // Distinct values and cumulative per-state counts up to each of them.
  std::vector<double> values;
  std::vector<std::array<std::int64_t, kStateCount>> cum;
  std::array<std::int64_t, kStateCount> running{};
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    ++running[static_cast<std::size_t>(ordinal(sorted[i].truth))];
    if (i + 1 == sorted.size() || sorted[i + 1].score != sorted[i].score) {
      values.push_back(sorted[i].score);
      cum.push_back(running);
    }
  }
  if (values.size() < 4) {
    throw ValidationError("need at least four distinct scores to place three thresholds");
  }

  // Candidate x splits between values[x] and values[x + 1]; everything at or
  // below values[x] falls under the threshold.
  const std::size_t m = values.size() - 1;
  auto gain = [&](std::size_t x, std::size_t lower, std::size_t upper) {
    return cum[x][lower] - cum[x][upper];
  };
  const std::int64_t total_top = running[3];

  // Suffix maxima with ties resolved toward the smaller index.
  std::vector<std::int64_t> best_k(m + 1, INT64_MIN);
  std::vector<std::size_t> arg_k(m + 1, m);
  for (std::size_t y = m; y-- > 0;) {
    const std::int64_t v = gain(y, 2, 3);
    best_k[y] = best_k[y + 1];
    arg_k[y] = arg_k[y + 1];
    if (v >= best_k[y]) {
      best_k[y] = v;
      arg_k[y] = y;
    }
  }
  std::vector<std::int64_t> best_j(m + 1, INT64_MIN);
  std::vector<std::size_t> arg_j(m + 1, m);
  for (std::size_t y = m - 1; y-- > 0;) {
    const std::int64_t v = gain(y, 1, 2) + best_k[y + 1];
    best_j[y] = best_j[y + 1];
    arg_j[y] = arg_j[y + 1];
    if (v >= best_j[y]) {
      best_j[y] = v;
      arg_j[y] = y;
    }
  }
  std::int64_t best = INT64_MIN;
  std::size_t bi = 0;
  for (std::size_t i = 0; i + 2 < m; ++i) {
    const std::int64_t v = gain(i, 0, 1) + best_j[i + 1];
    if (v > best) {
      best = v;
      bi = i;
    }
  }
  const std::size_t bj = arg_j[bi + 1];
  const std::size_t bk = arg_k[bj + 1];

  auto midpoint = [&](std::size_t x) { return 0.5 * (values[x] + values[x + 1]); };
  ThresholdFit fit;
  fit.thresholds = {midpoint(bi), midpoint(bj), midpoint(bk)};
  fit.accuracy = static_cast<double>(best + total_top) / static_cast<double>(sorted.size());
  return fit;
}

// ---------------------------------------------------------------------------
// Corpus IO
// ---------------------------------------------------------------------------

Json to_json(const LabeledSegment& s) {
  Json j;
  j["truth"] = std::string(to_string(s.truth));
  Json seq = Json::array();
  Json empty = Json::array();
  for (const auto& w : s.gamma_sequence) {
    seq.push_back(Json(w.gamma));
    empty.push_back(w.empty);
  }
  j["gamma_sequence"] = std::move(seq);
  j["empty"] = std::move(empty);
  return j;
}

LabeledSegment segment_from_json(const Json& j) {
  if (!j.is_object()) throw ParseError("segment must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (it.key() != "truth" && it.key() != "gamma_sequence" && it.key() != "empty") {
      throw ParseError("unknown key '" + it.key() + "' in segment");
    }
  }
  LabeledSegment s;
  auto truth = j.find("truth");
  if (truth == j.end() || !truth->is_string()) throw ParseError("segment needs a 'truth' string");
  auto state = parse_state(truth->get<std::string>());
  if (!state) throw ParseError("unknown state '" + truth->get<std::string>() + "'");
  s.truth = *state;

  auto seq = j.find("gamma_sequence");
  if (seq == j.end() || !seq->is_array() || seq->empty()) {
    throw ParseError("segment needs a non-empty 'gamma_sequence'");
  }
  for (const auto& g : *seq) {
    if (!g.is_array() || g.size() != kEmotionCount) {
      throw ParseError("each gamma must hold 7 numbers");
    }
    WindowGamma w;
    for (std::size_t q = 0; q < kEmotionCount; ++q) {
      if (!g[q].is_number()) throw ParseError("gamma entries must be numbers");
      w.gamma[q] = g[q].get<double>();
    }
    s.gamma_sequence.push_back(w);
  }
  if (auto empty = j.find("empty"); empty != j.end()) {
    if (!empty->is_array() || empty->size() != s.gamma_sequence.size()) {
      throw ParseError("'empty' must match gamma_sequence length");
    }
    for (std::size_t i = 0; i < empty->size(); ++i) {
      if (!(*empty)[i].is_boolean()) throw ParseError("'empty' entries must be booleans");
      s.gamma_sequence[i].empty = (*empty)[i].get<bool>();
    }
  }
  return s;
}

void write_corpus(const std::string& path, std::span<const LabeledSegment> segments) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (const auto& s : segments) out << to_json(s).dump() << '\n';
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::vector<LabeledSegment> read_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open corpus file " + path);
  std::vector<LabeledSegment> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(segment_from_json(parse_json(line)));
    } catch (const std::exception& e) {
      throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

WeightCandidateGrid grid_from_json(const Json& j) {
  if (!j.is_object()) throw ParseError("grid must be a JSON object");
  WeightCandidateGrid g = WeightCandidateGrid::defaults();
  for (auto it = j.begin(); it != j.end(); ++it) {
    auto e = parse_emotion(it.key());
    if (!e) throw ParseError("unknown key '" + it.key() + "' in grid");
    if (!it->is_array()) throw ParseError("grid entries must be arrays");
    std::vector<double> vals;
    for (const auto& v : *it) {
      if (!v.is_number()) throw ParseError("grid values must be numbers");
      vals.push_back(v.get<double>());
    }
    g.values[slot(*e)] = std::move(vals);
  }
  validate_grid(g);
  return g;
}

}  // namespace engage::calibration
