#include <doctest.h>

#include <random>

#include "engage/engine.hpp"
#include "engage/ingest.hpp"
#include "helpers.hpp"
#include "oracle.hpp"

using namespace engage;
using namespace engage::engine;
using testutil::ev;

namespace {

ingest::WindowBatch batch(std::uint64_t index, std::vector<DetectionEvent> events) {
  return {index, std::move(events)};
}

ingest::WindowBatch uniform_batch(std::uint64_t index, Emotion label, int n = 3) {
  std::vector<DetectionEvent> events;
  for (int i = 0; i < n; ++i) events.push_back(ev(index * 60000, label, 1.0, i));
  return {index, events};
}

}  // namespace

TEST_CASE("gamma is the confidence-weighted share of retained detections") {
  const std::vector<DetectionEvent> events = {ev(0, Emotion::Happiness, 0.9),
                                              ev(0, Emotion::Happiness, 0.8),
                                              ev(0, Emotion::Sadness, 0.6)};
  const auto f = compute_frequencies(events, GammaDenominator::Detections);
  CHECK(f.gamma[slot(Emotion::Happiness)] == doctest::Approx(1.7 / 3).epsilon(1e-15));
  CHECK(f.gamma[slot(Emotion::Sadness)] == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(f.gamma[slot(Emotion::Neutral)] == 0.0);
  CHECK(f.retained == 3);

  const auto unanimous = compute_frequencies(uniform_batch(0, Emotion::Neutral).events,
                                             GammaDenominator::Detections);
  CHECK(unanimous.gamma[slot(Emotion::Neutral)] == 1.0);

  const auto none = compute_frequencies(std::span<const DetectionEvent>{},
                                        GammaDenominator::Detections);
  CHECK(none.empty());
  CHECK(none.gamma == EmotionVector{});
}

TEST_CASE("frames denominator counts distinct camera frames") {
  const std::vector<DetectionEvent> events = {ev(0, Emotion::Fear, 1.0, 0, 0, 5),
                                              ev(0, Emotion::Fear, 1.0, 1, 0, 5),
                                              ev(40, Emotion::Fear, 1.0, 0, 0, 6)};
  const auto f = compute_frequencies(events, GammaDenominator::Frames);
  CHECK(f.gamma[slot(Emotion::Fear)] == doctest::Approx(1.5));
}

TEST_CASE("raw score is the weighted sum plus eta") {
  EngineParams p;
  EmotionVector g{};
  g[slot(Emotion::Neutral)] = 1.0;
  CHECK(raw_score(g, p) == doctest::Approx(0.5));
  g = {};
  g[slot(Emotion::Fear)] = 1.0;
  CHECK(raw_score(g, p) == doctest::Approx(0.9));
  CHECK(raw_score(EmotionVector{}, p) == 0.0);
  p.eta = 0.1;
  CHECK(raw_score(EmotionVector{}, p) == doctest::Approx(0.1));
}

TEST_CASE("variance regularization uses population variance of the history") {
  EngineParams p;
  EmaState s(5);
  s.push_history(0.5);
  CHECK(variance_regularize(0.5, s, p) == 0.5);

  EmaState h(5);
  for (double v : {0.5, 0.6, 0.55}) h.push_history(v);
  CHECK(population_variance(h.history()) == doctest::Approx(0.005 / 3).epsilon(1e-12));
  CHECK(variance_regularize(0.55, h, p) == doctest::Approx(0.5498333333).epsilon(1e-9));

  p.lambda_reg = 0.0;
  CHECK(variance_regularize(0.55, h, p) == 0.55);
}

TEST_CASE("history keeps only the last W scores") {
  EmaState s(3);
  for (double v : {1.0, 2.0, 3.0, 4.0, 5.0}) s.push_history(v);
  REQUIRE(s.history().size() == 3);
  CHECK(s.history()[0] == 3.0);
  CHECK(s.history()[2] == 5.0);
}

TEST_CASE("EMA initializes on the first scored window") {
  EngineParams p;
  EmaState s;
  CHECK(ema_update(0.5, s, p) == 0.5);
  CHECK(ema_update(0.6, s, p) == doctest::Approx(0.7 * 0.5 + 0.3 * 0.6));
  EmaState t;
  t.previous = 0.5;
  CHECK(ema_update(0.6, t, p) == doctest::Approx(0.53));
  p.alpha = 0.0;
  EmaState u;
  u.previous = 0.9;
  CHECK(ema_update(0.6, u, p) == 0.6);
}

TEST_CASE("session aggregation weights later windows more") {
  EngineParams p;
  p.delta = 0.0;
  const std::vector<double> two{0.5, 0.6};
  CHECK(aggregate_session(two, p) == doctest::Approx(0.55));
  p.delta = 0.05;
  CHECK(aggregate_session(two, p) == doctest::Approx(1.13 / 2.05).epsilon(1e-14));
  const std::vector<double> one{0.7};
  for (double d : {0.0, 0.05, 3.0}) {
    p.delta = d;
    CHECK(aggregate_session(one, p) == 0.7);
  }
  CHECK_THROWS_WITH_AS(aggregate_session(std::span<const double>{}, p), "no windows",
                       std::invalid_argument);
  const std::vector<double> high{1.4};
  CHECK(aggregate_session(high, p) == 1.0);
}

TEST_CASE("classification bands are lower-closed and upper-open") {
  const Thresholds t;
  CHECK(classify_state(0.532, t) == EngagementState::AttentiveListening);
  CHECK(classify_state(0.597, t) == EngagementState::ActiveParticipation);
  CHECK(classify_state(0.623, t) == EngagementState::PassivePresence);
  CHECK(classify_state(0.742, t) == EngagementState::Disengaged);
  CHECK(classify_state(0.58, t) == EngagementState::ActiveParticipation);
  CHECK(classify_state(0.61, t) == EngagementState::PassivePresence);
  CHECK(classify_state(0.64, t) == EngagementState::Disengaged);
  CHECK(classify_state(std::nextafter(0.58, 0.0), t) == EngagementState::AttentiveListening);
  CHECK(classify_state(0.0, t) == EngagementState::AttentiveListening);
  CHECK(classify_state(1.0, t) == EngagementState::Disengaged);
}

TEST_CASE("process_window composes the per-window steps") {
  Session s{EngineParams{}};
  const auto w = s.process_window(uniform_batch(0, Emotion::Neutral));
  CHECK(*w.psi == 0.5);
  CHECK(*w.a_star == 0.5);
  CHECK(*w.a_smooth == 0.5);
  CHECK(*w.state_hint == EngagementState::AttentiveListening);
}

TEST_CASE("empty windows hold the previous smoothed score") {
  Session s{EngineParams{}};
  s.process_window(uniform_batch(0, Emotion::Fear));
  const auto held = s.process_window(batch(1, {}));
  CHECK(held.empty());
  CHECK_FALSE(held.psi.has_value());
  CHECK_FALSE(held.a_star.has_value());
  CHECK(*held.a_smooth == 0.9);
  CHECK(*held.state_hint == EngagementState::Disengaged);
}

TEST_CASE("leading empty windows have no score and no hint") {
  Session s{EngineParams{}};
  const auto w = s.process_window(batch(0, {}));
  CHECK_FALSE(w.a_smooth.has_value());
  CHECK_FALSE(w.state_hint.has_value());
  CHECK_THROWS_WITH(s.report(), "no windows");
  s.process_window(uniform_batch(1, Emotion::Neutral));
  CHECK(s.report().lambda_star == 0.5);
}

TEST_CASE("window indices must strictly increase") {
  Session s{EngineParams{}};
  s.process_window(uniform_batch(3, Emotion::Neutral));
  CHECK_THROWS_AS(s.process_window(uniform_batch(3, Emotion::Neutral)), std::invalid_argument);
  CHECK_THROWS_AS(s.process_window(uniform_batch(2, Emotion::Neutral)), std::invalid_argument);
  CHECK_NOTHROW(s.process_window(uniform_batch(7, Emotion::Neutral)));
}

TEST_CASE("run_session examples") {
  const std::vector<ingest::WindowBatch> fear{uniform_batch(0, Emotion::Fear)};
  const auto r = run_session(fear, EngineParams{});
  CHECK(r.lambda_star == doctest::Approx(0.9));
  CHECK(r.final_state == EngagementState::Disengaged);

  std::vector<ingest::WindowBatch> neutral;
  for (std::uint64_t i = 0; i < 10; ++i) neutral.push_back(uniform_batch(i, Emotion::Neutral));
  const auto n = run_session(neutral, EngineParams{});
  CHECK(n.lambda_star == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(n.transition_count == 0);

  CHECK_THROWS_WITH(run_session(std::span<const ingest::WindowBatch>{}, EngineParams{}),
                    "no windows");
}

TEST_CASE("transition count follows the hint sequence") {
  std::vector<WindowAggregate> ws(4);
  ws[0].state_hint = EngagementState::AttentiveListening;
  ws[1].state_hint = EngagementState::Disengaged;
  ws[2].state_hint = EngagementState::AttentiveListening;
  ws[3].state_hint = EngagementState::Disengaged;
  CHECK(count_transitions(ws) == 3);
  ws[1].state_hint = EngagementState::AttentiveListening;
  ws[3].state_hint = EngagementState::AttentiveListening;
  CHECK(count_transitions(ws) == 0);
}

TEST_CASE("property: streaming session matches the batch oracle") {
  std::mt19937_64 rng(20240611);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    EngineParams p;
    p.window_ms = 1000;
    p.alpha = unit(rng);
    p.lambda_reg = unit(rng);
    p.delta = unit(rng) * 0.2;
    p.variance_window = 1 + rng() % 6;
    for (auto& b : p.beta) b = 0.05 + 0.95 * unit(rng);

    std::vector<DetectionEvent> events;
    const int windows = 1 + static_cast<int>(rng() % 12);
    for (int w = 0; w < windows; ++w) {
      const int n = static_cast<int>(rng() % 8);
      for (int k = 0; k < n; ++k) {
        events.push_back(ev(static_cast<std::uint64_t>(w) * 1000 + rng() % 1000,
                            static_cast<Emotion>(rng() % 7), unit(rng),
                            static_cast<std::uint64_t>(k)));
      }
    }
    std::sort(events.begin(), events.end(), event_order_less);
    const auto expect = oracle::evaluate(events, p);
    const auto batches = ingest::merge_streams({events}, p.window_ms, p.theta);
    if (!expect) {
      bool scored = false;
      for (const auto& b : batches) scored = scored || !b.events.empty();
      CHECK_FALSE(scored);
      continue;
    }
    const auto got = run_session(batches, p);
    REQUIRE(got.windows.size() == expect->window_index.size());
    for (std::size_t i = 0; i < got.windows.size(); ++i) {
      const auto& w = got.windows[i];
      CHECK(w.window_index == expect->window_index[i]);
      CHECK(w.psi.has_value() == expect->psi[i].has_value());
      CHECK(w.a_smooth.has_value() == expect->a_smooth[i].has_value());
      if (w.psi) CHECK(std::abs(*w.psi - *expect->psi[i]) < 1e-12);
      if (w.a_star) CHECK(std::abs(*w.a_star - *expect->a_star[i]) < 1e-12);
      if (w.a_smooth) CHECK(std::abs(*w.a_smooth - *expect->a_smooth[i]) < 1e-12);
    }
    CHECK(std::abs(got.lambda_star - expect->lambda_star) < 1e-12);
  }
}

TEST_CASE("property: report invariants") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<ingest::WindowBatch> batches;
    const int n = 1 + static_cast<int>(rng() % 15);
    for (int w = 0; w < n; ++w) {
      std::vector<DetectionEvent> events;
      const int k = static_cast<int>(rng() % 5);
      for (int i = 0; i < k; ++i) {
        events.push_back(ev(0, static_cast<Emotion>(rng() % 7), 0.6 + 0.4 * (rng() % 100) / 100.0));
      }
      batches.push_back({static_cast<std::uint64_t>(w), events});
    }
    if (batches.front().events.empty()) batches.front().events.push_back(ev(0, Emotion::Neutral, 1.0));
    const auto r = run_session(batches, EngineParams{});
    CHECK(r.lambda_star >= 0.0);
    CHECK(r.lambda_star <= 1.0);
    CHECK(r.transition_count <= r.windows.size() - 1);
    for (const auto& w : r.windows) {
      double sum = 0.0;
      for (double g : w.gamma) {
        CHECK(g >= 0.0);
        sum += g;
      }
      CHECK(sum <= 1.0 + 1e-12);
      if (w.a_smooth) CHECK(*w.state_hint == classify_state(*w.a_smooth, Thresholds{}));
    }
  }
}
