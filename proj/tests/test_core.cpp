#include <doctest.h>

#include "engage/core.hpp"
#include "engage/serialization.hpp"
#include "helpers.hpp"

using namespace engage;
using testutil::ev;

TEST_CASE("emotion indices are 1-based and round-trip") {
  CHECK(emotion_index(Emotion::Neutral) == 1);
  CHECK(emotion_index(Emotion::Fear) == 7);
  for (Emotion e : kAllEmotions) {
    CHECK(emotion_from_index(emotion_index(e)) == e);
    CHECK(parse_emotion(to_string(e)) == e);
  }
  CHECK_THROWS_AS(emotion_from_index(0), ValidationError);
  CHECK_THROWS_AS(emotion_from_index(8), ValidationError);
  CHECK_FALSE(parse_emotion("joy").has_value());
}

TEST_CASE("engagement state ordinals follow score order") {
  CHECK(ordinal(EngagementState::AttentiveListening) == 0);
  CHECK(ordinal(EngagementState::ActiveParticipation) == 1);
  CHECK(ordinal(EngagementState::PassivePresence) == 2);
  CHECK(ordinal(EngagementState::Disengaged) == 3);
  for (auto s : kAllStates) {
    CHECK(state_from_ordinal(ordinal(s)) == s);
    CHECK(parse_state(to_string(s)) == s);
  }
  CHECK_THROWS(state_from_ordinal(4));
}

TEST_CASE("default params carry the published values") {
  const EngineParams p;
  CHECK(p.beta == EmotionVector{0.5, 0.7, 0.6, 0.75, 0.85, 0.8, 0.9});
  CHECK(p.eta == 0.0);
  CHECK(p.lambda_reg == 0.1);
  CHECK(p.alpha == 0.7);
  CHECK(p.delta == 0.05);
  CHECK(p.thresholds == Thresholds{0.58, 0.61, 0.64});
  CHECK(p.theta == 0.5);
  CHECK(p.window_ms == 60000);
  CHECK(p.variance_window == 5);
  CHECK_NOTHROW(validate_params(p));
}

TEST_CASE("param validation names the offending field") {
  auto expect = [](EngineParams p, const char* msg) {
    try {
      validate_params(p);
      FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
      CHECK(std::string(e.what()) == msg);
    }
  };
  EngineParams p;
  p.thresholds = {0.61, 0.58, 0.64};
  expect(p, "thresholds not strictly increasing");
  p = {};
  p.thresholds = {0.58, 0.58, 0.64};
  expect(p, "thresholds not strictly increasing");
  p = {};
  p.alpha = 1.5;
  expect(p, "alpha out of range");
  p = {};
  p.beta[slot(Emotion::Anger)] = 0.0;
  expect(p, "beta.anger out of range (0,1]");
  p = {};
  p.beta[slot(Emotion::Fear)] = 1.01;
  expect(p, "beta.fear out of range (0,1]");
  p = {};
  p.lambda_reg = -0.1;
  expect(p, "lambda_reg negative");
  p = {};
  p.window_ms = 0;
  expect(p, "window_ms must be positive");
}

TEST_CASE("event validation") {
  auto e = ev(0, Emotion::Happiness, 0.9);
  CHECK_NOTHROW(validate_event(e));
  e.confidence = 1.2;
  CHECK_THROWS_AS(validate_event(e), ValidationError);
  e.confidence = 0.9;
  e.bbox.cx = 1.5;
  CHECK_THROWS_AS(validate_event(e), ValidationError);
}

TEST_CASE("event JSON round-trip and key order") {
  auto e = ev(1234, Emotion::Surprise, 0.75, 7, 2, 31);
  e.bbox = {0.25, 0.5, 0.125, 0.2};
  const std::string line = format_event_line(e);
  CHECK(line ==
        R"({"camera_id":2,"frame_index":31,"timestamp_ms":1234,"track_id":7,)"
        R"("bbox":[0.25,0.5,0.125,0.2],"label":"surprise","confidence":0.75})");
  CHECK(parse_event_line(line) == e);
}

TEST_CASE("event parsing rejects malformed records") {
  const std::string good =
      R"({"camera_id":0,"frame_index":0,"timestamp_ms":0,"track_id":0,)"
      R"("bbox":[0.5,0.5,0.1,0.1],"label":"fear","confidence":0.8})";
  CHECK_NOTHROW(parse_event_line(good));
  CHECK_THROWS_AS(parse_event_line("{not json"), ParseError);
  CHECK_THROWS_AS(parse_event_line(R"({"camera_id":0})"), ParseError);
  CHECK_THROWS_AS(
      parse_event_line(R"({"camera_id":0,"frame_index":0,"timestamp_ms":0,"track_id":0,)"
                       R"("bbox":[0.5,0.5,0.1,0.1],"label":"fear","confidence":0.8,"x":1})"),
      ParseError);
  CHECK_THROWS_AS(
      parse_event_line(R"({"camera_id":0,"frame_index":0,"timestamp_ms":-5,"track_id":0,)"
                       R"("bbox":[0.5,0.5,0.1,0.1],"label":"fear","confidence":0.8})"),
      ParseError);
  CHECK_THROWS_AS(
      parse_event_line(R"({"camera_id":0,"frame_index":0,"timestamp_ms":0,"track_id":0,)"
                       R"("bbox":[0.5,0.5,0.1,0.1],"label":"joy","confidence":0.8})"),
      ParseError);
  CHECK_THROWS_AS(
      parse_event_line(R"({"camera_id":0,"frame_index":0,"timestamp_ms":0,"track_id":0,)"
                       R"("bbox":[0.5,0.5,0.1,0.1],"label":"fear","confidence":1.2})"),
      ValidationError);
}

TEST_CASE("params JSON: partial files fill defaults, bad ones are rejected") {
  const auto p = params_from_json(parse_json(R"({"alpha":0.5,"beta":{"anger":0.9}})"));
  CHECK(p.alpha == 0.5);
  CHECK(p.beta[slot(Emotion::Anger)] == 0.9);
  CHECK(p.beta[slot(Emotion::Fear)] == 0.9);
  CHECK(p.lambda_reg == 0.1);

  EngineParams q;
  q.thresholds = {0.4, 0.5, 0.6};
  q.gamma_denominator = GammaDenominator::Frames;
  CHECK(params_from_json(to_json(q)) == q);

  CHECK_THROWS_AS(params_from_json(parse_json(R"({"gamma":1})")), ParseError);
  CHECK_THROWS_AS(params_from_json(parse_json(R"({"thresholds":[0.6,0.5,0.7]})")),
                  ValidationError);
  CHECK_THROWS_AS(params_from_json(parse_json(R"({"beta":{"joy":0.5}})")), ParseError);
}

TEST_CASE("report JSON round-trip keeps absent fields absent") {
  SessionReport r;
  r.lambda_star = 0.61;
  r.final_state = EngagementState::PassivePresence;
  WindowAggregate empty;
  empty.window_index = 3;
  WindowAggregate scored;
  scored.window_index = 4;
  scored.retained_count = 2;
  scored.gamma[1] = 0.4;
  scored.psi = 0.28;
  scored.a_star = 0.28;
  scored.a_smooth = 0.28;
  scored.state_hint = EngagementState::AttentiveListening;
  r.windows = {empty, scored};
  const auto back = report_from_json(parse_json(format_report(r)));
  CHECK(back == r);
  CHECK_FALSE(back.windows[0].psi.has_value());
}
