#include <doctest.h>

#include <map>

#include "engage/synth.hpp"

using namespace engage;
using namespace engage::synth;

namespace {

SegmentSpec pure(EngagementState s, std::uint64_t duration_ms, std::uint64_t seed = 1) {
  SegmentSpec spec;
  spec.mix.proportions = {};
  spec.mix.proportions[ordinal(s)] = 1.0;
  spec.duration_ms = duration_ms;
  spec.seed = seed;
  return spec;
}

std::vector<DetectionEvent> all_of(Emotion label, std::size_t n) {
  std::vector<DetectionEvent> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i].timestamp_ms = i;
    out[i].label = label;
    out[i].confidence = 0.7;
  }
  return out;
}

// Upper 1% points of the chi-square distribution, by degrees of freedom.
constexpr double kChi2Crit01[] = {0, 6.635, 9.210, 11.345, 13.277, 15.086, 16.812};

}  // namespace

TEST_CASE("profiles are valid distributions with the published headline shares") {
  for (const auto& p : default_profiles()) CHECK_NOTHROW(validate_profile(p));
  const auto& active = default_profiles()[ordinal(EngagementState::ActiveParticipation)];
  CHECK(active.distribution[slot(Emotion::Happiness)] == 0.65);
  CHECK(active.distribution[slot(Emotion::Surprise)] == 0.25);
  CategoryEmotionProfile bad;
  bad.distribution[0] = 0.7;
  CHECK_THROWS_AS(validate_profile(bad), ValidationError);
}

TEST_CASE("label_segment applies the rules in order") {
  CHECK(label_segment(StudentMix::of(0.7, 0.2, 0.1, 0.0)) == EngagementState::ActiveParticipation);
  CHECK(label_segment(StudentMix::of(0.0, 0.5, 0.24, 0.26)) == EngagementState::Disengaged);
  CHECK(label_segment(StudentMix::of(0.5, 0.5, 0.0, 0.0)) == EngagementState::PassivePresence);
  CHECK(label_segment(StudentMix::of(0.0, 0.61, 0.0, 0.39)) ==
        EngagementState::AttentiveListening);
  CHECK(label_segment(StudentMix::of(0.6, 0.0, 0.4, 0.0)) == EngagementState::PassivePresence);
}

TEST_CASE("student apportionment sums to the class size") {
  const auto counts = apportion_students(StudentMix::of(0.7, 0.2, 0.1, 0.0, 30));
  CHECK(counts[ordinal(EngagementState::ActiveParticipation)] == 21);
  CHECK(counts[ordinal(EngagementState::AttentiveListening)] == 6);
  CHECK(counts[ordinal(EngagementState::PassivePresence)] == 3);
  const auto odd = apportion_students(StudentMix::of(1.0 / 3, 1.0 / 3, 1.0 / 3, 0.0, 10));
  CHECK(odd[0] + odd[1] + odd[2] + odd[3] == 10);
}

TEST_CASE("30 students at 25 fps for 60 s emit 45,000 events") {
  SegmentSpec spec;
  spec.mix = StudentMix::of(0.5, 0.3, 0.2, 0.0);
  spec.duration_ms = 60'000;
  spec.seed = 4;
  const auto seg = generate_segment(spec);
  CHECK(seg.events.size() == 45'000);
  CHECK(frame_count(spec) == 1500);
  for (const auto& e : seg.events) {
    CHECK_NOTHROW(validate_event(e));
    CHECK(e.confidence >= 0.6);
    CHECK(e.confidence < 1.0);
  }
}

TEST_CASE("generation is deterministic per seed") {
  SegmentSpec spec;
  spec.mix = StudentMix::of(0.3, 0.3, 0.2, 0.2);
  spec.duration_ms = 10'000;
  spec.seed = 77;
  const auto a = generate_segment(spec);
  const auto b = generate_segment(spec);
  CHECK(a.events == b.events);
  spec.seed = 78;
  CHECK_FALSE(generate_segment(spec).events == a.events);
}

TEST_CASE("all-active mix converges to 65% happiness") {
  const auto seg = generate_segment(pure(EngagementState::ActiveParticipation, 140'000));
  REQUIRE(seg.events.size() >= 100'000);
  std::size_t happy = 0;
  for (const auto& e : seg.events) happy += e.label == Emotion::Happiness;
  CHECK(std::abs(static_cast<double>(happy) / seg.events.size() - 0.65) < 0.01);
}

TEST_CASE("per-class frequencies pass a chi-square goodness-of-fit test") {
  for (auto state : kAllStates) {
    CAPTURE(to_string(state));
    const auto seg = generate_segment(pure(state, 140'000, 100 + ordinal(state)));
    REQUIRE(seg.events.size() >= 100'000);
    EmotionVector counts{};
    for (const auto& e : seg.events) counts[slot(e.label)] += 1;
    const auto& dist = default_profiles()[ordinal(state)].distribution;
    double chi2 = 0.0;
    int categories = 0;
    for (std::size_t q = 0; q < kEmotionCount; ++q) {
      if (dist[q] == 0.0) {
        CHECK(counts[q] == 0.0);
        continue;
      }
      ++categories;
      const double expected = dist[q] * seg.events.size();
      chi2 += (counts[q] - expected) * (counts[q] - expected) / expected;
    }
    CHECK(chi2 < kChi2Crit01[categories - 1]);
  }
}

TEST_CASE("noise injection rates") {
  const auto anger = inject_classifier_noise(all_of(Emotion::Anger, 100'000), 9);
  std::size_t disgust = 0;
  for (const auto& e : anger) disgust += e.label == Emotion::Disgust;
  CHECK(std::abs(disgust / 1e5 - 0.12) <= 0.01);

  const auto dis = inject_classifier_noise(all_of(Emotion::Disgust, 100'000), 10);
  std::size_t to_anger = 0;
  for (const auto& e : dis) to_anger += e.label == Emotion::Anger;
  CHECK(std::abs(to_anger / 1e5 - 0.12) <= 0.01);

  const auto sad = inject_classifier_noise(all_of(Emotion::Sadness, 100'000), 11);
  std::size_t neutral = 0;
  for (const auto& e : sad) neutral += e.label == Emotion::Neutral;
  CHECK(std::abs(neutral / 1e5 - 0.08) <= 0.01);

  const auto happy = all_of(Emotion::Happiness, 10'000);
  CHECK(inject_classifier_noise(happy, 12) == happy);
}

TEST_CASE("noise injection preserves count, order, timestamps and confidences") {
  SegmentSpec spec;
  spec.mix = StudentMix::of(0.0, 0.2, 0.3, 0.5);
  spec.duration_ms = 20'000;
  spec.seed = 3;
  const auto seg = generate_segment(spec);
  const auto noisy = inject_classifier_noise(seg.events, 5);
  REQUIRE(noisy.size() == seg.events.size());
  std::size_t changed = 0;
  for (std::size_t i = 0; i < noisy.size(); ++i) {
    CHECK(noisy[i].timestamp_ms == seg.events[i].timestamp_ms);
    CHECK(noisy[i].confidence == seg.events[i].confidence);
    CHECK(noisy[i].track_id == seg.events[i].track_id);
    changed += noisy[i].label != seg.events[i].label;
  }
  CHECK(changed > 0);
  CHECK(inject_classifier_noise(seg.events, 5) == noisy);
}

TEST_CASE("paper-session preset follows the narrative arc") {
  const auto specs = paper_session_preset(1);
  REQUIRE(specs.size() == 12);
  for (int i = 0; i < 5; ++i) {
    CHECK(label_segment(specs[i].mix) == EngagementState::ActiveParticipation);
  }
  CHECK(label_segment(specs[5].mix) == EngagementState::AttentiveListening);
  CHECK(label_segment(specs[8].mix) == EngagementState::Disengaged);
  CHECK(label_segment(specs[10].mix) == EngagementState::Disengaged);
  CHECK(label_segment(specs[11].mix) == EngagementState::PassivePresence);
}

TEST_CASE("session concatenation") {
  SegmentSpec a;
  a.mix = StudentMix::of(0.7, 0.3, 0.0, 0.0, 4);
  a.duration_ms = 2000;
  a.seed = 1;
  SegmentSpec b = a;
  b.seed = 2;
  const std::vector<SegmentSpec> one{a};
  const auto single = generate_session(one, false);
  CHECK(single.events == generate_segment(a).events);

  const std::vector<SegmentSpec> two{a, b};
  const auto s = generate_session(two, false);
  REQUIRE(s.truths.size() == 2);
  REQUIRE(s.segment_start_ms.size() == 2);
  CHECK(s.segment_start_ms[1] == 2000);
  for (std::size_t i = 1; i < s.events.size(); ++i) {
    CHECK(s.events[i].timestamp_ms >= s.events[i - 1].timestamp_ms);
  }
  std::uint64_t last_first = 0, first_second = UINT64_MAX;
  for (const auto& e : s.events) {
    if (e.timestamp_ms < 2000) last_first = std::max(last_first, e.timestamp_ms);
    else first_second = std::min(first_second, e.timestamp_ms);
  }
  CHECK(first_second > last_first);
}

TEST_CASE("stratified segments balance the four labels") {
  const auto specs = stratified_segments(40, 8);
  std::map<EngagementState, int> counts;
  for (const auto& s : specs) ++counts[label_segment(s.mix)];
  for (auto st : kAllStates) CHECK(counts[st] == 10);
  CHECK(stratified_segments(40, 8).front().seed == specs.front().seed);
}
