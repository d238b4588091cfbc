#include "engage/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace engage::synth {

std::size_t Rng::categorical(std::span<const double> weights) {
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  const double u = uniform() * total;
  double acc = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    acc += weights[i];
    if (u < acc) return i;
  }
  // Rounding at the top end; return the last non-zero weight.
  for (std::size_t i = weights.size(); i-- > 0;) {
    if (weights[i] > 0.0) return i;
  }
  return weights.size() - 1;
}

std::array<double, 4> Rng::flat_dirichlet4() {
  std::array<double, 4> x{};
  double sum = 0.0;
  for (double& v : x) {
    v = -std::log(1.0 - uniform());
    sum += v;
  }
  for (double& v : x) v /= sum;
  return x;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// ---------------------------------------------------------------------------
// Profiles and mixes
// ---------------------------------------------------------------------------

namespace {

constexpr double kSumTolerance = 1e-9;

EmotionVector distribution(std::initializer_list<std::pair<Emotion, double>> entries) {
  EmotionVector v{};
  for (auto [e, p] : entries) v[slot(e)] = p;
  return v;
}

}  // namespace

const ProfileSet& default_profiles() {
  using E = Emotion;
  static const ProfileSet profiles = {
      CategoryEmotionProfile{
          EngagementState::AttentiveListening,
          distribution({{E::Happiness, 0.30}, {E::Surprise, 0.35}, {E::Neutral, 0.30},
                        {E::Sadness, 0.05}})},
      CategoryEmotionProfile{
          EngagementState::ActiveParticipation,
          distribution({{E::Happiness, 0.65}, {E::Surprise, 0.25}, {E::Neutral, 0.10}})},
      CategoryEmotionProfile{
          EngagementState::PassivePresence,
          distribution({{E::Neutral, 0.65}, {E::Happiness, 0.10}, {E::Surprise, 0.15},
                        {E::Sadness, 0.05}, {E::Anger, 0.02}, {E::Disgust, 0.03}})},
      CategoryEmotionProfile{
          EngagementState::Disengaged,
          distribution({{E::Sadness, 0.35}, {E::Anger, 0.20}, {E::Disgust, 0.10},
                        {E::Neutral, 0.20}, {E::Surprise, 0.05}, {E::Fear, 0.10}})},
  };
  return profiles;
}

void validate_profile(const CategoryEmotionProfile& p) {
  double sum = 0.0;
  for (double v : p.distribution) {
    if (!(v >= 0.0)) throw ValidationError("profile probabilities must be non-negative");
    sum += v;
  }
  if (std::abs(sum - 1.0) > kSumTolerance) {
    throw ValidationError("profile for " + std::string(to_string(p.category)) +
                          " does not sum to 1");
  }
}

StudentMix StudentMix::of(double active, double attentive, double passive, double disengaged,
                          unsigned students) {
  StudentMix m;
  m.proportions[ordinal(EngagementState::ActiveParticipation)] = active;
  m.proportions[ordinal(EngagementState::AttentiveListening)] = attentive;
  m.proportions[ordinal(EngagementState::PassivePresence)] = passive;
  m.proportions[ordinal(EngagementState::Disengaged)] = disengaged;
  m.student_count = students;
  return m;
}

void validate_mix(const StudentMix& mix) {
  if (mix.student_count == 0) throw ValidationError("student_count must be positive");
  double sum = 0.0;
  for (double v : mix.proportions) {
    if (!(v >= 0.0)) throw ValidationError("mix fractions must be non-negative");
    sum += v;
  }
  if (std::abs(sum - 1.0) > kSumTolerance) throw ValidationError("mix does not sum to 1");
}

EngagementState label_segment(const StudentMix& mix) {
  if (mix.fraction(EngagementState::ActiveParticipation) > 0.60) {
    return EngagementState::ActiveParticipation;
  }
  if (mix.fraction(EngagementState::AttentiveListening) > 0.60) {
    return EngagementState::AttentiveListening;
  }
  if (mix.fraction(EngagementState::Disengaged) > 0.25) return EngagementState::Disengaged;
  return EngagementState::PassivePresence;
}

std::array<unsigned, kStateCount> apportion_students(const StudentMix& mix) {
  std::array<unsigned, kStateCount> counts{};
  std::array<double, kStateCount> remainder{};
  unsigned assigned = 0;
  for (std::size_t c = 0; c < kStateCount; ++c) {
    const double exact = mix.proportions[c] * mix.student_count;
    counts[c] = static_cast<unsigned>(std::floor(exact + 1e-9));
    remainder[c] = exact - counts[c];
    assigned += counts[c];
  }
  std::array<std::size_t, kStateCount> order{0, 1, 2, 3};
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
  for (std::size_t i = 0; assigned < mix.student_count; i = (i + 1) % kStateCount) {
    ++counts[order[i]];
    ++assigned;
  }
  return counts;
}

// ---------------------------------------------------------------------------
// Generation
// ---------------------------------------------------------------------------

std::uint64_t frame_count(const SegmentSpec& spec) {
  return static_cast<std::uint64_t>(
      std::floor(static_cast<double>(spec.duration_ms) * spec.fps / 1000.0 + 1e-9));
}

Segment generate_segment(const SegmentSpec& spec, const ProfileSet& profiles,
                         SegmentOffset offset) {
  validate_mix(spec.mix);
  if (spec.duration_ms == 0) throw ValidationError("duration_ms must be positive");
  if (!(spec.fps > 0.0)) throw ValidationError("fps must be positive");
  if (spec.cameras == 0) throw ValidationError("cameras must be positive");
  for (const auto& p : profiles) validate_profile(p);

  const unsigned students = spec.mix.student_count;
  const auto counts = apportion_students(spec.mix);
  std::vector<std::size_t> student_class;
  student_class.reserve(students);
  for (std::size_t c = 0; c < kStateCount; ++c) {
    student_class.insert(student_class.end(), counts[c], c);
  }

  // Seats on a 6-column grid per camera.
  std::vector<BoundingBox> seats(students);
  for (unsigned s = 0; s < students; ++s) {
    const unsigned k = s / spec.cameras;
    seats[s] = {(static_cast<double>(k % 6) + 0.5) / 6.0,
                (static_cast<double>((k / 6) % 6) + 0.5) / 6.0, 0.08, 0.08};
  }

  Segment seg;
  seg.truth = label_segment(spec.mix);
  const std::uint64_t frames = frame_count(spec);
  seg.events.reserve(frames * students);

  Rng rng(spec.seed);
  for (std::uint64_t f = 0; f < frames; ++f) {
    const auto ts = offset.start_ms + static_cast<std::uint64_t>(std::floor(
                                          static_cast<double>(f) * 1000.0 / spec.fps + 1e-9));
    for (unsigned s = 0; s < students; ++s) {
      DetectionEvent e;
      e.camera_id = s % spec.cameras;
      e.frame_index = offset.first_frame + f;
      e.timestamp_ms = ts;
      e.track_id = s;
      e.bbox = seats[s];
      e.label = static_cast<Emotion>(
          rng.categorical(profiles[student_class[s]].distribution));
      e.confidence = rng.uniform(0.6, 1.0);
      seg.events.push_back(e);
    }
  }
  return seg;
}

std::vector<DetectionEvent> inject_classifier_noise(std::vector<DetectionEvent> stream,
                                                    std::uint64_t seed) {
  Rng rng(seed);
  for (auto& e : stream) {
    // One draw per event keeps the random stream aligned with the input.
    const double u = rng.uniform();
    switch (e.label) {
      case Emotion::Anger:
        if (u < kAngerDisgustConfusion) e.label = Emotion::Disgust;
        break;
      case Emotion::Disgust:
        if (u < kAngerDisgustConfusion) e.label = Emotion::Anger;
        break;
      case Emotion::Sadness:
        if (u < kSadnessNeutralConfusion) e.label = Emotion::Neutral;
        break;
      default:
        break;
    }
  }
  return stream;
}

SynthSession generate_session(std::span<const SegmentSpec> segments, bool noise,
                              std::uint64_t noise_seed, const ProfileSet& profiles) {
  SynthSession session;
  SegmentOffset offset;
  for (const auto& spec : segments) {
    Segment seg = generate_segment(spec, profiles, offset);
    session.segment_start_ms.push_back(offset.start_ms);
    session.truths.push_back(seg.truth);
    session.events.insert(session.events.end(), seg.events.begin(), seg.events.end());
    offset.start_ms += spec.duration_ms;
    offset.first_frame += frame_count(spec);
  }
  if (noise) session.events = inject_classifier_noise(std::move(session.events), noise_seed);
  return session;
}

std::vector<SegmentSpec> paper_session_preset(std::uint64_t seed, unsigned students,
                                              double fps, unsigned cameras) {
  // (active, attentive, passive, disengaged)
  const std::array<std::array<double, 4>, 12> arc = {{
      {0.70, 0.20, 0.10, 0.00},  // 0-5 min
      {0.70, 0.20, 0.10, 0.00},
      {0.70, 0.20, 0.10, 0.00},
      {0.70, 0.20, 0.10, 0.00},
      {0.70, 0.20, 0.10, 0.00},  // 20-25 min
      {0.05, 0.65, 0.30, 0.00},  // 25-30 min
      {0.05, 0.65, 0.30, 0.00},
      {0.05, 0.50, 0.45, 0.00},  // 35-40 min
      {0.00, 0.20, 0.50, 0.30},  // 40-45 min
      {0.00, 0.20, 0.70, 0.10},
      {0.00, 0.20, 0.50, 0.30},  // 50-55 min
      {0.00, 0.20, 0.70, 0.10},
  }};
  std::vector<SegmentSpec> specs;
  for (std::size_t i = 0; i < arc.size(); ++i) {
    SegmentSpec s;
    s.mix = StudentMix::of(arc[i][0], arc[i][1], arc[i][2], arc[i][3], students);
    s.duration_ms = 300'000;
    s.fps = fps;
    s.cameras = cameras;
    s.seed = derive_seed(seed, i);
    specs.push_back(s);
  }
  return specs;
}

std::vector<SegmentSpec> stratified_segments(std::size_t count, std::uint64_t seed,
                                             unsigned students, double fps,
                                             std::uint64_t duration_ms, unsigned cameras) {
  Rng rng(seed);
  std::vector<SegmentSpec> specs;
  specs.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const auto target = kAllStates[i % kStateCount];
    StudentMix mix;
    mix.student_count = students;
    do {
      const auto p = rng.flat_dirichlet4();
      std::array<unsigned, kStateCount> counts{};
      for (unsigned s = 0; s < students; ++s) ++counts[rng.categorical(p)];
      for (std::size_t c = 0; c < kStateCount; ++c) {
        mix.proportions[c] = static_cast<double>(counts[c]) / students;
      }
    } while (label_segment(mix) != target);
    SegmentSpec spec;
    spec.mix = mix;
    spec.duration_ms = duration_ms;
    spec.fps = fps;
    spec.cameras = cameras;
    spec.seed = derive_seed(seed, 1'000'000 + i);
    specs.push_back(spec);
  }
  return specs;
}

}  // namespace engage::synth
