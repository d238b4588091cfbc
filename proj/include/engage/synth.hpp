// Seedable classroom simulator.
//
// Students are assigned a behavioral class from a mix; every frame each
// student emits one detection whose label is drawn from that class's emotion
// profile and whose confidence is Uniform(0.6, 1.0). Segment ground truth
// follows the majority-rules annotation protocol (label_segment).

#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "engage/core.hpp"

namespace engage::synth {

/// Deterministic generator. std::mt19937_64's output sequence is fixed by
/// the standard; the distribution mappings below are ours, so streams are
/// identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Index drawn from unnormalized non-negative weights.
  std::size_t categorical(std::span<const double> weights);
  /// Symmetric Dirichlet(1, ..., 1) draw on the 4-simplex.
  std::array<double, 4> flat_dirichlet4();

 private:
  std::mt19937_64 engine_;
};

/// Derives independent child seeds (splitmix64 finalizer).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

struct CategoryEmotionProfile {
  EngagementState category = EngagementState::AttentiveListening;
  EmotionVector distribution{};
};

using ProfileSet = std::array<CategoryEmotionProfile, kStateCount>;

/// Built-in per-class emotion distributions, indexed by state ordinal.
const ProfileSet& default_profiles();
void validate_profile(const CategoryEmotionProfile& p);

/// Fraction of students per behavioral class, indexed by state ordinal
/// (attentive, active, passive, disengaged).
struct StudentMix {
  std::array<double, kStateCount> proportions{};
  unsigned student_count = 30;

  double fraction(EngagementState s) const { return proportions[ordinal(s)]; }
  static StudentMix of(double active, double attentive, double passive, double disengaged,
                       unsigned students = 30);
};

void validate_mix(const StudentMix& mix);

struct SegmentSpec {
  StudentMix mix;
  std::uint64_t duration_ms = 300'000;
  double fps = 25.0;
  unsigned cameras = 1;
  std::uint64_t seed = 0;
};

/// Majority-rules segment label, rules tried in this order: active > 0.60,
/// attentive > 0.60, disengaged > 0.25, otherwise passive.
EngagementState label_segment(const StudentMix& mix);

/// Largest-remainder apportionment of the mix onto student_count students.
std::array<unsigned, kStateCount> apportion_students(const StudentMix& mix);

struct Segment {
  std::vector<DetectionEvent> events;
  EngagementState truth = EngagementState::AttentiveListening;
};

/// Where a segment sits inside a longer session.
struct SegmentOffset {
  std::uint64_t start_ms = 0;
  std::uint64_t first_frame = 0;
};

Segment generate_segment(const SegmentSpec& spec, const ProfileSet& profiles = default_profiles(),
                         SegmentOffset offset = {});

/// Frames emitted for a segment: floor(duration_ms * fps / 1000).
std::uint64_t frame_count(const SegmentSpec& spec);

inline constexpr double kAngerDisgustConfusion = 0.12;
inline constexpr double kSadnessNeutralConfusion = 0.08;

/// Independently per event: Anger <-> Disgust with 0.12 each way,
/// Sadness -> Neutral with 0.08. Everything else passes through.
std::vector<DetectionEvent> inject_classifier_noise(std::vector<DetectionEvent> stream,
                                                    std::uint64_t seed);

struct SynthSession {
  std::vector<DetectionEvent> events;
  std::vector<EngagementState> truths;
  std::vector<std::uint64_t> segment_start_ms;
};

/// Concatenates segments back to back on one clock.
SynthSession generate_session(std::span<const SegmentSpec> segments, bool noise,
                              std::uint64_t noise_seed = 0,
                              const ProfileSet& profiles = default_profiles());

/// Twelve five-minute segments: an active-heavy opening (0-25 min), an
/// attentive/passive middle (25-40 min) and a passive close (40-60 min) with
/// disengaged segments at minutes 40 and 50.
std::vector<SegmentSpec> paper_session_preset(std::uint64_t seed, unsigned students = 30,
                                              double fps = 25.0, unsigned cameras = 1);

/// Segment specs with labels balanced across the four states. Each mix is a
/// multinomial(students) draw from a flat Dirichlet, rejected until
/// label_segment hits the target state.
std::vector<SegmentSpec> stratified_segments(std::size_t count, std::uint64_t seed,
                                             unsigned students = 30, double fps = 25.0,
                                             std::uint64_t duration_ms = 300'000,
                                             unsigned cameras = 1);

}  // namespace engage::synth
