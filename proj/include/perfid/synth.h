#pragma once

// Synthetic performers with known expressive tendencies.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "perfid/alignment.h"
#include "perfid/evaluation.h"
#include "perfid/midi_io.h"

namespace perfid {

struct NormalParams {
  double mean = 0.0;
  double stddev = 0.0;
};

/// Velocity offset added to the score dynamic. With `second_mean` set, each
/// note draws from that mode with probability `second_weight`.
struct VelocityProfile {
  double mean = 0.0;
  double stddev = 0.0;
  std::optional<double> second_mean;
  double second_weight = 0.5;
};

struct PerformerProfile {
  std::string id;
  double tempo_scale = 1.0;       // in [0.5, 2]; multiplies score time
  NormalParams onset_jitter;      // seconds, drawn once per chord
  VelocityProfile velocity;
  double articulation_bias = 0.0;    // mean OTD shift in seconds (> 0: detached)
  double articulation_jitter = 0.0;  // per-note release noise, seconds
  double duration_scale = 1.0;       // scales the score duration beyond tempo
  std::uint64_t seed = 0;
};

/// Throws InvalidInput for negative spreads or out-of-range scales.
void validate(const PerformerProfile& profile);

/// Mostly single notes with some 2-3 note chords: pitch 36-96, 0.1-1.0 s
/// between chords, dynamic 40-100. Notes are held into the next attack
/// (legato overlap). Consecutive chords never repeat a pitch.
/// Deterministic in `seed`. Throws InvalidInput for n_notes < 2.
Performance generate_score(std::size_t n_notes, std::uint64_t seed);

/// Applies a profile to a score. Note order and pitches are preserved: chord
/// onsets move together and stay strictly increasing, and a note is released
/// no later than the next attack of the same pitch. The identity profile
/// reproduces the score exactly.
Performance render_performer(const Performance& score, const PerformerProfile& profile);

/// `n` distinct profiles spread around a common centre; `separation` scales
/// every between-performer difference (0 makes them identical up to noise).
std::vector<PerformerProfile> separated_profiles(std::size_t n, double separation = 1.0,
                                                 std::uint64_t seed = 7);

struct SynthData {
  Performance score;
  std::vector<Performance> performances;
};

SynthData synthesize(std::size_t n_notes, const std::vector<PerformerProfile>& profiles,
                     std::uint64_t score_seed);

struct Separability {
  FeatureKind kind = FeatureKind::kOT;
  std::vector<double> means;    // per performer
  std::vector<double> stddevs;  // per performer
  double fisher_ratio = 0.0;    // variance of the means / mean within variance
};

struct BenchmarkResult {
  EvaluationReport report;
  AlignmentReport alignment;
  std::vector<Separability> separability;
};

/// Renders every profile, then runs align -> norm -> features -> run_cv.
/// Throws InvalidInput when profile ids repeat.
BenchmarkResult benchmark(std::size_t n_notes, const std::vector<PerformerProfile>& profiles,
                          const ExperimentConfig& config, std::uint64_t score_seed = 1);

}  // namespace perfid
