#include "perfid/synth.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>

#include "perfid/errors.h"
#include "perfid/pipeline.h"
#include "perfid/random.h"

namespace perfid {

namespace {

constexpr double kMinOnsetGap = 1e-3;
constexpr double kMinDuration = 0.02;

// Release every note no later than the next attack of its pitch, so that
// same-pitch notes never nest and SMF note-off pairing stays unambiguous.
void release_before_repeat(std::vector<NoteEvent>& notes) {
  std::vector<std::optional<std::size_t>> last(128);
  for (std::size_t i = 0; i < notes.size(); ++i) {
    auto& prev = last[static_cast<std::size_t>(notes[i].pitch)];
    if (prev && notes[*prev].offset > notes[i].onset && notes[i].onset > notes[*prev].onset)
      notes[*prev].offset = notes[i].onset;
    prev = i;
  }
}

}  // namespace

void validate(const PerformerProfile& p) {
  if (!(p.tempo_scale >= 0.5 && p.tempo_scale <= 2.0))
    throw InvalidInput("profile '" + p.id + "': tempo_scale must lie in [0.5, 2]");
  if (!(p.duration_scale > 0.0)) throw InvalidInput("profile '" + p.id + "': duration_scale must be positive");
  if (p.onset_jitter.stddev < 0.0 || p.velocity.stddev < 0.0 || p.articulation_jitter < 0.0)
    throw InvalidInput("profile '" + p.id + "': standard deviations must be non-negative");
  if (p.velocity.second_weight < 0.0 || p.velocity.second_weight > 1.0)
    throw InvalidInput("profile '" + p.id + "': second_weight must lie in [0, 1]");
}

Performance generate_score(std::size_t n_notes, std::uint64_t seed) {
  if (n_notes < 2) throw InvalidInput("generate_score needs at least two notes");
  Rng rng(seed);
  Performance score{"score", "synthetic-" + std::to_string(seed), {}};
  score.notes.reserve(n_notes);

  double t = 0.0;
  int melody = 72;
  double level = 70.0;
  std::set<int> previous;
  while (score.notes.size() < n_notes) {
    const double u = rng.uniform();
    std::size_t size = u < 0.7 ? 1 : (u < 0.9 ? 2 : 3);
    size = std::min(size, n_notes - score.notes.size());

    // Melody note by random walk, chord tones below it.
    std::set<int> pitches;
    melody = std::clamp(melody + static_cast<int>(rng.uniform_int(-5, 5)), 48, 96);
    while (previous.count(melody)) melody = melody < 96 ? melody + 1 : 48;
    pitches.insert(melody);
    while (pitches.size() < size) {
      const int p = static_cast<int>(rng.uniform_int(36, melody - 1));
      if (!previous.count(p)) pitches.insert(p);
    }

    const double ioi = rng.uniform(0.1, 1.0);
    level = std::clamp(level + rng.normal(0.0, 4.0), 40.0, 100.0);
    for (int p : pitches) {
      const int dynamic = static_cast<int>(std::clamp(std::lround(level + rng.normal(0.0, 3.0)), 40L, 100L));
      const double duration = std::max(0.05, ioi * rng.uniform(1.02, 1.3));
      score.notes.push_back({t, t + duration, p, dynamic});
    }
    previous = std::move(pitches);
    t += ioi;
  }
  release_before_repeat(score.notes);
  return score;
}

Performance render_performer(const Performance& score, const PerformerProfile& profile) {
  validate(profile);
  Rng rng(profile.seed);
  Performance out{profile.id, score.piece_id, {}};
  out.notes.reserve(score.notes.size());

  const double s = profile.tempo_scale;
  double prev_onset = 0.0;
  bool first = true;
  for (std::size_t i = 0; i < score.notes.size();) {
    std::size_t j = i;
    while (j < score.notes.size() && score.notes[j].onset == score.notes[i].onset) ++j;

    const double scaled = s * score.notes[i].onset;
    double onset = scaled + rng.normal(profile.onset_jitter.mean, profile.onset_jitter.stddev);
    if (first)
      onset = std::max(onset, 0.0);
    else
      onset = std::max(onset, prev_onset + kMinOnsetGap);
    const double shift = onset - scaled;
    first = false;
    prev_onset = onset;

    for (std::size_t k = i; k < j; ++k) {
      const NoteEvent& n = score.notes[k];
      const VelocityProfile& v = profile.velocity;
      double mode = v.mean;
      if (v.second_mean && rng.uniform() < v.second_weight) mode = *v.second_mean;
      const double velocity = static_cast<double>(n.dynamic) + rng.normal(mode, v.stddev);
      const int dynamic = static_cast<int>(std::clamp(std::lround(velocity), 1L, 127L));

      double offset = s * n.offset + shift + (profile.duration_scale - 1.0) * s * (n.offset - n.onset) -
                      profile.articulation_bias + rng.normal(0.0, profile.articulation_jitter);
      offset = std::max(offset, onset + kMinDuration);
      out.notes.push_back({onset, offset, n.pitch, dynamic});
    }
    i = j;
  }
  release_before_repeat(out.notes);
  sort_notes(out);
  return out;
}

std::vector<PerformerProfile> separated_profiles(std::size_t n, double separation,
                                                 std::uint64_t seed) {
  Rng rng(seed);
  // One evenly spaced ladder in [-1, 1] per trait, shuffled independently so
  // that performers differ along several traits at once.
  auto ladder = [&]() {
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i)
      v[i] = n == 1 ? 0.0 : -1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(n - 1);
    for (std::size_t i = n; i > 1; --i)
      std::swap(v[i - 1], v[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i) - 1))]);
    return v;
  };
  const auto tempo = ladder();
  const auto jitter = ladder();
  const auto loudness = ladder();
  const auto articulation = ladder();
  const auto duration = ladder();

  std::vector<PerformerProfile> out;
  for (std::size_t i = 0; i < n; ++i) {
    PerformerProfile p;
    char id[32];
    std::snprintf(id, sizeof id, "p%02zu", i + 1);
    p.id = id;
    p.tempo_scale = 1.0 + 0.06 * separation * tempo[i];
    p.onset_jitter = {0.02 * separation * jitter[i], 0.01};
    p.velocity.mean = 8.0 * separation * loudness[i];
    p.velocity.stddev = 4.0;
    if (i % 3 == 2) {
      p.velocity.second_mean = p.velocity.mean + 10.0 * separation;
      p.velocity.second_weight = 0.3;
    }
    // Legato playing: releases overlap the next attack on average.
    p.articulation_bias = -0.04 + 0.02 * separation * articulation[i];
    p.articulation_jitter = 0.04;
    p.duration_scale = 1.0 + 0.12 * separation * duration[i];
    p.seed = derive_seed(seed, i);
    out.push_back(std::move(p));
  }
  return out;
}

SynthData synthesize(std::size_t n_notes, const std::vector<PerformerProfile>& profiles,
                     std::uint64_t score_seed) {
  std::set<std::string> ids;
  for (const PerformerProfile& p : profiles)
    if (!ids.insert(p.id).second) throw InvalidInput("duplicate profile id '" + p.id + "'");
  SynthData data{generate_score(n_notes, score_seed), {}};
  for (const PerformerProfile& p : profiles) data.performances.push_back(render_performer(data.score, p));
  return data;
}

BenchmarkResult benchmark(std::size_t n_notes, const std::vector<PerformerProfile>& profiles,
                          const ExperimentConfig& config, std::uint64_t score_seed) {
  const SynthData data = synthesize(n_notes, profiles, score_seed);
  TableOptions options;
  options.jobs = config.jobs;
  const PreparedData prepared = prepare({data.performances}, ReferencePolicy::median_length(),
                                        options, config.features);

  BenchmarkResult result;
  result.alignment = prepared.alignment.front();
  result.report = run_cv(prepared.dataset(), config);
  for (FeatureKind kind : config.features) {
    Separability sep;
    sep.kind = kind;
    double within = 0.0;
    for (const PerformerFeatures& pf : prepared.features) {
      const auto& v = pf.series.at(kind).values;
      const double n = static_cast<double>(v.size());
      const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
      double var = 0.0;
      for (double x : v) var += (x - mean) * (x - mean);
      var /= n;
      sep.means.push_back(mean);
      sep.stddevs.push_back(std::sqrt(var));
      within += var;
    }
    const double k = static_cast<double>(sep.means.size());
    within /= k;
    const double grand = std::accumulate(sep.means.begin(), sep.means.end(), 0.0) / k;
    double between = 0.0;
    for (double m : sep.means) between += (m - grand) * (m - grand);
    between /= k;
    sep.fisher_ratio = within > 0.0 ? between / within : 0.0;
    result.separability.push_back(std::move(sep));
  }
  return result;
}

}  // namespace perfid
