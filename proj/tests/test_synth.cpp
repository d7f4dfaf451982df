#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "perfid/alignment.h"
#include "perfid/errors.h"
#include "perfid/features.h"
#include "perfid/pipeline.h"
#include "perfid/synth.h"

using namespace perfid;

namespace {

PerformerProfile identity_profile(std::string id) {
  PerformerProfile p;
  p.id = std::move(id);
  p.seed = 3;
  return p;
}

double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double standard_error(const std::vector<double>& v) {
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  const double n = static_cast<double>(v.size());
  return std::sqrt(ss / (n - 1.0) / n);
}

// Indices of the first note of every chord.
std::vector<std::size_t> chord_starts(const Performance& score) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < score.notes.size(); ++i)
    if (i == 0 || score.notes[i].onset != score.notes[i - 1].onset) out.push_back(i);
  return out;
}

}  // namespace

TEST(GenerateScore, DeterministicWithRequestedSize) {
  const Performance a = generate_score(16980, 5), b = generate_score(16980, 5);
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.notes.size(), 16980u);
  EXPECT_NE(generate_score(200, 6), generate_score(200, 7));
}

TEST(GenerateScore, PlausibleRanges) {
  const Performance s = generate_score(5000, 11);
  for (const NoteEvent& n : s.notes) {
    EXPECT_GE(n.pitch, 36);
    EXPECT_LE(n.pitch, 96);
    EXPECT_GE(n.dynamic, 40);
    EXPECT_LE(n.dynamic, 100);
  }
  const auto starts = chord_starts(s);
  for (std::size_t c = 0; c + 1 < starts.size(); ++c) {
    const double ioi = s.notes[starts[c + 1]].onset - s.notes[starts[c]].onset;
    EXPECT_GE(ioi, 0.1 - 1e-9);
    EXPECT_LE(ioi, 1.0 + 1e-9);
    EXPECT_LE(starts[c + 1] - starts[c], 3u);
  }
}

TEST(GenerateScore, InvariantsHoldForManySeeds) {
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const Performance s = generate_score(2 + seed % 120, seed);
    ASSERT_NO_THROW(validate(s)) << "seed " << seed;
    ASSERT_EQ(s.notes.size(), 2 + seed % 120);
  }
  EXPECT_THROW(generate_score(1, 0), InvalidInput);
}

TEST(RenderPerformer, IdentityProfileReproducesScore) {
  const Performance score = generate_score(3000, 2);
  const Performance out = render_performer(score, identity_profile("id"));
  EXPECT_EQ(out.notes, score.notes);
  EXPECT_EQ(out.performer_id, "id");
}

TEST(RenderPerformer, TempoScaleMultipliesEveryInterOnsetInterval) {
  const Performance score = generate_score(2000, 4);
  PerformerProfile p = identity_profile("slow");
  p.tempo_scale = 1.1;
  const Performance out = render_performer(score, p);
  ASSERT_EQ(out.notes.size(), score.notes.size());
  for (std::size_t i = 0; i + 1 < score.notes.size(); ++i) {
    const double expected = 1.1 * (score.notes[i + 1].onset - score.notes[i].onset);
    ASSERT_NEAR(out.notes[i + 1].onset - out.notes[i].onset, expected, 1e-12) << "note " << i;
  }
}

TEST(RenderPerformer, PreservesOrderPitchesAndChords) {
  const Performance score = generate_score(4000, 8);
  for (const PerformerProfile& p : separated_profiles(9, 1.5, 21)) {
    const Performance out = render_performer(score, p);
    ASSERT_NO_THROW(validate(out));
    ASSERT_EQ(out.notes.size(), score.notes.size());
    for (std::size_t i = 0; i < score.notes.size(); ++i) {
      ASSERT_EQ(out.notes[i].pitch, score.notes[i].pitch);
      ASSERT_GE(out.notes[i].dynamic, 1);
      ASSERT_LE(out.notes[i].dynamic, 127);
      if (i > 0) {
        const bool same_chord = score.notes[i].onset == score.notes[i - 1].onset;
        ASSERT_EQ(out.notes[i].onset == out.notes[i - 1].onset, same_chord) << "note " << i;
      }
    }
  }
}

TEST(RenderPerformer, AlignmentToScoreIsIdentity) {
  const Performance score = generate_score(1500, 13);
  for (const PerformerProfile& p : separated_profiles(4, 1.0, 3)) {
    const NoteAlignment a = align_pair(score, render_performer(score, p));
    ASSERT_EQ(a.pairs.size(), score.notes.size());
    for (std::size_t i = 0; i < a.pairs.size(); ++i) {
      ASSERT_EQ(a.pairs[i].first, i);
      ASSERT_EQ(a.pairs[i].second, i);
    }
    EXPECT_TRUE(a.insertions.empty());
    EXPECT_TRUE(a.deletions.empty());
    EXPECT_EQ(a.cost, 0.0);
  }
}

TEST(RenderPerformer, EmpiricalMeansMatchProfile) {
  const Performance score = generate_score(16980, 17);
  PerformerProfile p = identity_profile("x");
  p.velocity = {5.0, 4.0, std::nullopt, 0.5};
  p.onset_jitter = {0.015, 0.01};
  p.seed = 99;
  const Performance out = render_performer(score, p);

  std::vector<double> velocity, onset;
  for (std::size_t i = 0; i < score.notes.size(); ++i)
    velocity.push_back(out.notes[i].dynamic - score.notes[i].dynamic);
  for (std::size_t c : chord_starts(score)) onset.push_back(out.notes[c].onset - score.notes[c].onset);

  EXPECT_NEAR(mean_of(velocity), 5.0, 3.0 * standard_error(velocity));
  EXPECT_NEAR(mean_of(onset), 0.015, 3.0 * standard_error(onset));

  // Two velocity modes: the mean is the weighted mixture mean.
  p.velocity = {-6.0, 2.0, 10.0, 0.3};
  const Performance mixed = render_performer(score, p);
  std::vector<double> mixed_velocity;
  for (std::size_t i = 0; i < score.notes.size(); ++i)
    mixed_velocity.push_back(mixed.notes[i].dynamic - score.notes[i].dynamic);
  EXPECT_NEAR(mean_of(mixed_velocity), 0.7 * -6.0 + 0.3 * 10.0, 3.0 * standard_error(mixed_velocity));
}

TEST(RenderPerformer, OppositeJitterMeansSeparateOnsetDeviations) {
  const Performance score = generate_score(3000, 23);
  PerformerProfile early = identity_profile("early"), late = identity_profile("late");
  early.onset_jitter = {-0.02, 0.005};
  late.onset_jitter = {0.02, 0.005};
  late.seed = 4;
  const PreparedData prepared = prepare({{render_performer(score, early), render_performer(score, late)}});

  const auto& e = prepared.features[0].series.at(FeatureKind::kOT).values;
  const auto& l = prepared.features[1].series.at(FeatureKind::kOT).values;
  // Deviations are norm minus performer: the early player sits above zero.
  EXPECT_GT(mean_of(e), 0.015);
  EXPECT_LT(mean_of(l), -0.015);
  std::size_t crossed = 0;
  for (std::size_t i = 0; i < e.size(); ++i) crossed += e[i] <= l[i];
  EXPECT_LT(crossed, e.size() / 100);
}

TEST(Synthesize, DeterministicAndRejectsDuplicateIds) {
  const auto profiles = separated_profiles(3, 1.0, 5);
  const SynthData a = synthesize(500, profiles, 9), b = synthesize(500, profiles, 9);
  EXPECT_EQ(a.score, b.score);
  EXPECT_EQ(a.performances, b.performances);

  auto dup = profiles;
  dup[2].id = dup[0].id;
  EXPECT_THROW(synthesize(500, dup, 9), InvalidInput);
  EXPECT_THROW(benchmark(500, dup, ExperimentConfig{}), InvalidInput);
}

TEST(Profiles, ValidationRejectsBadValues) {
  PerformerProfile p = identity_profile("p");
  EXPECT_NO_THROW(validate(p));
  p.tempo_scale = 0.4;
  EXPECT_THROW(validate(p), InvalidInput);
  p.tempo_scale = 2.5;
  EXPECT_THROW(validate(p), InvalidInput);
  p = identity_profile("p");
  p.onset_jitter.stddev = -0.1;
  EXPECT_THROW(validate(p), InvalidInput);
  p = identity_profile("p");
  p.velocity.stddev = -1.0;
  EXPECT_THROW(render_performer(generate_score(10, 1), p), InvalidInput);
}

TEST(Profiles, SeparatedProfilesHaveDistinctIdsAndTraits) {
  const auto profiles = separated_profiles(9, 1.0, 7);
  std::set<std::string> ids;
  std::set<double> tempi;
  for (const auto& p : profiles) {
    EXPECT_NO_THROW(validate(p));
    ids.insert(p.id);
    tempi.insert(p.tempo_scale);
  }
  EXPECT_EQ(ids.size(), 9u);
  EXPECT_EQ(tempi.size(), 9u);
  for (const auto& p : separated_profiles(4, 0.0, 7)) EXPECT_EQ(p.tempo_scale, 1.0);
}

TEST(Benchmark, IdenticalPerformersAreAtChance) {
  PerformerProfile a = separated_profiles(1, 1.0, 2).front();
  PerformerProfile b = a;
  a.id = "a";
  b.id = "b";
  const BenchmarkResult r = benchmark(2000, {a, b}, ExperimentConfig{});
  const auto norm = r.report.normalized_confusion();
  EXPECT_NEAR((norm[0][0] + norm[1][1]) / 2.0, 0.5, 0.15);
}

TEST(Benchmark, PrecisionDoesNotRiseAsSeparationShrinks) {
  const ExperimentConfig config;
  double previous = 2.0;
  for (double sep : {1.0, 0.75, 0.5, 0.25, 0.0}) {
    const BenchmarkResult r = benchmark(3000, separated_profiles(5, sep, 31), config, 4);
    const double precision = r.report.metrics.macro_precision;
    EXPECT_LE(precision, previous + 0.05) << "separation " << sep;
    previous = precision;
    if (sep == 1.0) {
      EXPECT_GT(precision, 0.9);
    }
    if (sep == 0.0) {
      EXPECT_LT(precision, 0.6);
    }
  }
}

TEST(Benchmark, DeterministicEndToEnd) {
  const auto profiles = separated_profiles(4, 0.8, 12);
  const BenchmarkResult a = benchmark(1200, profiles, ExperimentConfig{}, 2);
  const BenchmarkResult b = benchmark(1200, profiles, ExperimentConfig{}, 2);
  EXPECT_EQ(a.report.confusion, b.report.confusion);
  ASSERT_EQ(a.report.trials.size(), b.report.trials.size());
  for (std::size_t t = 0; t < a.report.trials.size(); ++t) EXPECT_EQ(a.report.trials[t].kl, b.report.trials[t].kl);
  ASSERT_EQ(a.separability.size(), 3u);
  EXPECT_EQ(a.separability[0].means, b.separability[0].means);
  EXPECT_GT(a.separability[1].fisher_ratio, 0.0);
  EXPECT_EQ(a.alignment.performers.size(), 4u);
  for (const auto& s : a.alignment.performers) EXPECT_EQ(s.insertions + s.deletions, 0u);
}

TEST(Benchmark, OffsetTimingDominatesBothReleaseFeatures) {
  const SynthData d = synthesize(6000, separated_profiles(9, 1.0, 7), 3);
  const PreparedData prepared = prepare({d.performances});
  std::vector<double> otd, nd;
  for (const PerformerFeatures& pf : prepared.features) {
    const auto [a, b] = paired_values(pf.series.at(FeatureKind::kOTD), pf.series.at(FeatureKind::kND));
    otd.insert(otd.end(), a.begin(), a.end());
    nd.insert(nd.end(), b.begin(), b.end());
  }
  EXPECT_GT(pearson_r(otd, nd), 0.9);
}
