#pragma once

// Leave-one-group-out cross-validation with minimum-divergence classification.

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "perfid/density.h"
#include "perfid/divergence.h"
#include "perfid/features.h"

namespace perfid {

/// Contiguous chronological groups of aligned positions, shared by every
/// performer. ranges[g] = [begin, end).
struct FoldSpec {
  std::size_t n_groups = 0;
  std::vector<std::pair<std::size_t, std::size_t>> ranges;

  std::vector<std::size_t> sizes() const;
  bool contains(std::size_t group, std::size_t position) const {
    return position >= ranges[group].first && position < ranges[group].second;
  }
};

/// Every group holds floor(N / n_groups) positions except the last, which
/// also takes the N mod n_groups remainder. Throws InvalidInput when
/// n_positions < n_groups or n_groups == 0.
FoldSpec logo_split(std::size_t n_positions, std::size_t n_groups = 8);

enum class ModelFamily { kHistogram, kKde, kGmm };

std::string_view family_name(ModelFamily family);
std::optional<ModelFamily> parse_family(std::string_view name);

/// KDE bandwidths per feature kind: OT 1.2, IOI 0.01, OTD 0.02, DL 1.5, ND 0.01.
double default_bandwidth(FeatureKind kind);

struct ModelHyperparameters {
  std::size_t histogram_bins = 50;
  std::map<FeatureKind, double> bandwidths;  // missing kinds use default_bandwidth
  std::size_t gmm_k = 3;
  GmmOptions gmm;

  double bandwidth(FeatureKind kind) const;
};

struct ExperimentConfig {
  ModelFamily family = ModelFamily::kHistogram;
  std::vector<FeatureKind> features{FeatureKind::kIOI, FeatureKind::kDL, FeatureKind::kND};
  std::vector<double> weights;  // empty: 1 for every feature
  ModelHyperparameters hyper;
  std::size_t n_groups = 8;
  std::uint64_t seed = 0;
  unsigned jobs = 1;

  std::vector<double> effective_weights() const;
};

/// Throws InvalidInput for an empty or repeated feature set, a weight count
/// that does not match, negative weights or a GMM k outside 1..3.
void validate(const ExperimentConfig& config);

/// "IOI+DL+ND" in canonical feature order.
std::string feature_set_label(std::span<const FeatureKind> features);

DensityModel fit_model(std::span<const double> values, FeatureKind kind,
                       const ExperimentConfig& config, std::uint64_t seed);

/// Deviation series of every performer, sharing one position indexing.
struct Dataset {
  std::vector<std::string> performer_ids;
  std::vector<std::map<FeatureKind, DeviationSeries>> series;  // [performer]
  std::size_t n_positions = 0;
};

Dataset make_dataset(std::vector<PerformerFeatures> features, std::size_t n_positions);

/// Values whose positions (and successor, for IOI/OTD) all lie in `group`.
DeviationSeries test_values(const DeviationSeries& series, const FoldSpec& folds, std::size_t group);

/// Values touching no position of `group`.
DeviationSeries training_values(const DeviationSeries& series, const FoldSpec& folds,
                                std::size_t group);

struct CandidateModels {
  std::string performer_id;
  std::map<FeatureKind, DensityModel> models;
};

struct Classification {
  std::string predicted;
  std::vector<std::vector<double>> kl;  // [candidate][feature], config feature order
  std::vector<double> fused;            // [candidate]
};

/// Picks the candidate with the smallest fused KL(test || candidate). Scores
/// within a relative 1e-12 of each other are ties, which go to the
/// lexicographically smallest performer id.
Classification classify_models(const std::map<FeatureKind, DensityModel>& test,
                               const std::vector<CandidateModels>& candidates,
                               std::span<const FeatureKind> features,
                               std::span<const double> weights);

/// Fits the test models with the config's family and hyperparameters, then
/// calls classify_models. Throws InvalidInput if a selected feature has no
/// test values.
Classification classify(const std::map<FeatureKind, std::vector<double>>& test,
                        const std::vector<CandidateModels>& candidates,
                        const ExperimentConfig& config, std::uint64_t seed = 0);

struct Metrics {
  std::vector<double> precision;  // per class
  std::vector<double> recall;
  std::vector<double> f_score;
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double macro_f = 0.0;  // harmonic mean of the macro precision and recall
};

/// Harmonic mean, 0 when both inputs are 0.
double f_score(double precision, double recall);

/// Rows are true labels, columns predictions. Throws InvalidInput for a
/// non-square matrix.
Metrics metrics(const std::vector<std::vector<std::size_t>>& confusion);

struct Trial {
  std::size_t performer = 0;
  std::size_t group = 0;
  std::optional<std::size_t> predicted;  // empty when skipped
  std::vector<std::vector<double>> kl;   // [candidate][feature]
  std::vector<double> fused;
};

struct EvaluationReport {
  ExperimentConfig config;
  FoldSpec folds;
  std::vector<std::string> performer_ids;
  std::vector<std::vector<std::size_t>> confusion;
  Metrics metrics;
  std::vector<Trial> trials;
  std::vector<std::string> warnings;

  /// Row-normalized confusion; rows without trials stay zero.
  std::vector<std::vector<double>> normalized_confusion() const;
};

/// Per-trial, per-candidate, per-feature divergences for one model family.
struct DivergenceTable {
  ExperimentConfig config;  // features: every kind that was evaluated
  FoldSpec folds;
  std::vector<std::string> performer_ids;
  std::vector<Trial> trials;  // fused/predicted left empty
  std::vector<std::string> warnings;
};

/// Fits training models per (candidate, group) and test models per
/// (performer, group), and records KL(test || training) for every kind in
/// config.features. Trials run in parallel; output does not depend on jobs.
DivergenceTable compute_divergences(const Dataset& dataset, const ExperimentConfig& config);

/// Fuses a subset of the table's features and classifies every trial.
EvaluationReport report_from_divergences(const DivergenceTable& table,
                                         std::span<const FeatureKind> features,
                                         std::span<const double> weights);

/// Every performer x group trial: the test set is that performer's group,
/// each candidate trains on its other groups.
EvaluationReport run_cv(const Dataset& dataset, const ExperimentConfig& config);

/// All feature subsets with at least `min_size` members, canonical order.
std::vector<std::vector<FeatureKind>> feature_subsets(std::size_t min_size = 2);

struct SweepRow {
  ModelFamily family;
  std::vector<FeatureKind> features;
  double precision = 0.0;
  double recall = 0.0;
  double f_score = 0.0;
};

struct SweepResult {
  std::vector<SweepRow> rows;  // per family, best precision first
  std::map<ModelFamily, EvaluationReport> best;
};

/// Evaluates every subset under every family with equal weights.
SweepResult sweep(const Dataset& dataset, const std::vector<std::vector<FeatureKind>>& subsets,
                  const std::vector<ModelFamily>& families, const ExperimentConfig& base);

}  // namespace perfid
