#include "perfid/evaluation.h"

#include <algorithm>
#include <cmath>
#include <set>

#include "perfid/errors.h"
#include "perfid/parallel.h"
#include "perfid/random.h"

namespace perfid {

std::vector<std::size_t> FoldSpec::sizes() const {
  std::vector<std::size_t> out;
  for (const auto& [b, e] : ranges) out.push_back(e - b);
  return out;
}

FoldSpec logo_split(std::size_t n_positions, std::size_t n_groups) {
  if (n_groups == 0) throw InvalidInput("logo_split: need at least one group");
  if (n_positions < n_groups)
    throw InvalidInput("logo_split: " + std::to_string(n_positions) + " positions cannot fill " +
                       std::to_string(n_groups) + " groups");
  FoldSpec spec;
  spec.n_groups = n_groups;
  const std::size_t base = n_positions / n_groups;
  for (std::size_t g = 0; g < n_groups; ++g)
    spec.ranges.emplace_back(g * base, g + 1 == n_groups ? n_positions : (g + 1) * base);
  return spec;
}

std::string_view family_name(ModelFamily family) {
  switch (family) {
    case ModelFamily::kHistogram:
      return "histogram";
    case ModelFamily::kKde:
      return "kde";
    case ModelFamily::kGmm:
      return "gmm";
  }
  return "?";
}

std::optional<ModelFamily> parse_family(std::string_view name) {
  for (ModelFamily f : {ModelFamily::kHistogram, ModelFamily::kKde, ModelFamily::kGmm})
    if (family_name(f) == name) return f;
  return std::nullopt;
}

double default_bandwidth(FeatureKind kind) {
  switch (kind) {
    case FeatureKind::kOT:
      return 1.2;
    case FeatureKind::kIOI:
      return 0.01;
    case FeatureKind::kOTD:
      return 0.02;
    case FeatureKind::kDL:
      return 1.5;
    case FeatureKind::kND:
      return 0.01;
  }
  return 1.0;
}

double ModelHyperparameters::bandwidth(FeatureKind kind) const {
  auto it = bandwidths.find(kind);
  return it == bandwidths.end() ? default_bandwidth(kind) : it->second;
}

std::vector<double> ExperimentConfig::effective_weights() const {
  return weights.empty() ? std::vector<double>(features.size(), 1.0) : weights;
}

void validate(const ExperimentConfig& config) {
  if (config.features.empty()) throw InvalidInput("feature set must not be empty");
  std::set<FeatureKind> seen(config.features.begin(), config.features.end());
  if (seen.size() != config.features.size()) throw InvalidInput("feature set repeats a feature");
  if (!config.weights.empty() && config.weights.size() != config.features.size())
    throw InvalidInput("expected " + std::to_string(config.features.size()) + " weights, got " +
                       std::to_string(config.weights.size()));
  for (double w : config.weights)
    if (!(w >= 0.0)) throw InvalidInput("fusion weights must be non-negative");
  if (config.hyper.histogram_bins == 0) throw InvalidInput("histogram needs at least one bin");
  if (config.hyper.gmm_k < 1 || config.hyper.gmm_k > 3)
    throw InvalidInput("GMM component count must be 1, 2 or 3");
  for (FeatureKind k : kAllFeatures)
    if (!(config.hyper.bandwidth(k) > 0.0)) throw InvalidInput("bandwidths must be positive");
  if (config.n_groups < 2) throw InvalidInput("cross-validation needs at least two groups");
}

std::string feature_set_label(std::span<const FeatureKind> features) {
  std::string out;
  for (FeatureKind k : kAllFeatures) {
    if (std::find(features.begin(), features.end(), k) == features.end()) continue;
    if (!out.empty()) out += '+';
    out += feature_name(k);
  }
  return out;
}

DensityModel fit_model(std::span<const double> values, FeatureKind kind,
                       const ExperimentConfig& config, std::uint64_t seed) {
  switch (config.family) {
    case ModelFamily::kHistogram:
      return fit_histogram(values, config.hyper.histogram_bins);
    case ModelFamily::kKde:
      return fit_kde(values, config.hyper.bandwidth(kind));
    case ModelFamily::kGmm:
      return fit_gmm(values, config.hyper.gmm_k, seed, config.hyper.gmm);
  }
  throw InvalidInput("unknown model family");
}

Dataset make_dataset(std::vector<PerformerFeatures> features, std::size_t n_positions) {
  Dataset d;
  d.n_positions = n_positions;
  for (PerformerFeatures& pf : features) {
    d.performer_ids.push_back(pf.performer_id);
    d.series.push_back(std::move(pf.series));
  }
  return d;
}

namespace {

template <typename Keep>
DeviationSeries filter(const DeviationSeries& s, Keep keep) {
  DeviationSeries out;
  out.kind = s.kind;
  out.performer_id = s.performer_id;
  for (std::size_t k = 0; k < s.size(); ++k) {
    if (!keep(s.positions[k], s.ends[k])) continue;
    out.positions.push_back(s.positions[k]);
    out.ends.push_back(s.ends[k]);
    out.values.push_back(s.values[k]);
  }
  return out;
}

const DeviationSeries& series_of(const Dataset& d, std::size_t performer, FeatureKind kind) {
  auto it = d.series[performer].find(kind);
  if (it == d.series[performer].end())
    throw InvalidInput("performer '" + d.performer_ids[performer] + "' has no " +
                       std::string(feature_name(kind)) + " series");
  return it->second;
}

// Fused scores closer than this relative gap count as tied, so rescaling
// every weight (which perturbs sums in the last bits) cannot reorder them.
constexpr double kTieTolerance = 1e-12;

bool preferred(double total, const std::string& id, double best_total, const std::string& best_id) {
  const double gap = kTieTolerance * std::max(std::abs(total), std::abs(best_total));
  if (total < best_total - gap) return true;
  if (total > best_total + gap) return false;
  return id < best_id;
}

}  // namespace

DeviationSeries test_values(const DeviationSeries& series, const FoldSpec& folds, std::size_t group) {
  return filter(series, [&](std::size_t i, std::size_t j) {
    return folds.contains(group, i) && folds.contains(group, j);
  });
}

DeviationSeries training_values(const DeviationSeries& series, const FoldSpec& folds,
                                std::size_t group) {
  return filter(series, [&](std::size_t i, std::size_t j) {
    return !folds.contains(group, i) && !folds.contains(group, j);
  });
}

Classification classify_models(const std::map<FeatureKind, DensityModel>& test,
                               const std::vector<CandidateModels>& candidates,
                               std::span<const FeatureKind> features,
                               std::span<const double> weights) {
  if (candidates.empty()) throw InvalidInput("classify: no candidates");
  if (weights.size() != features.size()) throw InvalidInput("classify: weight count mismatch");
  Classification out;
  std::optional<std::size_t> best;
  for (const CandidateModels& c : candidates) {
    std::vector<double> row;
    for (FeatureKind k : features) {
      auto t = test.find(k);
      auto m = c.models.find(k);
      if (t == test.end() || m == c.models.end())
        throw InvalidInput("classify: missing " + std::string(feature_name(k)) + " model");
      row.push_back(kl_divergence(t->second, m->second).value);
    }
    const double total = fuse(row, weights);
    out.kl.push_back(std::move(row));
    out.fused.push_back(total);
    const std::size_t idx = out.fused.size() - 1;
    if (!best || preferred(total, c.performer_id, out.fused[*best], candidates[*best].performer_id))
      best = idx;
  }
  out.predicted = candidates[*best].performer_id;
  return out;
}

Classification classify(const std::map<FeatureKind, std::vector<double>>& test,
                        const std::vector<CandidateModels>& candidates,
                        const ExperimentConfig& config, std::uint64_t seed) {
  validate(config);
  std::map<FeatureKind, DensityModel> models;
  for (FeatureKind k : config.features) {
    auto it = test.find(k);
    if (it == test.end() || it->second.empty())
      throw InvalidInput("classify: no test values for " + std::string(feature_name(k)));
    models.emplace(k, fit_model(it->second, k, config,
                                derive_seed(seed, static_cast<std::uint64_t>(k))));
  }
  const std::vector<double> weights = config.effective_weights();
  return classify_models(models, candidates, config.features, weights);
}

double f_score(double precision, double recall) {
  const double s = precision + recall;
  return s > 0.0 ? 2.0 * precision * recall / s : 0.0;
}

Metrics metrics(const std::vector<std::vector<std::size_t>>& confusion) {
  const std::size_t n = confusion.size();
  for (const auto& row : confusion)
    if (row.size() != n) throw InvalidInput("confusion matrix must be square");
  Metrics m;
  if (n == 0) return m;
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t row_sum = 0, col_sum = 0;
    for (std::size_t j = 0; j < n; ++j) {
      row_sum += confusion[c][j];
      col_sum += confusion[j][c];
    }
    const double tp = static_cast<double>(confusion[c][c]);
    const double p = col_sum ? tp / static_cast<double>(col_sum) : 0.0;
    const double r = row_sum ? tp / static_cast<double>(row_sum) : 0.0;
    m.precision.push_back(p);
    m.recall.push_back(r);
    m.f_score.push_back(f_score(p, r));
    m.macro_precision += p;
    m.macro_recall += r;
  }
  m.macro_precision /= static_cast<double>(n);
  m.macro_recall /= static_cast<double>(n);
  m.macro_f = f_score(m.macro_precision, m.macro_recall);
  return m;
}

std::vector<std::vector<double>> EvaluationReport::normalized_confusion() const {
  std::vector<std::vector<double>> out;
  for (const auto& row : confusion) {
    std::size_t sum = 0;
    for (std::size_t v : row) sum += v;
    std::vector<double> r(row.size(), 0.0);
    if (sum)
      for (std::size_t j = 0; j < row.size(); ++j)
        r[j] = static_cast<double>(row[j]) / static_cast<double>(sum);
    out.push_back(std::move(r));
  }
  return out;
}

DivergenceTable compute_divergences(const Dataset& dataset, const ExperimentConfig& config) {
  validate(config);
  const std::size_t n_perf = dataset.performer_ids.size();
  if (n_perf < 2) throw InvalidInput("cross-validation needs at least two performers");
  if (dataset.series.size() != n_perf) throw InvalidInput("dataset labels and series disagree");

  DivergenceTable table;
  table.config = config;
  table.folds = logo_split(dataset.n_positions, config.n_groups);
  table.performer_ids = dataset.performer_ids;
  const std::size_t n_groups = config.n_groups;
  const auto& features = config.features;

  // Training models depend on the held-out group only, never on which
  // performer is being tested, so they are shared across trials.
  std::vector<std::map<FeatureKind, DensityModel>> training(n_perf * n_groups);
  parallel_for(training.size(), config.jobs, [&](std::size_t idx) {
    const std::size_t c = idx / n_groups, g = idx % n_groups;
    for (FeatureKind k : features) {
      const DeviationSeries values = training_values(series_of(dataset, c, k), table.folds, g);
      if (values.empty())
        throw InvalidInput("performer '" + dataset.performer_ids[c] + "' has no " +
                           std::string(feature_name(k)) + " training values outside group " +
                           std::to_string(g));
      training[idx].emplace(
          k, fit_model(values.values, k, config,
                       derive_seed(config.seed, 1, idx, static_cast<std::uint64_t>(k))));
    }
  });

  table.trials.resize(n_perf * n_groups);
  std::vector<std::string> skipped(table.trials.size());
  parallel_for(table.trials.size(), config.jobs, [&](std::size_t idx) {
    const std::size_t p = idx / n_groups, g = idx % n_groups;
    Trial& trial = table.trials[idx];
    trial.performer = p;
    trial.group = g;
    std::map<FeatureKind, DensityModel> test;
    for (FeatureKind k : features) {
      const DeviationSeries values = test_values(series_of(dataset, p, k), table.folds, g);
      if (values.empty()) {
        skipped[idx] = "trial " + dataset.performer_ids[p] + "/group " + std::to_string(g) +
                       " skipped: no " + std::string(feature_name(k)) + " test values";
        return;
      }
      test.emplace(k, fit_model(values.values, k, config,
                                derive_seed(config.seed, 2, idx, static_cast<std::uint64_t>(k))));
    }
    for (std::size_t c = 0; c < n_perf; ++c) {
      const auto& models = training[c * n_groups + g];
      std::vector<double> row;
      for (FeatureKind k : features)
        row.push_back(kl_divergence(test.at(k), models.at(k)).value);
      trial.kl.push_back(std::move(row));
    }
  });
  for (std::string& w : skipped)
    if (!w.empty()) table.warnings.push_back(std::move(w));
  return table;
}

EvaluationReport report_from_divergences(const DivergenceTable& table,
                                         std::span<const FeatureKind> features,
                                         std::span<const double> weights) {
  if (features.size() != weights.size()) throw InvalidInput("weight count mismatch");
  std::vector<std::size_t> columns;
  for (FeatureKind k : features) {
    auto it = std::find(table.config.features.begin(), table.config.features.end(), k);
    if (it == table.config.features.end())
      throw InvalidInput(std::string(feature_name(k)) + " was not evaluated");
    columns.push_back(static_cast<std::size_t>(it - table.config.features.begin()));
  }

  EvaluationReport report;
  report.config = table.config;
  report.config.features.assign(features.begin(), features.end());
  report.config.weights.assign(weights.begin(), weights.end());
  report.folds = table.folds;
  report.performer_ids = table.performer_ids;
  report.warnings = table.warnings;
  const std::size_t n = table.performer_ids.size();
  report.confusion.assign(n, std::vector<std::size_t>(n, 0));

  std::vector<double> row(features.size());
  for (const Trial& full : table.trials) {
    Trial trial;
    trial.performer = full.performer;
    trial.group = full.group;
    if (!full.kl.empty()) {
      std::size_t best = 0;
      for (std::size_t c = 0; c < full.kl.size(); ++c) {
        for (std::size_t f = 0; f < columns.size(); ++f) row[f] = full.kl[c][columns[f]];
        const double total = fuse(row, weights);
        trial.kl.push_back(row);
        trial.fused.push_back(total);
        if (c > 0 && preferred(total, table.performer_ids[c], trial.fused[best],
                               table.performer_ids[best]))
          best = c;
      }
      trial.predicted = best;
      ++report.confusion[trial.performer][best];
    }
    report.trials.push_back(std::move(trial));
  }
  report.metrics = metrics(report.confusion);
  return report;
}

EvaluationReport run_cv(const Dataset& dataset, const ExperimentConfig& config) {
  const DivergenceTable table = compute_divergences(dataset, config);
  const std::vector<double> weights = config.effective_weights();
  return report_from_divergences(table, config.features, weights);
}

std::vector<std::vector<FeatureKind>> feature_subsets(std::size_t min_size) {
  std::vector<std::vector<FeatureKind>> out;
  const std::size_t n = kAllFeatures.size();
  for (std::size_t size = std::max<std::size_t>(min_size, 1); size <= n; ++size) {
    for (unsigned mask = 1; mask < (1u << n); ++mask) {
      if (static_cast<std::size_t>(__builtin_popcount(mask)) != size) continue;
      std::vector<FeatureKind> subset;
      for (std::size_t i = 0; i < n; ++i)
        if (mask & (1u << i)) subset.push_back(kAllFeatures[i]);
      out.push_back(std::move(subset));
    }
  }
  return out;
}

SweepResult sweep(const Dataset& dataset, const std::vector<std::vector<FeatureKind>>& subsets,
                  const std::vector<ModelFamily>& families, const ExperimentConfig& base) {
  SweepResult result;
  std::vector<FeatureKind> needed;
  for (FeatureKind k : kAllFeatures)
    for (const auto& s : subsets)
      if (std::find(s.begin(), s.end(), k) != s.end()) {
        needed.push_back(k);
        break;
      }
  if (needed.empty()) return result;

  for (ModelFamily family : families) {
    ExperimentConfig config = base;
    config.family = family;
    config.features = needed;
    config.weights.clear();
    const DivergenceTable table = compute_divergences(dataset, config);

    std::vector<SweepRow> rows;
    std::optional<EvaluationReport> best;
    for (const auto& subset : subsets) {
      const std::vector<double> weights(subset.size(), 1.0);
      EvaluationReport report = report_from_divergences(table, subset, weights);
      rows.push_back({family, subset, report.metrics.macro_precision, report.metrics.macro_recall,
                      report.metrics.macro_f});
      if (!best || report.metrics.macro_precision > best->metrics.macro_precision)
        best = std::move(report);
    }
    std::stable_sort(rows.begin(), rows.end(), [](const SweepRow& a, const SweepRow& b) {
      return a.precision > b.precision;
    });
    result.rows.insert(result.rows.end(), rows.begin(), rows.end());
    result.best.emplace(family, std::move(*best));
  }
  return result;
}

}  // namespace perfid
