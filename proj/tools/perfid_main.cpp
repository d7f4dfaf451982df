// perfid: performer identification from MIDI performances.
//
// Precedence of settings: built-in defaults < --config JSON file < flags.

#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "commands.h"
#include "perfid/errors.h"
#include "perfid/parallel.h"

namespace {

using perfid::cli::RunConfig;

struct Flags {
  std::string config_file;
  std::vector<std::string> inputs;
  std::string reference;
  std::string model;
  std::string features;
  std::string weights;
  std::size_t bins = 0;
  std::string bandwidths;
  std::size_t gmm_k = 0;
  std::size_t groups = 0;
  std::uint64_t seed = 0;
  std::string out;
  unsigned jobs = 0;
  bool sweep = false;
  std::size_t performers = 0;
  std::size_t notes = 0;
  double separation = 0.0;
};

RunConfig resolve(const CLI::App& sub, const Flags& f, RunConfig c = {}) {
  c.experiment.jobs = perfid::default_jobs();
  if (sub.get_option("--config")->count() > 0) perfid::cli::apply_config_file(f.config_file, c);

  auto given = [&](const char* name) {
    const CLI::Option* opt = sub.get_option_no_throw(name);
    return opt != nullptr && opt->count() > 0;
  };
  perfid::ExperimentConfig& e = c.experiment;
  if (given("--input")) c.inputs.assign(f.inputs.begin(), f.inputs.end());
  if (given("--reference")) c.reference = f.reference;
  if (given("--model")) {
    const auto family = perfid::parse_family(f.model);
    if (!family) throw perfid::cli::UsageError("unknown model '" + f.model + "' (histogram, kde, gmm)");
    e.family = *family;
  }
  if (given("--features")) e.features = perfid::cli::parse_feature_list(f.features);
  if (given("--weights")) e.weights = perfid::cli::parse_weight_list(f.weights);
  if (given("--bins")) e.hyper.histogram_bins = f.bins;
  if (given("--bandwidths"))
    for (const auto& [k, h] : perfid::cli::parse_bandwidths(f.bandwidths)) e.hyper.bandwidths[k] = h;
  if (given("--gmm-k")) e.hyper.gmm_k = f.gmm_k;
  if (given("--groups")) e.n_groups = f.groups;
  if (given("--seed")) e.seed = f.seed;
  if (given("--out")) c.out = f.out;
  if (given("--jobs")) e.jobs = std::max(1u, f.jobs);
  if (given("--sweep")) c.sweep = f.sweep;
  if (given("--performers")) c.performers = f.performers;
  if (given("--notes")) c.notes = f.notes;
  if (given("--separation")) c.separation = f.separation;
  return c;
}

void add_common(CLI::App* sub, Flags& f) {
  sub->add_option("--config", f.config_file, "JSON file with any of the settings below");
  sub->add_option("--out", f.out, "Output directory");
  sub->add_option("--jobs", f.jobs, "Worker threads (default: all cores)");
}

void add_input(CLI::App* sub, Flags& f) {
  sub->add_option("--input", f.inputs,
                  "MIDI/CSV files, or a directory of them, or a directory of performer folders");
  sub->add_option("--reference", f.reference, "Reference performer id or file (default: median length)");
}

void add_model(CLI::App* sub, Flags& f) {
  sub->add_option("--model", f.model, "histogram, kde or gmm");
  sub->add_option("--features", f.features, "Comma list of OT,IOI,OTD,DL,ND");
  sub->add_option("--weights", f.weights, "Comma list of fusion weights, one per feature");
  sub->add_option("--bins", f.bins, "Histogram bins");
  sub->add_option("--bandwidths", f.bandwidths, "KDE bandwidths, e.g. IOI=0.01,DL=1.5");
  sub->add_option("--gmm-k", f.gmm_k, "GMM components (1-3)");
  sub->add_option("--groups", f.groups, "Cross-validation groups");
  sub->add_option("--seed", f.seed, "Random seed");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Performer identification from MIDI performances"};
  app.require_subcommand(1);
  Flags f;

  auto* align = app.add_subcommand("align", "Align performances and write the note table");
  add_common(align, f);
  add_input(align, f);

  auto* features = app.add_subcommand("features", "Write per-performer deviation features");
  add_common(features, f);
  add_input(features, f);
  features->add_option("--features", f.features, "Comma list of OT,IOI,OTD,DL,ND (default: all)");

  auto* evaluate = app.add_subcommand("evaluate", "Leave-one-group-out performer identification");
  add_common(evaluate, f);
  add_input(evaluate, f);
  add_model(evaluate, f);
  evaluate->add_flag("--sweep", f.sweep, "Also evaluate every feature subset of size >= 2");

  auto* synth = app.add_subcommand("synth", "Write a synthetic dataset");
  add_common(synth, f);
  synth->add_option("--performers", f.performers, "Number of performers");
  synth->add_option("--notes", f.notes, "Notes per performance");
  synth->add_option("--separation", f.separation, "Scale of between-performer differences");
  synth->add_option("--seed", f.seed, "Random seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (align->parsed()) return perfid::cli::cmd_align(resolve(*align, f));
    if (features->parsed()) {
      // The dump covers every kind unless a subset is asked for.
      RunConfig all;
      all.experiment.features.assign(perfid::kAllFeatures.begin(), perfid::kAllFeatures.end());
      return perfid::cli::cmd_features(resolve(*features, f, all));
    }
    if (evaluate->parsed()) return perfid::cli::cmd_evaluate(resolve(*evaluate, f));
    return perfid::cli::cmd_synth(resolve(*synth, f));
  } catch (const perfid::cli::UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const perfid::InvalidInput& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const perfid::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
}
