#include "commands.h"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "perfid/errors.h"
#include "perfid/pipeline.h"
#include "perfid/random.h"
#include "perfid/report_io.h"
#include "perfid/synth.h"

namespace perfid::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_bytes(const fs::path& path, const void* data, std::size_t size) {
  std::ofstream out(path, std::ios::binary);
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

void write_text(const fs::path& path, const std::string& text) {
  write_bytes(path, text.data(), text.size());
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream ss(text);
  while (std::getline(ss, item, sep)) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double parse_number(const std::string& text, const std::string& what) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != text.size() || text.empty()) throw UsageError("bad " + what + " '" + text + "'");
  return v;
}

bool is_note_file(const fs::path& p) {
  const std::string ext = p.extension().string();
  return ext == ".mid" || ext == ".midi" || ext == ".csv";
}

std::vector<fs::path> sorted_entries(const fs::path& dir) {
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

Performance load_performance(const fs::path& path, const std::string& performer_id) {
  Performance p;
  if (path.extension() == ".csv") {
    p = from_note_table(read_text(path), performer_id, path.stem().string());
  } else {
    SmfParseResult r = read_smf_file(path);
    for (const std::string& w : r.warnings) std::cerr << "warning: " << path.string() << ": " << w << "\n";
    p = std::move(r.performance);
  }
  p.performer_id = performer_id;
  p.piece_id = path.stem().string();
  return p;
}

struct PerformerFiles {
  std::string id;
  std::vector<fs::path> movements;
};

// A file is one performer; a directory holds either one file per performer
// or one subdirectory per performer with its movement files.
std::vector<PerformerFiles> discover(const std::vector<fs::path>& inputs) {
  if (inputs.empty()) throw UsageError("no --input given");
  std::vector<PerformerFiles> out;
  for (const fs::path& in : inputs) {
    if (!fs::exists(in)) throw UsageError("input path does not exist: " + in.string());
    if (fs::is_regular_file(in)) {
      out.push_back({in.stem().string(), {in}});
      continue;
    }
    const auto entries = sorted_entries(in);
    const bool nested = std::any_of(entries.begin(), entries.end(),
                                    [](const fs::path& p) { return fs::is_directory(p); });
    for (const fs::path& e : entries) {
      if (nested && fs::is_directory(e)) {
        PerformerFiles pf{e.filename().string(), {}};
        for (const fs::path& m : sorted_entries(e))
          if (fs::is_regular_file(m) && is_note_file(m)) pf.movements.push_back(m);
        if (pf.movements.empty()) throw UsageError("no MIDI or CSV files in " + e.string());
        out.push_back(std::move(pf));
      } else if (!nested && fs::is_regular_file(e) && is_note_file(e)) {
        out.push_back({e.stem().string(), {e}});
      }
    }
  }
  if (out.size() < 2) throw UsageError("need at least two performers");
  for (const PerformerFiles& pf : out)
    if (pf.movements.size() != out.front().movements.size())
      throw UsageError("performer '" + pf.id + "' has a different number of movements");
  return out;
}

std::vector<std::vector<Performance>> load_pieces(const RunConfig& config) {
  const auto performers = discover(config.inputs);
  std::vector<std::vector<Performance>> pieces(performers.front().movements.size());
  for (std::size_t m = 0; m < pieces.size(); ++m)
    for (const PerformerFiles& pf : performers)
      pieces[m].push_back(load_performance(pf.movements[m], pf.id));
  return pieces;
}

ReferencePolicy reference_policy(const RunConfig& config,
                                 const std::vector<std::vector<Performance>>& pieces) {
  if (config.reference.empty()) return ReferencePolicy::median_length();
  if (fs::is_regular_file(config.reference))
    return ReferencePolicy::explicit_reference(load_performance(config.reference, "reference"));
  if (pieces.size() != 1)
    throw UsageError("--reference by performer id needs a single-movement input");
  for (const Performance& p : pieces.front())
    if (p.performer_id == config.reference) return ReferencePolicy::explicit_reference(p);
  throw UsageError("--reference '" + config.reference + "' is neither a file nor a performer id");
}

TableOptions table_options(const RunConfig& config) {
  TableOptions t;
  t.jobs = config.experiment.jobs;
  return t;
}

void prepare_out(const RunConfig& config) { fs::create_directories(config.out); }

}  // namespace

std::vector<FeatureKind> parse_feature_list(const std::string& text) {
  std::vector<FeatureKind> out;
  for (const std::string& name : split(text, ',')) {
    const auto k = parse_feature(name);
    if (!k) throw UsageError("unknown feature '" + name + "' (expected OT, IOI, OTD, DL, ND)");
    out.push_back(*k);
  }
  if (out.empty()) throw UsageError("empty feature list");
  return out;
}

std::vector<double> parse_weight_list(const std::string& text) {
  std::vector<double> out;
  for (const std::string& w : split(text, ',')) out.push_back(parse_number(w, "weight"));
  return out;
}

std::map<FeatureKind, double> parse_bandwidths(const std::string& text) {
  std::map<FeatureKind, double> out;
  for (const std::string& item : split(text, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw UsageError("bandwidth '" + item + "' is not KIND=VALUE");
    const auto k = parse_feature(item.substr(0, eq));
    if (!k) throw UsageError("unknown feature in bandwidth '" + item + "'");
    out[*k] = parse_number(item.substr(eq + 1), "bandwidth");
  }
  return out;
}

void apply_config_file(const fs::path& path, RunConfig& config) {
  if (!fs::exists(path)) throw UsageError("config file does not exist: " + path.string());
  json j;
  try {
    j = json::parse(read_text(path));
    if (!j.is_object()) throw UsageError("config file must hold a JSON object");
    static const std::set<std::string> known{
        "input", "reference", "model", "features", "weights", "bins", "bandwidths", "gmm_k",
        "groups", "seed", "jobs", "out", "sweep", "performers", "notes", "separation"};
    for (const auto& item : j.items())
      if (!known.count(item.key())) throw UsageError("unknown config key '" + item.key() + "'");
    ExperimentConfig& e = config.experiment;
    if (j.contains("input")) {
      config.inputs.clear();
      if (j["input"].is_array())
        for (const auto& p : j["input"]) config.inputs.emplace_back(p.get<std::string>());
      else
        config.inputs.emplace_back(j["input"].get<std::string>());
    }
    if (j.contains("reference")) config.reference = j["reference"].get<std::string>();
    if (j.contains("model")) {
      const auto f = parse_family(j["model"].get<std::string>());
      if (!f) throw UsageError("unknown model '" + j["model"].get<std::string>() + "'");
      e.family = *f;
    }
    if (j.contains("features")) {
      if (j["features"].is_array()) {
        std::string joined;
        for (const auto& f : j["features"]) joined += f.get<std::string>() + ",";
        e.features = parse_feature_list(joined);
      } else {
        e.features = parse_feature_list(j["features"].get<std::string>());
      }
    }
    if (j.contains("weights")) e.weights = j["weights"].get<std::vector<double>>();
    if (j.contains("bins")) e.hyper.histogram_bins = j["bins"].get<std::size_t>();
    if (j.contains("bandwidths"))
      for (const auto& [name, value] : j["bandwidths"].items()) {
        const auto k = parse_feature(name);
        if (!k) throw UsageError("unknown feature in bandwidths: '" + name + "'");
        e.hyper.bandwidths[*k] = value.get<double>();
      }
    if (j.contains("gmm_k")) e.hyper.gmm_k = j["gmm_k"].get<std::size_t>();
    if (j.contains("groups")) e.n_groups = j["groups"].get<std::size_t>();
    if (j.contains("seed")) e.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("jobs")) e.jobs = j["jobs"].get<unsigned>();
    if (j.contains("out")) config.out = j["out"].get<std::string>();
    if (j.contains("sweep")) config.sweep = j["sweep"].get<bool>();
    if (j.contains("performers")) config.performers = j["performers"].get<std::size_t>();
    if (j.contains("notes")) config.notes = j["notes"].get<std::size_t>();
    if (j.contains("separation")) config.separation = j["separation"].get<double>();
  } catch (const json::exception& ex) {
    throw UsageError("bad config file " + path.string() + ": " + ex.what());
  }
}

int cmd_align(const RunConfig& config) {
  const auto pieces = load_pieces(config);
  const ReferencePolicy policy = reference_policy(config, pieces);
  std::vector<AlignedNoteTable> tables;
  std::vector<AlignmentReport> reports;
  for (const auto& piece : pieces) {
    BuiltTable built = build_table(piece, policy, table_options(config));
    tables.push_back(std::move(built.table));
    reports.push_back(std::move(built.report));
  }
  const AlignedNoteTable table = concatenate(tables);
  prepare_out(config);
  write_text(config.out / "alignment.json", alignment_report_json(reports));
  write_text(config.out / "table.csv", to_table_csv(table));
  std::cout << "aligned " << table.n_performers() << " performers, " << table.n_positions()
            << " positions -> " << config.out.string() << "\n";
  return 0;
}

int cmd_features(const RunConfig& config) {
  const auto pieces = load_pieces(config);
  const PreparedData data = prepare(pieces, reference_policy(config, pieces), table_options(config),
                                    config.experiment.features);
  prepare_out(config);
  write_text(config.out / "features.csv", to_feature_csv(data.features));
  std::size_t rows = 0;
  for (const PerformerFeatures& pf : data.features)
    for (const auto& [kind, s] : pf.series) rows += s.values.size();
  std::cout << "wrote " << rows << " feature values -> " << (config.out / "features.csv").string()
            << "\n";
  return 0;
}

int cmd_evaluate(const RunConfig& config) {
  validate(config.experiment);
  const auto pieces = load_pieces(config);
  const std::vector<FeatureKind> kinds =
      config.sweep ? std::vector<FeatureKind>(kAllFeatures.begin(), kAllFeatures.end())
                   : config.experiment.features;
  const PreparedData data =
      prepare(pieces, reference_policy(config, pieces), table_options(config), kinds);
  const Dataset dataset = data.dataset();

  const EvaluationReport report = run_cv(dataset, config.experiment);
  prepare_out(config);
  write_text(config.out / "report.json", report_json(report));
  write_text(config.out / "confusion.csv", confusion_csv(report));
  write_text(config.out / "normalized_confusion.csv", normalized_confusion_csv(report));
  write_text(config.out / "metrics.csv", metrics_csv(report));
  for (const std::string& w : report.warnings) std::cerr << "warning: " << w << "\n";

  char line[128];
  std::snprintf(line, sizeof line, "%s %s: precision %.3f recall %.3f F %.3f\n",
                std::string(family_name(config.experiment.family)).c_str(),
                feature_set_label(config.experiment.features).c_str(),
                report.metrics.macro_precision, report.metrics.macro_recall,
                report.metrics.macro_f);
  std::cout << line;

  if (config.sweep) {
    const SweepResult result =
        sweep(dataset, feature_subsets(2), {config.experiment.family}, config.experiment);
    const std::string name = "sweep_" + std::string(family_name(config.experiment.family)) + ".csv";
    write_text(config.out / name, sweep_csv(result, config.experiment.family));
    std::cout << "sweep of " << result.rows.size() << " feature sets -> "
              << (config.out / name).string() << "\n";
  }
  return 0;
}

int cmd_synth(const RunConfig& config) {
  if (config.performers < 2) throw UsageError("--performers must be at least 2");
  if (config.notes < 2) throw UsageError("--notes must be at least 2");
  const std::uint64_t seed = config.experiment.seed;
  const auto profiles = separated_profiles(config.performers, config.separation, derive_seed(seed, 1));
  const SynthData data = synthesize(config.notes, profiles, derive_seed(seed, 2));

  const fs::path midi = config.out / "midi";
  const fs::path csv = config.out / "csv";
  const fs::path score = config.out / "score";
  for (const fs::path& d : {midi, csv, score}) fs::create_directories(d);

  // Times are snapped to the tick grid first so the SMF and CSV files hold
  // the same notes.
  auto emit = [&](const Performance& p, const fs::path& mdir, const fs::path& cdir) {
    const Performance q = quantize_to_ticks(p);
    const auto bytes = write_smf(q);
    write_bytes(mdir / (p.performer_id + ".mid"), bytes.data(), bytes.size());
    write_text(cdir / (p.performer_id + ".csv"), to_note_table(q));
  };
  emit(data.score, score, score);
  for (const Performance& p : data.performances) emit(p, midi, csv);

  json prof = json::array();
  for (const PerformerProfile& p : profiles) {
    json v = {{"mean", p.velocity.mean}, {"stddev", p.velocity.stddev}};
    if (p.velocity.second_mean) {
      v["second_mean"] = *p.velocity.second_mean;
      v["second_weight"] = p.velocity.second_weight;
    }
    prof.push_back({{"id", p.id},
                    {"tempo_scale", p.tempo_scale},
                    {"onset_jitter", {{"mean", p.onset_jitter.mean}, {"stddev", p.onset_jitter.stddev}}},
                    {"velocity", v},
                    {"articulation_bias", p.articulation_bias},
                    {"articulation_jitter", p.articulation_jitter},
                    {"duration_scale", p.duration_scale},
                    {"seed", p.seed}});
  }
  write_text(config.out / "profiles.json", prof.dump(2) + "\n");
  std::cout << "synthesized " << profiles.size() << " performers x " << config.notes << " notes -> "
            << config.out.string() << "\n";
  return 0;
}

}  // namespace perfid::cli
