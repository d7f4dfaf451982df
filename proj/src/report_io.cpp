#include "perfid/report_io.h"

#include <cstdio>

#include "json.hpp"
#include "perfid/errors.h"

namespace perfid {

using nlohmann::json;

namespace {

std::string fixed(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

json feature_list(const std::vector<FeatureKind>& features) {
  json out = json::array();
  for (FeatureKind k : features) out.push_back(std::string(feature_name(k)));
  return out;
}

json config_json(const ExperimentConfig& c) {
  json bandwidths = json::object();
  for (FeatureKind k : kAllFeatures) bandwidths[std::string(feature_name(k))] = c.hyper.bandwidth(k);
  return {{"model", std::string(family_name(c.family))},
          {"features", feature_list(c.features)},
          {"weights", c.effective_weights()},
          {"bins", c.hyper.histogram_bins},
          {"bandwidths", bandwidths},
          {"gmm_k", c.hyper.gmm_k},
          {"gmm_tol", c.hyper.gmm.tol},
          {"gmm_max_iter", c.hyper.gmm.max_iter},
          {"groups", c.n_groups},
          {"seed", c.seed}};
}

}  // namespace

std::string model_to_json(const DensityModel& model) {
  json j;
  if (const auto* h = std::get_if<Histogram>(&model)) {
    j = {{"type", "histogram"},
         {"edges", h->edges()},
         {"masses", h->masses()},
         {"smoothing_eps", h->smoothing_eps()}};
  } else if (const auto* k = std::get_if<Kde>(&model)) {
    j = {{"type", "kde"}, {"samples", k->samples()}, {"bandwidth", k->bandwidth()}};
  } else {
    const Gmm& g = std::get<Gmm>(model);
    j = {{"type", "gmm"},
         {"weights", g.weights()},
         {"means", g.means()},
         {"variances", g.variances()}};
  }
  return j.dump();
}

DensityModel model_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    const std::string type = j.at("type").get<std::string>();
    if (type == "histogram")
      return Histogram(j.at("edges").get<std::vector<double>>(),
                       j.at("masses").get<std::vector<double>>(),
                       j.at("smoothing_eps").get<double>());
    if (type == "kde")
      return Kde(j.at("samples").get<std::vector<double>>(), j.at("bandwidth").get<double>());
    if (type == "gmm")
      return Gmm(j.at("weights").get<std::vector<double>>(), j.at("means").get<std::vector<double>>(),
                 j.at("variances").get<std::vector<double>>());
    throw InvalidInput("unknown model type '" + type + "'");
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("bad model JSON: ") + e.what());
  }
}

std::string alignment_report_json(const std::vector<AlignmentReport>& reports) {
  json pieces = json::array();
  for (const AlignmentReport& r : reports) {
    json performers = json::array();
    for (const PerformerAlignmentStats& s : r.performers)
      performers.push_back({{"performer", s.performer_id},
                            {"pairs", s.pairs},
                            {"substitutions", s.substitutions},
                            {"insertions", s.insertions},
                            {"deletions", s.deletions}});
    pieces.push_back({{"reference", r.reference_id},
                      {"reference_notes", r.reference_notes},
                      {"performers", performers},
                      {"dropped_positions", r.dropped_positions}});
  }
  return json{{"pieces", pieces}}.dump(2) + "\n";
}

std::string report_json(const EvaluationReport& report) {
  json folds = json::array();
  for (const auto& [b, e] : report.folds.ranges) folds.push_back({b, e});
  json trials = json::array();
  for (const Trial& t : report.trials) {
    json entry = {{"true", report.performer_ids[t.performer]}, {"group", t.group}};
    if (t.predicted) {
      entry["predicted"] = report.performer_ids[*t.predicted];
      json kl = json::object();
      for (std::size_t c = 0; c < t.kl.size(); ++c) {
        json per_feature = json::object();
        for (std::size_t f = 0; f < report.config.features.size(); ++f)
          per_feature[std::string(feature_name(report.config.features[f]))] = t.kl[c][f];
        per_feature["fused"] = t.fused[c];
        kl[report.performer_ids[c]] = per_feature;
      }
      entry["kl"] = kl;
    } else {
      entry["predicted"] = nullptr;
    }
    trials.push_back(entry);
  }
  const Metrics& m = report.metrics;
  json per_class = json::array();
  for (std::size_t c = 0; c < report.performer_ids.size(); ++c)
    per_class.push_back({{"performer", report.performer_ids[c]},
                         {"precision", m.precision[c]},
                         {"recall", m.recall[c]},
                         {"f_score", m.f_score[c]}});
  const json out = {
      {"config", config_json(report.config)},
      {"performers", report.performer_ids},
      {"folds", folds},
      {"confusion", report.confusion},
      {"normalized_confusion", report.normalized_confusion()},
      {"metrics",
       {{"macro_precision", m.macro_precision},
        {"macro_recall", m.macro_recall},
        {"macro_f_score", m.macro_f},
        {"per_class", per_class}}},
      {"trials", trials},
      {"warnings", report.warnings}};
  return out.dump(2) + "\n";
}

std::string confusion_csv(const EvaluationReport& report) {
  std::string out = "true\\predicted";
  for (const std::string& id : report.performer_ids) out += "," + id;
  out += '\n';
  for (std::size_t r = 0; r < report.confusion.size(); ++r) {
    out += report.performer_ids[r];
    for (std::size_t v : report.confusion[r]) out += "," + std::to_string(v);
    out += '\n';
  }
  return out;
}

std::string normalized_confusion_csv(const EvaluationReport& report) {
  std::string out = "true,predicted,value\n";
  const auto norm = report.normalized_confusion();
  for (std::size_t r = 0; r < norm.size(); ++r)
    for (std::size_t c = 0; c < norm[r].size(); ++c)
      out += report.performer_ids[r] + "," + report.performer_ids[c] + "," + fixed(norm[r][c]) + "\n";
  return out;
}

std::string metrics_csv(const EvaluationReport& report) {
  std::string out = "performer,precision,recall,f_score\n";
  const Metrics& m = report.metrics;
  for (std::size_t c = 0; c < report.performer_ids.size(); ++c)
    out += report.performer_ids[c] + "," + fixed(m.precision[c]) + "," + fixed(m.recall[c]) + "," +
           fixed(m.f_score[c]) + "\n";
  out += "macro," + fixed(m.macro_precision) + "," + fixed(m.macro_recall) + "," + fixed(m.macro_f) +
         "\n";
  return out;
}

std::string sweep_csv(const SweepResult& result, ModelFamily family) {
  std::string out = "Feature,Precision,Recall,F-score\n";
  char buf[64];
  for (const SweepRow& row : result.rows) {
    if (row.family != family) continue;
    std::snprintf(buf, sizeof buf, ",%.3f,%.3f,%.3f\n", row.precision, row.recall, row.f_score);
    out += feature_set_label(row.features) + buf;
  }
  return out;
}

}  // namespace perfid
