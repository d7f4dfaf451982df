#include <gtest/gtest.h>

#include "json.hpp"
#include "perfid/errors.h"
#include "perfid/report_io.h"
#include "perfid/synth.h"

using namespace perfid;
using nlohmann::json;

namespace {

EvaluationReport hand_report() {
  EvaluationReport r;
  r.performer_ids = {"amy", "bob"};
  r.folds = logo_split(10, 2);
  r.confusion = {{2, 0}, {1, 1}};
  r.metrics = metrics(r.confusion);
  Trial t;
  t.performer = 1;
  t.group = 0;
  t.predicted = 0;
  t.kl = {{0.1, 0.2, 0.3}, {0.4, 0.5, 0.6}};
  t.fused = {0.6, 1.5};
  r.trials.push_back(t);
  Trial skipped;
  skipped.performer = 0;
  skipped.group = 1;
  r.trials.push_back(skipped);
  r.warnings.push_back("amy group 1: no test values");
  return r;
}

}  // namespace

TEST(ModelJson, RoundTripsEveryFamily) {
  const std::vector<DensityModel> models{
      Histogram({0.0, 0.5, 2.0}, {0.25, 0.75}, 1e-9),
      Kde({-1.0, 0.125, 3.0 / 7.0}, 0.3),
      Gmm({0.2, 0.8}, {-1.0, 1.0 / 3.0}, {0.5, 2.0}),
  };
  for (const DensityModel& m : models) {
    const DensityModel back = model_from_json(model_to_json(m));
    ASSERT_EQ(back.index(), m.index());
    for (double x : {-2.0, -0.3, 0.1, 0.7, 1.9})
      EXPECT_EQ(pdf(back, x), pdf(m, x)) << model_to_json(m);
  }
  EXPECT_EQ(json::parse(model_to_json(models[2]))["type"], "gmm");
}

TEST(ModelJson, RejectsMalformedInput) {
  EXPECT_THROW(model_from_json("not json"), InvalidInput);
  EXPECT_THROW(model_from_json(R"({"type":"spline"})"), InvalidInput);
  EXPECT_THROW(model_from_json(R"({"type":"kde","samples":[1.0]})"), InvalidInput);
  EXPECT_THROW(model_from_json(R"({"type":"kde","samples":[],"bandwidth":1.0})"), InvalidInput);
  EXPECT_THROW(model_from_json(R"({"type":"gmm","weights":[0.5],"means":[0],"variances":[1]})"),
               InvalidInput);
}

TEST(ReportJson, CarriesConfigFoldsConfusionAndTrials) {
  const json j = json::parse(report_json(hand_report()));
  EXPECT_EQ(j["performers"], json({"amy", "bob"}));
  EXPECT_EQ(j["folds"], json::parse("[[0,5],[5,10]]"));
  EXPECT_EQ(j["confusion"], json::parse("[[2,0],[1,1]]"));
  EXPECT_EQ(j["normalized_confusion"][1][0], 0.5);
  EXPECT_EQ(j["config"]["model"], "histogram");
  EXPECT_EQ(j["config"]["features"], json({"IOI", "DL", "ND"}));
  EXPECT_EQ(j["config"]["bandwidths"]["DL"], 1.5);
  EXPECT_FALSE(j["config"].contains("jobs"));
  EXPECT_NEAR(j["metrics"]["macro_precision"].get<double>(), (2.0 / 3.0 + 1.0) / 2.0, 1e-15);
  EXPECT_EQ(j["metrics"]["per_class"].size(), 2u);

  const json& t = j["trials"][0];
  EXPECT_EQ(t["true"], "bob");
  EXPECT_EQ(t["predicted"], "amy");
  EXPECT_EQ(t["kl"]["bob"]["DL"], 0.5);
  EXPECT_EQ(t["kl"]["amy"]["fused"], 0.6);
  EXPECT_TRUE(j["trials"][1]["predicted"].is_null());
  EXPECT_EQ(j["warnings"].size(), 1u);
}

TEST(ReportJson, IndependentOfJobs) {
  ExperimentConfig a;
  a.jobs = 1;
  ExperimentConfig b = a;
  b.jobs = 4;
  const auto profiles = separated_profiles(3, 1.0, 1);
  const std::string ra = report_json(benchmark(600, profiles, a).report);
  const std::string rb = report_json(benchmark(600, profiles, b).report);
  EXPECT_EQ(ra, rb);
}

TEST(ReportCsv, Layouts) {
  const EvaluationReport r = hand_report();
  EXPECT_EQ(confusion_csv(r), "true\\predicted,amy,bob\namy,2,0\nbob,1,1\n");
  EXPECT_EQ(normalized_confusion_csv(r),
            "true,predicted,value\namy,amy,1.000000\namy,bob,0.000000\nbob,amy,0.500000\n"
            "bob,bob,0.500000\n");
  const std::string m = metrics_csv(r);
  EXPECT_EQ(m.substr(0, m.find('\n')), "performer,precision,recall,f_score");
  EXPECT_NE(m.find("\nmacro,"), std::string::npos);
  EXPECT_EQ(m.find("amy,0.666667,1.000000,0.800000\n"), m.find('\n') + 1);
}

TEST(ReportCsv, SweepTableColumns) {
  SweepResult s;
  s.rows.push_back({ModelFamily::kHistogram, {FeatureKind::kIOI, FeatureKind::kDL, FeatureKind::kND},
                    0.9034, 0.8751, 0.889});
  s.rows.push_back({ModelFamily::kKde, {FeatureKind::kOT, FeatureKind::kIOI}, 0.5, 0.5, 0.5});
  EXPECT_EQ(sweep_csv(s, ModelFamily::kHistogram),
            "Feature,Precision,Recall,F-score\nIOI+DL+ND,0.903,0.875,0.889\n");
  EXPECT_EQ(sweep_csv(s, ModelFamily::kGmm), "Feature,Precision,Recall,F-score\n");
}

TEST(AlignmentJson, ReportsCounts) {
  AlignmentReport r;
  r.reference_id = "ref";
  r.reference_notes = 4;
  r.performers.push_back({"ref", 4, 0, 0, 0});
  r.performers.push_back({"x", 3, 1, 1, 1});
  r.dropped_positions = {2};
  const json j = json::parse(alignment_report_json({r}));
  EXPECT_EQ(j["pieces"][0]["reference"], "ref");
  EXPECT_EQ(j["pieces"][0]["performers"][1]["insertions"], 1);
  EXPECT_EQ(j["pieces"][0]["dropped_positions"], json({2}));
}
