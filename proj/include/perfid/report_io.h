#pragma once

// JSON and CSV serialization of models and reports.

#include <string>
#include <vector>

#include "perfid/alignment.h"
#include "perfid/density.h"
#include "perfid/evaluation.h"

namespace perfid {

/// {"type": "histogram", "edges": [...], "masses": [...], "smoothing_eps": e}
/// {"type": "kde", "samples": [...], "bandwidth": h}
/// {"type": "gmm", "weights": [...], "means": [...], "variances": [...]}
std::string model_to_json(const DensityModel& model);
DensityModel model_from_json(const std::string& text);

/// Per performer pair/insertion/deletion counts plus dropped positions.
std::string alignment_report_json(const std::vector<AlignmentReport>& reports);

/// Full report: configuration, folds, confusion, metrics and trial log.
std::string report_json(const EvaluationReport& report);

/// Confusion counts with a `true\predicted` header row of performer ids.
std::string confusion_csv(const EvaluationReport& report);

/// Row-normalized confusion in long form: `true,predicted,value`.
std::string normalized_confusion_csv(const EvaluationReport& report);

/// `performer,precision,recall,f_score` per class plus a `macro` row.
std::string metrics_csv(const EvaluationReport& report);

/// `Feature,Precision,Recall,F-score` for the rows of one model family.
std::string sweep_csv(const SweepResult& result, ModelFamily family);

}  // namespace perfid
