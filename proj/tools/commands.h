#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "perfid/evaluation.h"

namespace perfid::cli {

/// Everything a subcommand needs. Filled from defaults, then the JSON config
/// file, then command-line flags.
struct RunConfig {
  std::vector<std::filesystem::path> inputs;
  std::string reference;  // performer id, file path, or empty for median length
  ExperimentConfig experiment;
  bool sweep = false;
  std::filesystem::path out = "perfid_out";

  // synth only
  std::size_t performers = 9;
  std::size_t notes = 16980;
  double separation = 1.0;
};

/// Wrong or missing user input; reported with exit code 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void apply_config_file(const std::filesystem::path& path, RunConfig& config);

std::vector<FeatureKind> parse_feature_list(const std::string& text);
std::vector<double> parse_weight_list(const std::string& text);
/// "IOI=0.01,DL=1.5"
std::map<FeatureKind, double> parse_bandwidths(const std::string& text);

int cmd_align(const RunConfig& config);
int cmd_features(const RunConfig& config);
int cmd_evaluate(const RunConfig& config);
int cmd_synth(const RunConfig& config);

}  // namespace perfid::cli
