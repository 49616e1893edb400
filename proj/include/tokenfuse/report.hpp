#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tokenfuse/decoder.hpp"

namespace tokenfuse {

// Aggregated outcome of one harness run. Accuracy fields are present only
// for benchmark runs, which carry ground truth; benchmark numbers are
// always labeled synthetic.
struct RunReport {
  std::string mode;  // "benchmark", "replay", "providers"
  bool synthetic = false;
  std::optional<double> accuracy;
  std::vector<double> single_model_accuracy;
  double mean_fused_entropy = 0.0;
  std::vector<double> mean_model_weights;
  long long total_entropy_evaluations = 0;
  long long total_steps = 0;
  double wall_time_seconds = 0.0;

  std::string to_json() const;
  std::string to_table() const;
};

// Folds one generation into running report sums (mean fields are finalized
// by finish()).
class ReportBuilder {
 public:
  explicit ReportBuilder(std::string mode, bool synthetic, int num_models);

  void add(const GenerationResult& result);
  void add_accuracy_sample(bool ensemble_correct,
                           const std::vector<bool>& single_correct);
  RunReport finish(double wall_time_seconds) const;

 private:
  RunReport report_;
  long long accuracy_samples_ = 0;
  long long ensemble_correct_ = 0;
  std::vector<long long> single_correct_;
  double fused_entropy_sum_ = 0.0;
  std::vector<double> weight_sums_;
};

}  // namespace tokenfuse
