#include "tokenfuse/report.hpp"

#include <cstdio>

#include "tokenfuse/errors.hpp"
#include "tokenfuse/floatfmt.hpp"

namespace tokenfuse {

namespace {

std::string fixed6(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

}  // namespace

std::string RunReport::to_json() const {
  std::string j = "{\"mode\":\"" + mode + "\"";
  j += ",\"synthetic\":" + std::string(synthetic ? "true" : "false");
  if (accuracy.has_value()) {
    j += ",\"accuracy\":" + format_double17(*accuracy);
    j += ",\"single_model_accuracy\":[";
    for (std::size_t i = 0; i < single_model_accuracy.size(); ++i) {
      if (i != 0) j += ',';
      j += format_double17(single_model_accuracy[i]);
    }
    j += ']';
  }
  j += ",\"mean_fused_entropy\":" + format_double17(mean_fused_entropy);
  j += ",\"mean_model_weights\":[";
  for (std::size_t i = 0; i < mean_model_weights.size(); ++i) {
    if (i != 0) j += ',';
    j += format_double17(mean_model_weights[i]);
  }
  j += "],\"total_entropy_evaluations\":" + std::to_string(total_entropy_evaluations);
  j += ",\"total_steps\":" + std::to_string(total_steps);
  j += ",\"wall_time_seconds\":" + format_double17(wall_time_seconds);
  j += "}";
  return j;
}

std::string RunReport::to_table() const {
  std::string t;
  auto row = [&t](const std::string& k, const std::string& v) {
    t += k;
    if (k.size() < 28) {
      t += std::string(28 - k.size(), ' ');
    } else {
      t += ' ';
    }
    t += v;
    t += '\n';
  };
  row("mode", mode + (synthetic ? " (synthetic)" : ""));
  if (accuracy.has_value()) {
    row("ensemble accuracy", fixed6(*accuracy));
    for (std::size_t i = 0; i < single_model_accuracy.size(); ++i) {
      row("model " + std::to_string(i) + " accuracy", fixed6(single_model_accuracy[i]));
    }
  }
  row("mean fused entropy", fixed6(mean_fused_entropy));
  for (std::size_t i = 0; i < mean_model_weights.size(); ++i) {
    row("model " + std::to_string(i) + " mean weight", fixed6(mean_model_weights[i]));
  }
  row("total entropy evaluations", std::to_string(total_entropy_evaluations));
  row("total steps", std::to_string(total_steps));
  row("wall time (s)", fixed6(wall_time_seconds));
  return t;
}

ReportBuilder::ReportBuilder(std::string mode, bool synthetic, int num_models) {
  if (num_models < 1) {
    throw InvalidSpec("report needs at least one model");
  }
  report_.mode = std::move(mode);
  report_.synthetic = synthetic;
  single_correct_.assign(static_cast<std::size_t>(num_models), 0);
  weight_sums_.assign(static_cast<std::size_t>(num_models), 0.0);
}

void ReportBuilder::add(const GenerationResult& result) {
  for (const StepRecord& rec : result.records) {
    fused_entropy_sum_ += rec.fused_entropy;
    for (std::size_t m = 0; m < rec.ledger.weights.size() && m < weight_sums_.size(); ++m) {
      weight_sums_[m] += rec.ledger.weights[m];
    }
  }
  report_.total_steps += result.totals.steps;
  report_.total_entropy_evaluations += result.totals.entropy_evaluations;
}

void ReportBuilder::add_accuracy_sample(bool ensemble_correct,
                                        const std::vector<bool>& single_correct) {
  ++accuracy_samples_;
  if (ensemble_correct) {
    ++ensemble_correct_;
  }
  for (std::size_t m = 0; m < single_correct.size() && m < single_correct_.size(); ++m) {
    if (single_correct[m]) {
      ++single_correct_[m];
    }
  }
}

RunReport ReportBuilder::finish(double wall_time_seconds) const {
  RunReport out = report_;
  out.wall_time_seconds = wall_time_seconds;
  if (out.total_steps > 0) {
    out.mean_fused_entropy = fused_entropy_sum_ / static_cast<double>(out.total_steps);
    out.mean_model_weights.resize(weight_sums_.size());
    for (std::size_t m = 0; m < weight_sums_.size(); ++m) {
      out.mean_model_weights[m] = weight_sums_[m] / static_cast<double>(out.total_steps);
    }
  }
  if (accuracy_samples_ > 0) {
    out.accuracy = static_cast<double>(ensemble_correct_) /
                   static_cast<double>(accuracy_samples_);
    out.single_model_accuracy.resize(single_correct_.size());
    for (std::size_t m = 0; m < single_correct_.size(); ++m) {
      out.single_model_accuracy[m] = static_cast<double>(single_correct_[m]) /
                                     static_cast<double>(accuracy_samples_);
    }
  }
  return out;
}

}  // namespace tokenfuse
