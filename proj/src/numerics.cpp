#include "tokenfuse/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "tokenfuse/errors.hpp"

namespace tokenfuse {

namespace {

void require_finite(const LogitVector& v, const char* what) {
  for (double x : v.scores) {
    if (!std::isfinite(x)) {
      throw NonFiniteInput(std::string(what) + " contains NaN or infinity");
    }
  }
}

}  // namespace

void validate_probs(const ProbVector& p) {
  double sum = 0.0;
  for (double x : p.probs) {
    if (!std::isfinite(x)) {
      throw InvalidDistribution("probability is not finite");
    }
    if (x < 0.0) {
      throw InvalidDistribution("negative probability");
    }
    if (x > 1.0 + kProbSumTolerance) {
      throw InvalidDistribution("probability exceeds 1");
    }
    sum += x;
  }
  if (std::abs(sum - 1.0) > kProbSumTolerance) {
    throw InvalidDistribution("probabilities sum to " + std::to_string(sum));
  }
}

ProbVector softmax(const LogitVector& logits) {
  if (logits.scores.empty()) {
    throw EmptyVector("softmax of empty vector");
  }
  require_finite(logits, "softmax input");

  const double max = *std::max_element(logits.scores.begin(), logits.scores.end());
  ProbVector out;
  out.probs.resize(logits.scores.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.scores.size(); ++i) {
    out.probs[i] = std::exp(logits.scores[i] - max);
    sum += out.probs[i];
  }
  for (double& p : out.probs) {
    p /= sum;
  }
  return out;
}

double entropy(const ProbVector& p) {
  validate_probs(p);
  double h = 0.0;
  for (double x : p.probs) {
    if (x < kMinProb) {
      continue;
    }
    h -= x * std::log(x);
  }
  return h;
}

ProbVector contrastive_probs(const LogitPair& pair, double alpha) {
  if (!(alpha >= 0.0)) {
    throw NegativeAlpha("alpha must be >= 0, got " + std::to_string(alpha));
  }
  if (pair.original.size() != pair.perturbed.size()) {
    throw LengthMismatch("logit pair channels differ in length");
  }
  require_finite(pair.original, "original logits");
  require_finite(pair.perturbed, "perturbed logits");

  LogitVector combo;
  combo.scores.resize(pair.original.size());
  for (std::size_t i = 0; i < combo.scores.size(); ++i) {
    combo.scores[i] =
        (1.0 + alpha) * pair.original.scores[i] - alpha * pair.perturbed.scores[i];
  }
  require_finite(combo, "contrastive combination");
  return softmax(combo);
}

}  // namespace tokenfuse
