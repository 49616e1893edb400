#pragma once

#include <vector>

namespace tokenfuse {

// Raw model scores over the shared vocabulary. All engine math runs in
// binary64; providers that produce narrower floats widen on ingestion.
struct LogitVector {
  std::vector<double> scores;

  std::size_t size() const { return scores.size(); }
};

// A normalized distribution over the shared vocabulary: every element in
// [0, 1], elements summing to 1 within 1e-9. The object all fusion math
// operates on.
struct ProbVector {
  std::vector<double> probs;

  std::size_t size() const { return probs.size(); }
};

// A provider's scores for the original and perturbed inputs at one step.
// Both vectors always have identical length.
struct LogitPair {
  LogitVector original;
  LogitVector perturbed;
};

// Tolerance on the sum-to-one invariant of ProbVector.
inline constexpr double kProbSumTolerance = 1e-9;

// Probabilities below this are treated as exact zeros in entropy sums to
// avoid log underflow.
inline constexpr double kMinProb = 1e-300;

// Throws InvalidDistribution unless p satisfies the ProbVector invariants.
void validate_probs(const ProbVector& p);

// Numerically stable softmax (max subtraction before exponentiation).
// Argmax of the output equals argmax of the input, ties preserved.
// Throws EmptyVector / NonFiniteInput.
ProbVector softmax(const LogitVector& logits);

// Shannon entropy in nats, with the 0*log 0 = 0 convention. Validates its
// input; result lies in [0, ln(size)].
double entropy(const ProbVector& p);

// softmax((1+alpha)*original - alpha*perturbed). With alpha = 0 this is
// exactly softmax(original); with perturbed == original it is
// alpha-invariant. Throws NegativeAlpha / LengthMismatch / NonFiniteInput.
ProbVector contrastive_probs(const LogitPair& pair, double alpha);

}  // namespace tokenfuse
