#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "tokenfuse/numerics.hpp"
#include "tokenfuse/vocabulary.hpp"

namespace tokenfuse {

inline constexpr int kTraceVersion = 1;

// A recorded per-step, per-model sequence of logit pairs, enabling bit-exact
// offline replay. On disk: JSON Lines, one header line then one line per
// (step, model), every float printed with 17 significant digits.
struct Trace {
  Vocabulary vocab;
  int num_models = 0;
  double alpha = 1.0;
  // steps[t][m] holds model m's pair at step t.
  std::vector<std::vector<LogitPair>> steps;

  int num_steps() const { return static_cast<int>(steps.size()); }
  const LogitPair& record(int step, int model) const;
};

// Streams trace lines to disk; the header goes out on construction.
class TraceWriter {
 public:
  TraceWriter(const std::string& path, const Vocabulary& vocab, int num_models,
              double alpha);

  void add(int step, int model, const LogitPair& pair);
  void flush();

 private:
  std::ofstream out_;
  std::size_t vocab_size_;
  int num_models_;
};

Trace read_trace(const std::string& path);
void write_trace(const std::string& path, const Trace& trace);

}  // namespace tokenfuse
