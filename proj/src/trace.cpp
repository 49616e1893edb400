#include "tokenfuse/trace.hpp"

#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "tokenfuse/errors.hpp"
#include "tokenfuse/floatfmt.hpp"

namespace tokenfuse {

using json = nlohmann::json;

namespace {

void append_float_array(std::string& line, const std::vector<double>& values) {
  line += '[';
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i != 0) {
      line += ',';
    }
    line += format_double17(values[i]);
  }
  line += ']';
}

std::vector<double> parse_float_array(const json& arr, const char* what) {
  if (!arr.is_array()) {
    throw ProtocolError(std::string(what) + " is not an array");
  }
  std::vector<double> out;
  out.reserve(arr.size());
  for (const json& v : arr) {
    if (v.is_number()) {
      out.push_back(v.get<double>());
    } else if (v.is_string()) {
      out.push_back(parse_double17(v.get<std::string>()));
    } else {
      throw ProtocolError(std::string(what) + " element is not numeric");
    }
  }
  return out;
}

}  // namespace

const LogitPair& Trace::record(int step, int model) const {
  if (step < 0 || step >= num_steps()) {
    throw TraceExhausted("trace has " + std::to_string(num_steps()) +
                         " steps, step " + std::to_string(step) + " requested");
  }
  if (model < 0 || model >= num_models) {
    throw ProtocolError("trace has " + std::to_string(num_models) +
                        " models, model " + std::to_string(model) + " requested");
  }
  return steps[static_cast<std::size_t>(step)][static_cast<std::size_t>(model)];
}

TraceWriter::TraceWriter(const std::string& path, const Vocabulary& vocab,
                         int num_models, double alpha)
    : out_(path, std::ios::binary | std::ios::trunc),
      vocab_size_(vocab.size()),
      num_models_(num_models) {
  if (!out_) {
    throw InvalidConfig("cannot open trace file for writing: " + path);
  }
  vocab.validate();
  if (num_models < 1) {
    throw InvalidConfig("trace needs at least one model");
  }

  // Header line. Hand-framed so alpha keeps the 17-digit convention; token
  // strings are escaped through the JSON library.
  std::string line = "{\"version\":" + std::to_string(kTraceVersion) + ",\"vocab\":[";
  for (std::size_t i = 0; i < vocab.tokens.size(); ++i) {
    if (i != 0) {
      line += ',';
    }
    line += json(vocab.tokens[i]).dump();
  }
  line += "],\"fingerprint\":\"" + vocab.fingerprint_hex() + "\"";
  line += ",\"num_models\":" + std::to_string(num_models);
  line += ",\"alpha\":" + format_double17(alpha) + "}\n";
  out_ << line;
}

void TraceWriter::add(int step, int model, const LogitPair& pair) {
  if (model < 0 || model >= num_models_) {
    throw ProtocolError("model index out of range: " + std::to_string(model));
  }
  if (pair.original.size() != vocab_size_ || pair.perturbed.size() != vocab_size_) {
    throw LengthMismatch("trace record length does not match vocabulary");
  }
  std::string line = "{\"step\":" + std::to_string(step) +
                     ",\"model\":" + std::to_string(model) + ",\"original\":";
  append_float_array(line, pair.original.scores);
  line += ",\"perturbed\":";
  append_float_array(line, pair.perturbed.scores);
  line += "}\n";
  out_ << line;
}

void TraceWriter::flush() { out_.flush(); }

Trace read_trace(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw InvalidConfig("cannot open trace file: " + path);
  }

  std::string line;
  if (!std::getline(in, line)) {
    throw ProtocolError("trace file is empty: " + path);
  }

  Trace trace;
  json header = json::parse(line);
  if (!header.contains("version") || header["version"].get<int>() != kTraceVersion) {
    throw ProtocolVersionMismatch("trace header version is not " +
                                  std::to_string(kTraceVersion));
  }
  trace.vocab.tokens = header.at("vocab").get<std::vector<std::string>>();
  trace.vocab.validate();
  const std::string fp = header.at("fingerprint").get<std::string>();
  if (fp != trace.vocab.fingerprint_hex()) {
    throw VocabularyMismatch("trace fingerprint " + fp +
                             " does not match its vocabulary (" +
                             trace.vocab.fingerprint_hex() + ")");
  }
  trace.num_models = header.at("num_models").get<int>();
  if (trace.num_models < 1) {
    throw ProtocolError("trace header num_models < 1");
  }
  const json& alpha = header.at("alpha");
  trace.alpha = alpha.is_string() ? parse_double17(alpha.get<std::string>())
                                  : alpha.get<double>();

  std::vector<std::vector<bool>> seen;
  while (std::getline(in, line)) {
    if (line.empty()) {
      continue;
    }
    json rec = json::parse(line);
    const int step = rec.at("step").get<int>();
    const int model = rec.at("model").get<int>();
    if (step < 0 || model < 0 || model >= trace.num_models) {
      throw ProtocolError("trace record indices out of range");
    }
    if (step >= static_cast<int>(trace.steps.size())) {
      trace.steps.resize(static_cast<std::size_t>(step) + 1,
                         std::vector<LogitPair>(static_cast<std::size_t>(trace.num_models)));
      seen.resize(static_cast<std::size_t>(step) + 1,
                  std::vector<bool>(static_cast<std::size_t>(trace.num_models), false));
    }
    LogitPair pair;
    pair.original.scores = parse_float_array(rec.at("original"), "original");
    pair.perturbed.scores = parse_float_array(rec.at("perturbed"), "perturbed");
    if (pair.original.size() != trace.vocab.size() ||
        pair.perturbed.size() != trace.vocab.size()) {
      throw LengthMismatch("trace record length does not match vocabulary");
    }
    if (seen[static_cast<std::size_t>(step)][static_cast<std::size_t>(model)]) {
      throw ProtocolError("duplicate trace record for step " + std::to_string(step) +
                          " model " + std::to_string(model));
    }
    seen[static_cast<std::size_t>(step)][static_cast<std::size_t>(model)] = true;
    trace.steps[static_cast<std::size_t>(step)][static_cast<std::size_t>(model)] =
        std::move(pair);
  }

  for (std::size_t t = 0; t < seen.size(); ++t) {
    for (std::size_t m = 0; m < seen[t].size(); ++m) {
      if (!seen[t][m]) {
        throw ProtocolError("trace is missing step " + std::to_string(t) +
                            " model " + std::to_string(m));
      }
    }
  }
  return trace;
}

void write_trace(const std::string& path, const Trace& trace) {
  TraceWriter writer(path, trace.vocab, trace.num_models, trace.alpha);
  for (int t = 0; t < trace.num_steps(); ++t) {
    for (int m = 0; m < trace.num_models; ++m) {
      writer.add(t, m, trace.record(t, m));
    }
  }
  writer.flush();
}

}  // namespace tokenfuse
