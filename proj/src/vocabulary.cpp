#include "tokenfuse/vocabulary.hpp"

#include <cstdio>
#include <unordered_set>

#include "tokenfuse/errors.hpp"

namespace tokenfuse {

namespace {

constexpr uint64_t kFnvOffset = 14695981039346656037ull;
constexpr uint64_t kFnvPrime = 1099511628211ull;

uint64_t fnv1a_bytes(uint64_t h, const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= kFnvPrime;
  }
  return h;
}

}  // namespace

uint64_t Vocabulary::fingerprint() const {
  uint64_t h = kFnvOffset;
  for (const std::string& t : tokens) {
    const uint64_t len = t.size();
    unsigned char len_le[8];
    for (int i = 0; i < 8; ++i) {
      len_le[i] = static_cast<unsigned char>((len >> (8 * i)) & 0xFF);
    }
    h = fnv1a_bytes(h, len_le, sizeof(len_le));
    h = fnv1a_bytes(h, t.data(), t.size());
  }
  return h;
}

std::string Vocabulary::fingerprint_hex() const {
  return fingerprint_to_hex(fingerprint());
}

void Vocabulary::validate() const {
  if (tokens.empty()) {
    throw EmptyInput("vocabulary has no tokens");
  }
  std::unordered_set<std::string> seen;
  for (const std::string& t : tokens) {
    if (!seen.insert(t).second) {
      throw InvalidSpec("duplicate vocabulary token: '" + t + "'");
    }
  }
}

std::string fingerprint_to_hex(uint64_t fp) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fp));
  return buf;
}

}  // namespace tokenfuse
