#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace tokenfuse {

// The ordered token list shared by every provider in a session. The
// fingerprint is a deterministic 64-bit FNV-1a hash of the ordered list
// (length-prefixed per token, so it is injective on token boundaries) and
// is what session validation and the wire protocol compare.
struct Vocabulary {
  std::vector<std::string> tokens;

  std::size_t size() const { return tokens.size(); }
  uint64_t fingerprint() const;
  std::string fingerprint_hex() const;

  // Unique, non-empty token strings required.
  void validate() const;
};

std::string fingerprint_to_hex(uint64_t fp);

}  // namespace tokenfuse
