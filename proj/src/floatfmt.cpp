#include "tokenfuse/floatfmt.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>

#include "tokenfuse/errors.hpp"

namespace tokenfuse {

std::string format_double17(double v) {
  if (!std::isfinite(v)) {
    throw NonFiniteInput("cannot serialize non-finite value");
  }
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double parse_double17(const std::string& text) {
  if (text.empty()) {
    throw ProtocolError("empty numeric field");
  }
  char* end = nullptr;
  double v = std::strtod(text.c_str(), &end);
  if (end != text.c_str() + text.size()) {
    throw ProtocolError("malformed numeric field: '" + text + "'");
  }
  return v;
}

}  // namespace tokenfuse
