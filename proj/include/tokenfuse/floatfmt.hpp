#pragma once

#include <string>

namespace tokenfuse {

// Formats a double with 17 significant digits (%.17g). 17 digits uniquely
// identify an IEEE-754 binary64 value, so text produced here parses back to
// the exact same bits. Throws NonFiniteInput for NaN/Inf; the file and wire
// formats never carry them.
std::string format_double17(double v);

// Inverse of format_double17 (plain strtod). Throws ProtocolError when the
// text is not a full decimal number.
double parse_double17(const std::string& text);

}  // namespace tokenfuse
