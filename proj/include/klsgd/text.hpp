#pragma once

#include <string>

namespace klsgd {

// Shortest decimal that round-trips to the same double.
std::string shortest(double value);

// 17 significant digits, the fixed rendering used in CSV output.
std::string full_precision(double value);

}  // namespace klsgd
