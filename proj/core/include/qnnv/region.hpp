#pragma once

#include <cstdint>
#include <string>

#include "qnnv/network.hpp"

namespace qnnv {

enum class Norm { kL0, kL1, kL2, kLinf };

std::string to_string(Norm p);
// "0", "1", "2", "inf" (also "linf", "l0", ...). Throws std::invalid_argument.
Norm parse_norm(const std::string& text);

// All grid points within L_p distance `radius` of `center`.
struct InputRegionSpec {
  IntVector center;
  int64_t radius = 0;
  Norm norm = Norm::kLinf;
};

// Checks radius >= 0 and that the center lies on the input grid.
void validate_region(const InputRegionSpec& spec, const QuantConfig& cfg_in);

// ||x - center||_p <= radius; for L2 the squared form is compared exactly.
bool within_radius(const IntVector& center, const IntVector& x, int64_t radius, Norm p);

bool in_region(const InputRegionSpec& spec, const IntVector& x, const QuantConfig& cfg_in);

// Smallest radius whose region already covers the whole input grid.
int64_t covering_radius(const IntVector& center, Norm p, const QuantConfig& cfg_in);

}  // namespace qnnv
