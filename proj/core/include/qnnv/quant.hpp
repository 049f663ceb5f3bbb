#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include "qnnv/rational.hpp"

namespace qnnv {

enum class Signedness { kUnsigned, kSigned };

// Fixed-point quantization scheme <signedness, total bits, fractional bits>.
// Values on the grid are integers in [lb(), ub()] that stand for
// value / 2^frac_bits.
class QuantConfig {
 public:
  QuantConfig() = default;
  // Throws std::invalid_argument unless 1 <= total_bits <= 62 and
  // frac_bits <= total_bits.
  QuantConfig(Signedness signedness, int total_bits, int frac_bits);

  Signedness signedness() const { return signedness_; }
  bool is_signed() const { return signedness_ == Signedness::kSigned; }
  int total_bits() const { return total_bits_; }
  int frac_bits() const { return frac_bits_; }

  int64_t lb() const;
  int64_t ub() const;
  bool contains(int64_t v) const { return v >= lb() && v <= ub(); }

  // "<+-,6,4>" style rendering.
  std::string to_string() const;
  // Accepts "+-,6,4", "+,8,8", "signed,6,4", "unsigned,6,4".
  static QuantConfig parse(const std::string& text);

  friend bool operator==(const QuantConfig&, const QuantConfig&) = default;

 private:
  Signedness signedness_ = Signedness::kUnsigned;
  int total_bits_ = 1;
  int frac_bits_ = 0;
};

// Saturates u into [lo, hi]. Throws std::invalid_argument if lo > hi.
template <typename T>
T clamp(const T& u, const T& lo, const T& hi) {
  if (hi < lo) throw std::invalid_argument("clamp: lower bound exceeds upper bound");
  if (u < lo) return lo;
  if (hi < u) return hi;
  return u;
}

// The unique integer t with q in [t - 1/2, t + 1/2), i.e. floor(q + 1/2).
// This is the only rounding mode used anywhere in the library.
Integer round_half_up(const Rational& q);

// clamp(round_half_up(2^F * u), lb, ub).
int64_t quantize_value(const Rational& u, const QuantConfig& cfg);

// Like quantize_value but reports whether the rounded value had to be clamped.
struct QuantizedValue {
  int64_t value;
  bool saturated;
};
QuantizedValue quantize_value_checked(const Rational& u, const QuantConfig& cfg);

}  // namespace qnnv
