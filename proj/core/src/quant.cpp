#include "qnnv/quant.hpp"

#include <sstream>
#include <vector>

namespace qnnv {

QuantConfig::QuantConfig(Signedness signedness, int total_bits, int frac_bits)
    : signedness_(signedness), total_bits_(total_bits), frac_bits_(frac_bits) {
  if (total_bits < 1 || total_bits > 62) {
    throw std::invalid_argument("quantization config: total bits must be in [1, 62]");
  }
  if (frac_bits < 0 || frac_bits > total_bits) {
    throw std::invalid_argument("quantization config: fractional bits must be in [0, Q]");
  }
}

int64_t QuantConfig::lb() const {
  return is_signed() ? -(int64_t{1} << (total_bits_ - 1)) : 0;
}

int64_t QuantConfig::ub() const {
  return is_signed() ? (int64_t{1} << (total_bits_ - 1)) - 1 : (int64_t{1} << total_bits_) - 1;
}

std::string QuantConfig::to_string() const {
  std::ostringstream out;
  out << '<' << (is_signed() ? "+-" : "+") << ',' << total_bits_ << ',' << frac_bits_ << '>';
  return out.str();
}

QuantConfig QuantConfig::parse(const std::string& text) {
  std::string body = text;
  if (!body.empty() && body.front() == '<' && body.back() == '>') body = body.substr(1, body.size() - 2);
  std::vector<std::string> parts;
  std::stringstream ss(body);
  for (std::string item; std::getline(ss, item, ',');) parts.push_back(item);
  if (parts.size() != 3) throw std::invalid_argument("quantization config must be 'sign,Q,F': " + text);

  Signedness sign;
  if (parts[0] == "+-" || parts[0] == "±" || parts[0] == "signed") {
    sign = Signedness::kSigned;
  } else if (parts[0] == "+" || parts[0] == "unsigned") {
    sign = Signedness::kUnsigned;
  } else {
    throw std::invalid_argument("unknown signedness '" + parts[0] + "'");
  }
  int q = 0;
  int f = 0;
  try {
    q = std::stoi(parts[1]);
    f = std::stoi(parts[2]);
  } catch (const std::logic_error&) {
    throw std::invalid_argument("quantization config must be 'sign,Q,F': " + text);
  }
  return QuantConfig(sign, q, f);
}

Integer round_half_up(const Rational& q) {
  return floor_of(q + Rational(1, 2));
}

QuantizedValue quantize_value_checked(const Rational& u, const QuantConfig& cfg) {
  Integer rounded = round_half_up(u * pow2(cfg.frac_bits()));
  Integer lo(static_cast<long>(cfg.lb()));
  Integer hi(static_cast<long>(cfg.ub()));
  if (rounded < lo) return {cfg.lb(), true};
  if (rounded > hi) return {cfg.ub(), true};
  return {to_int64(rounded), false};
}

int64_t quantize_value(const Rational& u, const QuantConfig& cfg) {
  return quantize_value_checked(u, cfg).value;
}

}  // namespace qnnv
