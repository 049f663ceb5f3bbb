#include "qnnv/region.hpp"

#include <algorithm>
#include <cmath>
#include <cctype>
#include <cstdlib>
#include <stdexcept>

namespace qnnv {

std::string to_string(Norm p) {
  switch (p) {
    case Norm::kL0: return "0";
    case Norm::kL1: return "1";
    case Norm::kL2: return "2";
    case Norm::kLinf: return "inf";
  }
  return "?";
}

Norm parse_norm(const std::string& text) {
  std::string t;
  for (char c : text) t.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (t.size() > 1 && t.front() == 'l') t.erase(t.begin());
  if (t == "0") return Norm::kL0;
  if (t == "1") return Norm::kL1;
  if (t == "2") return Norm::kL2;
  if (t == "inf" || t == "infty" || t == "infinity") return Norm::kLinf;
  throw std::invalid_argument("unsupported norm '" + text + "' (expected 0, 1, 2 or inf)");
}

void validate_region(const InputRegionSpec& spec, const QuantConfig& cfg_in) {
  if (spec.radius < 0) throw std::invalid_argument("radius must be non-negative");
  for (int64_t v : spec.center) {
    if (!cfg_in.contains(v)) throw std::invalid_argument("region center outside input grid");
  }
}

bool within_radius(const IntVector& center, const IntVector& x, int64_t radius, Norm p) {
  if (center.size() != x.size()) return false;
  switch (p) {
    case Norm::kL0: {
      int64_t count = 0;
      for (std::size_t i = 0; i < x.size(); ++i) count += x[i] != center[i];
      return count <= radius;
    }
    case Norm::kL1: {
      int64_t sum = 0;
      for (std::size_t i = 0; i < x.size(); ++i) sum += std::llabs(x[i] - center[i]);
      return sum <= radius;
    }
    case Norm::kL2: {
      Integer sum = 0;
      for (std::size_t i = 0; i < x.size(); ++i) {
        Integer d(static_cast<long>(x[i] - center[i]));
        sum += d * d;
      }
      Integer r(static_cast<long>(radius));
      return sum <= r * r;
    }
    case Norm::kLinf: {
      for (std::size_t i = 0; i < x.size(); ++i) {
        if (std::llabs(x[i] - center[i]) > radius) return false;
      }
      return true;
    }
  }
  return false;
}

bool in_region(const InputRegionSpec& spec, const IntVector& x, const QuantConfig& cfg_in) {
  if (x.size() != spec.center.size()) return false;
  for (int64_t v : x) {
    if (!cfg_in.contains(v)) return false;
  }
  return within_radius(spec.center, x, spec.radius, spec.norm);
}

int64_t covering_radius(const IntVector& center, Norm p, const QuantConfig& cfg_in) {
  int64_t max_dev = 0;
  int64_t sum_dev = 0;
  Integer sum_sq = 0;
  int64_t movable = 0;
  for (int64_t c : center) {
    int64_t dev = std::max(c - cfg_in.lb(), cfg_in.ub() - c);
    max_dev = std::max(max_dev, dev);
    sum_dev += dev;
    Integer d(static_cast<long>(dev));
    sum_sq += d * d;
    movable += dev > 0;
  }
  switch (p) {
    case Norm::kL0: return movable;
    case Norm::kL1: return sum_dev;
    case Norm::kLinf: return max_dev;
    case Norm::kL2: {
      Integer root;
      mpz_sqrt(root.get_mpz_t(), sum_sq.get_mpz_t());
      if (root * root < sum_sq) root += 1;
      return to_int64(root);
    }
  }
  return 0;
}

}  // namespace qnnv
