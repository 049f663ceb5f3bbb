#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "qnnv/deadline.hpp"
#include "qnnv/network.hpp"
#include "qnnv/region.hpp"

namespace qnnv {

enum class PropertyKind {
  kOutputDifference,  // every point must reproduce the output at the center
  kMisclassification, // every point must keep the class of the center
};

const char* to_string(PropertyKind k);
// "class" / "misclassification" or "output" / "output-difference".
PropertyKind parse_property_kind(const std::string& text);

enum class VerdictStatus { kRobust, kNonRobust, kTimeout };

// "robust", "non-robust", "timeout".
const char* to_string(VerdictStatus s);

struct VerdictStats {
  double encode_seconds = 0;
  double solve_seconds = 0;
  std::size_t booleans = 0;          // all booleans of the model
  std::size_t network_booleans = 0;  // staircase booleans only
  std::size_t full_network_booleans = 0;  // same, without interval analysis
  std::size_t product_terms = 0;
  uint64_t nodes = 0;
  uint64_t evaluations = 0;  // forward passes (brute force only)
};

struct Verdict {
  VerdictStatus status = VerdictStatus::kTimeout;
  std::optional<IntVector> counterexample;  // present iff non-robust
  VerdictStats stats;
};

struct VerifyOptions {
  bool use_interval_analysis = true;
  Deadline deadline = no_deadline();
  uint64_t node_limit = 0;
};

// Solves the verification model for the region around `center`. A reported
// counterexample has been re-run through qnn_forward; a solver answer that
// fails that check throws std::logic_error.
Verdict verify_robustness(const QuantizedNetwork& qnn, const InputRegionSpec& region, PropertyKind kind,
                          const VerifyOptions& options = {});

// Number of grid points in the region, counting stops once it exceeds `cap`.
uint64_t region_size(const InputRegionSpec& region, const QuantConfig& cfg_in, uint64_t cap);

// Enumerates the region in lexicographic order and returns the first
// violating point. Throws std::length_error when the region holds more than
// `cap` points.
Verdict brute_force_verify(const QuantizedNetwork& qnn, const InputRegionSpec& region, PropertyKind kind,
                           uint64_t cap = 1000000);

// True iff x is on the grid, within the region and violates the property.
bool validate_counterexample(const QuantizedNetwork& qnn, const InputRegionSpec& region, const IntVector& x,
                             PropertyKind kind);

struct MrrProbe {
  int64_t radius = 0;
  VerdictStatus status = VerdictStatus::kTimeout;
};

struct MrrResult {
  enum class Status {
    kComplete,   // robust at radius, non-robust at radius + 1
    kSaturated,  // robust at the covering radius, so at every radius
    kTimeout,    // a probe timed out; radius is the largest robust probe so far
  };
  Status status = Status::kTimeout;
  int64_t radius = 0;
  std::vector<MrrProbe> probes;
};

const char* to_string(MrrResult::Status s);

using RadiusProbe = std::function<VerdictStatus(int64_t radius)>;

// Range expansion by `step` starting from [1, start_r], then binary search.
// `cap` bounds every probe; a robust probe at the cap saturates. Each radius
// is probed at most once. Throws std::invalid_argument unless start_r >= 1,
// step >= 1 and cap >= 1.
MrrResult search_mrr(const RadiusProbe& probe, int64_t start_r, int64_t step, int64_t cap);

struct MrrOptions {
  int64_t start_r = 10;
  int64_t step = 10;
  PropertyKind kind = PropertyKind::kMisclassification;
  bool use_interval_analysis = true;
  Deadline deadline = no_deadline();
};

MrrResult compute_mrr(const QuantizedNetwork& qnn, const IntVector& center, Norm norm, const MrrOptions& options = {});

}  // namespace qnnv
