#pragma once

#include <cstdint>
#include <vector>

#include "qnnv/network.hpp"
#include "qnnv/region.hpp"

namespace qnnv {

struct Interval {
  int64_t lo = 0;
  int64_t hi = 0;
  bool contains(int64_t v) const { return lo <= v && v <= hi; }
  int64_t width() const { return hi - lo + 1; }
  friend bool operator==(const Interval&, const Interval&) = default;
};

// Post-activation integer bounds. layers[0] holds the input intervals and
// layers[k] the outputs of network layer k - 1.
struct IntervalBounds {
  std::vector<std::vector<Interval>> layers;

  const Interval& neuron(std::size_t layer, std::size_t j) const { return layers.at(layer + 1).at(j); }
};

// Per-coordinate input ranges covering the region. For L2 the coordinate
// bound is center +- r (clipped to the grid).
std::vector<Interval> input_intervals(const InputRegionSpec& spec, const QuantConfig& cfg_in);

// Interval arithmetic through the clamp-round layers. Rounding and clamping
// are monotone, so rounding both pre-activation ends brackets every
// reachable value.
IntervalBounds propagate(const QuantizedNetwork& qnn, const std::vector<Interval>& inputs);

inline IntervalBounds propagate(const QuantizedNetwork& qnn, const InputRegionSpec& spec) {
  return propagate(qnn, input_intervals(spec, qnn.cfg_in()));
}

enum class NeuronState { kActive, kClampedLow, kClampedHigh, kFixed };

const char* to_string(NeuronState s);

// Precedence: clamped_low, clamped_high, fixed, active.
NeuronState classify_neuron(const Interval& bounds, int64_t lb, int64_t ub);

}  // namespace qnnv
