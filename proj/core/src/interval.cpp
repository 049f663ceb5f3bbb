#include "qnnv/interval.hpp"

#include <stdexcept>

namespace qnnv {

std::vector<Interval> input_intervals(const InputRegionSpec& spec, const QuantConfig& cfg_in) {
  validate_region(spec, cfg_in);
  std::vector<Interval> out;
  out.reserve(spec.center.size());
  for (int64_t c : spec.center) {
    if (spec.radius == 0) {
      out.push_back({c, c});
      continue;
    }
    switch (spec.norm) {
      case Norm::kL0:
        out.push_back({cfg_in.lb(), cfg_in.ub()});
        break;
      case Norm::kL1:
      case Norm::kL2:
      case Norm::kLinf:
        out.push_back({clamp(c - spec.radius, cfg_in.lb(), cfg_in.ub()), clamp(c + spec.radius, cfg_in.lb(), cfg_in.ub())});
        break;
    }
  }
  return out;
}

IntervalBounds propagate(const QuantizedNetwork& qnn, const std::vector<Interval>& inputs) {
  if (inputs.size() != qnn.input_size()) throw std::invalid_argument("propagate: input arity mismatch");
  for (const auto& iv : inputs) {
    if (iv.lo > iv.hi || !qnn.cfg_in().contains(iv.lo) || !qnn.cfg_in().contains(iv.hi)) {
      throw std::invalid_argument("propagate: input interval outside the grid");
    }
  }
  IntervalBounds bounds;
  bounds.layers.push_back(inputs);
  for (std::size_t layer = 0; layer < qnn.layer_count(); ++layer) {
    const auto& prev = bounds.layers.back();
    const auto& l = qnn.layers()[layer];
    const Rational weight_scale = pow2(qnn.weight_exponent(layer));
    const Rational bias_scale = pow2(qnn.bias_exponent(layer));
    const Integer out_lo(static_cast<long>(qnn.out_lb(layer)));
    const Integer out_hi(static_cast<long>(qnn.out_ub(layer)));
    std::vector<Interval> next;
    next.reserve(l.weights.size());
    for (std::size_t j = 0; j < l.weights.size(); ++j) {
      Integer low = 0;
      Integer high = 0;
      for (std::size_t k = 0; k < prev.size(); ++k) {
        Integer w(static_cast<long>(l.weights[j][k]));
        if (w >= 0) {
          low += w * static_cast<long>(prev[k].lo);
          high += w * static_cast<long>(prev[k].hi);
        } else {
          low += w * static_cast<long>(prev[k].hi);
          high += w * static_cast<long>(prev[k].lo);
        }
      }
      Rational bias = Rational(static_cast<long>(l.bias[j])) * bias_scale;
      Integer lo = clamp(round_half_up(Rational(low) * weight_scale + bias), out_lo, out_hi);
      Integer hi = clamp(round_half_up(Rational(high) * weight_scale + bias), out_lo, out_hi);
      next.push_back({to_int64(lo), to_int64(hi)});
    }
    bounds.layers.push_back(std::move(next));
  }
  return bounds;
}

const char* to_string(NeuronState s) {
  switch (s) {
    case NeuronState::kActive: return "active";
    case NeuronState::kClampedLow: return "clamped_low";
    case NeuronState::kClampedHigh: return "clamped_high";
    case NeuronState::kFixed: return "fixed";
  }
  return "?";
}

NeuronState classify_neuron(const Interval& bounds, int64_t lb, int64_t ub) {
  if (bounds.hi <= lb) return NeuronState::kClampedLow;
  if (bounds.lo >= ub) return NeuronState::kClampedHigh;
  if (bounds.lo == bounds.hi) return NeuronState::kFixed;
  return NeuronState::kActive;
}

}  // namespace qnnv
