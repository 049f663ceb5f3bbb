#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qnnv/ilp.hpp"
#include "qnnv/interval.hpp"
#include "qnnv/network.hpp"
#include "qnnv/region.hpp"

namespace qnnv {

// f(x) = values[i] on [a_i, a_{i+1}), where a_0 = lower (or -inf when absent),
// a_1..a_{k-1} = breakpoints and a_k = upper (or +inf when absent).
struct PiecewiseConstant {
  std::optional<Rational> lower;
  std::vector<Rational> breakpoints;
  std::optional<Rational> upper;
  std::vector<int64_t> values;

  std::size_t pieces() const { return values.size(); }
  // Throws std::invalid_argument unless there is at least one piece and the
  // breakpoints are strictly increasing.
  void validate() const;
  bool in_domain(const Rational& x) const;
  // Throws std::out_of_range outside the domain.
  int64_t operator()(const Rational& x) const;
};

// How big-M constants are chosen for gated rows and infinite breakpoints.
enum class BigMPolicy {
  kBoundDerived,  // 1 + max |expression| under current variable bounds, per row
  kGlobal,        // the model-wide IlpModel::big_m()
};

// Adds one selector boolean per piece and the four rows
//   sum v = 1,  y = sum t v,  x < sum a_i v_i,  x >= sum a_{i-1} v_i
// so that on integer assignments the rows hold iff y = f(x).
// Returns the selector variables.
std::vector<ilp::VarId> encode_piecewise_constant(const PiecewiseConstant& f, const ilp::LinearExpr& input,
                                                  ilp::VarId output, ilp::IlpModel& model,
                                                  const std::string& prefix,
                                                  BigMPolicy policy = BigMPolicy::kBoundDerived);

// Staircase clamp(round(z), lb, ub) of a non-input neuron, optionally
// truncated to the value range in `bounds` (outer pieces extend to +-inf).
// `layer` is the 0-based index into QuantizedNetwork::layers().
PiecewiseConstant neuron_pcf(const QuantizedNetwork& qnn, std::size_t layer, std::size_t neuron,
                             const std::optional<Interval>& bounds = std::nullopt);

// A neuron's value in the model: a variable, or a constant once interval
// analysis pins it.
struct NeuronRef {
  std::optional<ilp::VarId> var;
  int64_t constant = 0;

  static NeuronRef of(ilp::VarId v) { return {v, 0}; }
  static NeuronRef fixed(int64_t c) { return {std::nullopt, c}; }
  bool is_fixed() const { return !var.has_value(); }
  ilp::LinearExpr expr() const;
  int64_t value(const ilp::Assignment& a) const;
};

struct PropertySpec {
  enum class Kind { kOutputDifference, kMisclassification };
  Kind kind = Kind::kMisclassification;
  IntVector reference;          // output the region must keep (output difference)
  std::size_t target_class = 1;  // class label (1-based) the region must keep
  std::size_t arity = 0;

  static PropertySpec output_difference(IntVector reference);
  // Throws std::invalid_argument unless 1 <= target <= arity.
  static PropertySpec misclassification(std::size_t target, std::size_t arity);
};

struct Encoding {
  ilp::IlpModel model;
  std::vector<ilp::VarId> inputs;
  // neurons[k][j]: output of network layer k, neuron j.
  std::vector<std::vector<NeuronRef>> neurons;
  // selectors[k][j]: staircase booleans of that neuron (empty when fixed).
  std::vector<std::vector<std::vector<ilp::VarId>>> selectors;
  std::optional<IntervalBounds> bounds;

  std::size_t network_booleans = 0;
  std::size_t product_terms = 0;
  std::size_t network_constraints = 0;
  std::size_t network_variables = 0;
  std::size_t region_constraints = 0;
  std::size_t property_constraints = 0;

  const std::vector<NeuronRef>& outputs() const { return neurons.back(); }
  std::size_t booleans() const { return model.num_booleans(); }
};

// Adds integer input variables bounded by the input grid.
void add_input_variables(const QuantizedNetwork& qnn, Encoding& enc);

// Appends the layer encodings. Layer 1 (identity) is folded into the input
// variables; neurons whose bounds collapse are substituted as constants.
void encode_network(const QuantizedNetwork& qnn, const IntervalBounds* bounds, Encoding& enc,
                    BigMPolicy policy = BigMPolicy::kBoundDerived);

// Constrains the input variables to the grid points of the region.
void encode_input_region(const InputRegionSpec& spec, const QuantConfig& cfg_in, Encoding& enc);

// Satisfiable iff some output differs from `reference`.
void encode_output_difference(const IntVector& reference, Encoding& enc,
                              BigMPolicy policy = BigMPolicy::kBoundDerived);

// Satisfiable iff the first-argmax class differs from the label `target`.
void encode_misclassification(std::size_t target, std::size_t arity, Encoding& enc,
                              BigMPolicy policy = BigMPolicy::kBoundDerived);

// A big-M that dominates every gated expression of the network encoding
// over the full grids.
Integer global_big_m(const QuantizedNetwork& qnn);

// Size limits of the network part: at most 4 rows per non-input neuron and
// (C_out span + 2) variables per neuron. Throws std::logic_error if exceeded.
void check_size_bounds(const QuantizedNetwork& qnn, const Encoding& enc);

struct BuildOptions {
  bool use_interval_analysis = true;
  bool normalize = true;
};

// Inputs, region, network and property rows combined into one model. Uses
// bound-derived big-M with interval analysis and the global M without it.
Encoding build_verification_model(const QuantizedNetwork& qnn, const InputRegionSpec& region,
                                  const PropertySpec& property, const BuildOptions& options = {});

// Staircase booleans the network part needs without interval analysis.
std::size_t full_network_booleans(const QuantizedNetwork& qnn);

}  // namespace qnnv
