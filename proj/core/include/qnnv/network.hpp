#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "qnnv/quant.hpp"
#include "qnnv/rational.hpp"

namespace qnnv {

using IntVector = std::vector<int64_t>;
using RationalVector = std::vector<Rational>;

// Real-valued fully connected layer; weights are row-major, one row per
// output neuron.
struct RealLayer {
  std::vector<RationalVector> weights;
  RationalVector bias;
};

// Feed-forward ReLU network with exact rational parameters. ReLU is applied
// after every layer except the last.
class RealNetwork {
 public:
  RealNetwork() = default;
  // Throws std::invalid_argument if the layer shapes do not chain.
  explicit RealNetwork(std::vector<RealLayer> layers);

  const std::vector<RealLayer>& layers() const { return layers_; }
  // Input width followed by each layer's output width.
  std::vector<std::size_t> widths() const;
  std::size_t input_size() const;
  std::size_t output_size() const;

 private:
  std::vector<RealLayer> layers_;
};

RationalVector real_forward(const RealNetwork& dnn, const RationalVector& x);

struct IntLayer {
  std::vector<IntVector> weights;
  IntVector bias;
};

// The fixed-point network evaluated with integer-only semantics. Layer k of
// `layers()` is the paper-style layer k + 2 (layer 1 is the identity on the
// input).
class QuantizedNetwork {
 public:
  struct Configs {
    QuantConfig in;
    QuantConfig weight;
    QuantConfig bias;
    QuantConfig out_hidden;
    QuantConfig out_last;
  };

  QuantizedNetwork() = default;
  // Validates shapes and that every weight and bias lies on its grid; throws
  // std::invalid_argument otherwise.
  QuantizedNetwork(std::vector<IntLayer> layers, Configs configs);

  const std::vector<IntLayer>& layers() const { return layers_; }
  const Configs& configs() const { return configs_; }
  const QuantConfig& cfg_in() const { return configs_.in; }
  const QuantConfig& cfg_w() const { return configs_.weight; }
  const QuantConfig& cfg_b() const { return configs_.bias; }
  const QuantConfig& cfg_out_hidden() const { return configs_.out_hidden; }
  const QuantConfig& cfg_out_last() const { return configs_.out_last; }

  std::size_t layer_count() const { return layers_.size(); }
  std::size_t input_size() const;
  std::size_t output_size() const;
  std::vector<std::size_t> widths() const;
  // Neurons in all layers including the input layer.
  std::size_t neuron_count() const;

  bool is_last(std::size_t layer) const { return layer + 1 == layers_.size(); }
  const QuantConfig& out_config(std::size_t layer) const {
    return is_last(layer) ? configs_.out_last : configs_.out_hidden;
  }
  // Clamp limits of a layer's outputs; hidden layers saturate at 0 (ReLU).
  int64_t out_lb(std::size_t layer) const { return is_last(layer) ? configs_.out_last.lb() : 0; }
  int64_t out_ub(std::size_t layer) const { return out_config(layer).ub(); }

  // Power-of-two exponent that aligns sum(W * y) with the layer's output
  // precision: F_out - F_in - F_w for the first layer, F_out - F_prev - F_w
  // afterwards (which is -F_w when all non-input layers share F_out).
  int weight_exponent(std::size_t layer) const;
  // Exponent applied to the bias: F_out - F_b.
  int bias_exponent(std::size_t layer) const;

  // Exact rational pre-activation 2^{F_i} sum_k W_jk y_k + 2^{F_out-F_b} b_j.
  Rational pre_activation(std::size_t layer, std::size_t neuron, const IntVector& previous) const;

 private:
  std::vector<IntLayer> layers_;
  Configs configs_;
};

// Clamp-round semantics applied layer by layer. Returns the output layer.
// Throws std::invalid_argument on arity mismatch or off-grid input.
IntVector qnn_forward(const QuantizedNetwork& qnn, const IntVector& input);

// All layer values: element 0 is the input, element k the output of layer k.
std::vector<IntVector> qnn_forward_layers(const QuantizedNetwork& qnn, const IntVector& input);

// Rational-path evaluation of one layer: used to cross-check the scaled
// integer path in tests.
IntVector qnn_layer_exact(const QuantizedNetwork& qnn, std::size_t layer, const IntVector& previous);

// Class label of the first maximal entry; labels run from 1 to size().
// Throws on empty input.
std::size_t classify(const IntVector& output);

struct QuantizationReport {
  std::size_t saturated_weights = 0;
  std::size_t saturated_biases = 0;
};

QuantizedNetwork quantize_network(const RealNetwork& dnn, const QuantizedNetwork::Configs& configs,
                                  QuantizationReport* report = nullptr);

IntVector quantize_input(const RationalVector& x, const QuantConfig& cfg_in);

}  // namespace qnnv
