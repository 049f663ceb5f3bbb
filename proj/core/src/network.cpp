#include "qnnv/network.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <string>

namespace qnnv {

namespace {

void check_real_shapes(const std::vector<RealLayer>& layers) {
  if (layers.empty()) throw std::invalid_argument("network has no layers");
  std::size_t width = 0;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& layer = layers[i];
    if (layer.weights.empty()) throw std::invalid_argument("layer " + std::to_string(i) + " has no neurons");
    if (layer.bias.size() != layer.weights.size()) {
      throw std::invalid_argument("layer " + std::to_string(i) + ": bias length differs from row count");
    }
    std::size_t cols = layer.weights.front().size();
    if (cols == 0) throw std::invalid_argument("layer " + std::to_string(i) + " has no inputs");
    for (const auto& row : layer.weights) {
      if (row.size() != cols) throw std::invalid_argument("layer " + std::to_string(i) + ": ragged weight matrix");
    }
    if (i > 0 && cols != width) {
      throw std::invalid_argument("layer " + std::to_string(i) + ": input width does not match previous layer");
    }
    width = layer.weights.size();
  }
}

__extension__ typedef __int128 Wide;

constexpr int kWideShiftLimit = 100;

// floor(a / 2^s) for s >= 0.
Wide floor_shift(Wide a, int s) {
  if (s == 0) return a;
  Wide d = Wide{1} << s;
  Wide q = a / d;
  if ((a % d != 0) && (a < 0)) --q;
  return q;
}

bool fits_shift(Wide v, int s) {
  if (s <= 0) return true;
  Wide limit = (Wide{1} << (kWideShiftLimit - s));
  return v < limit && v > -limit;
}

// clamp(round_half_up(2^e * acc + 2^eb * bias), lo, hi) without leaving
// integer arithmetic: both terms are brought to the common denominator 2^D.
// Returns false if the 128-bit range might be exceeded.
bool scaled_round(int64_t acc, int64_t bias, int e, int eb, int64_t& out) {
  int denom = std::max({0, -e, -eb});
  if (denom > 60 || e + denom > 60 || eb + denom > 60) return false;
  if (!fits_shift(acc, e + denom) || !fits_shift(bias, eb + denom)) return false;
  Wide numerator = (Wide{acc} << (e + denom)) + (Wide{bias} << (eb + denom));
  Wide half = denom == 0 ? Wide{0} : (Wide{1} << (denom - 1));
  Wide rounded = denom == 0 ? numerator : floor_shift(numerator + half, denom);
  if (rounded > Wide{INT64_MAX} || rounded < Wide{INT64_MIN}) return false;
  out = static_cast<int64_t>(rounded);
  return true;
}

}  // namespace

RealNetwork::RealNetwork(std::vector<RealLayer> layers) : layers_(std::move(layers)) {
  check_real_shapes(layers_);
}

std::vector<std::size_t> RealNetwork::widths() const {
  std::vector<std::size_t> w{input_size()};
  for (const auto& layer : layers_) w.push_back(layer.weights.size());
  return w;
}

std::size_t RealNetwork::input_size() const { return layers_.empty() ? 0 : layers_.front().weights.front().size(); }
std::size_t RealNetwork::output_size() const { return layers_.empty() ? 0 : layers_.back().weights.size(); }

RationalVector real_forward(const RealNetwork& dnn, const RationalVector& x) {
  if (x.size() != dnn.input_size()) throw std::invalid_argument("real_forward: input arity mismatch");
  RationalVector y = x;
  const auto& layers = dnn.layers();
  for (std::size_t i = 0; i < layers.size(); ++i) {
    RationalVector next(layers[i].weights.size());
    for (std::size_t j = 0; j < next.size(); ++j) {
      Rational sum = layers[i].bias[j];
      for (std::size_t k = 0; k < y.size(); ++k) sum += layers[i].weights[j][k] * y[k];
      if (i + 1 < layers.size() && sum < 0) sum = 0;
      next[j] = sum;
    }
    y = std::move(next);
  }
  return y;
}

QuantizedNetwork::QuantizedNetwork(std::vector<IntLayer> layers, Configs configs)
    : layers_(std::move(layers)), configs_(configs) {
  if (layers_.empty()) throw std::invalid_argument("network has no layers");
  std::size_t width = 0;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto& layer = layers_[i];
    const std::string where = "layer " + std::to_string(i);
    if (layer.weights.empty()) throw std::invalid_argument(where + " has no neurons");
    if (layer.bias.size() != layer.weights.size()) throw std::invalid_argument(where + ": bias length differs from row count");
    std::size_t cols = layer.weights.front().size();
    if (cols == 0) throw std::invalid_argument(where + " has no inputs");
    if (i > 0 && cols != width) throw std::invalid_argument(where + ": input width does not match previous layer");
    for (const auto& row : layer.weights) {
      if (row.size() != cols) throw std::invalid_argument(where + ": ragged weight matrix");
      for (int64_t w : row) {
        if (!configs_.weight.contains(w)) {
          throw std::invalid_argument(where + ": weight " + std::to_string(w) + " outside grid " +
                                      configs_.weight.to_string());
        }
      }
    }
    for (int64_t b : layer.bias) {
      if (!configs_.bias.contains(b)) {
        throw std::invalid_argument(where + ": bias " + std::to_string(b) + " outside grid " + configs_.bias.to_string());
      }
    }
    width = layer.weights.size();
  }
}

std::size_t QuantizedNetwork::input_size() const { return layers_.empty() ? 0 : layers_.front().weights.front().size(); }
std::size_t QuantizedNetwork::output_size() const { return layers_.empty() ? 0 : layers_.back().weights.size(); }

std::vector<std::size_t> QuantizedNetwork::widths() const {
  std::vector<std::size_t> w{input_size()};
  for (const auto& layer : layers_) w.push_back(layer.weights.size());
  return w;
}

std::size_t QuantizedNetwork::neuron_count() const {
  auto w = widths();
  return std::accumulate(w.begin(), w.end(), std::size_t{0});
}

int QuantizedNetwork::weight_exponent(std::size_t layer) const {
  int previous = layer == 0 ? configs_.in.frac_bits() : out_config(layer - 1).frac_bits();
  return out_config(layer).frac_bits() - previous - configs_.weight.frac_bits();
}

int QuantizedNetwork::bias_exponent(std::size_t layer) const {
  return out_config(layer).frac_bits() - configs_.bias.frac_bits();
}

Rational QuantizedNetwork::pre_activation(std::size_t layer, std::size_t neuron, const IntVector& previous) const {
  const auto& row = layers_.at(layer).weights.at(neuron);
  if (previous.size() != row.size()) throw std::invalid_argument("pre_activation: arity mismatch");
  Integer acc = 0;
  for (std::size_t k = 0; k < row.size(); ++k) acc += Integer(static_cast<long>(row[k])) * static_cast<long>(previous[k]);
  return Rational(acc) * pow2(weight_exponent(layer)) +
         Rational(static_cast<long>(layers_[layer].bias[neuron])) * pow2(bias_exponent(layer));
}

IntVector qnn_layer_exact(const QuantizedNetwork& qnn, std::size_t layer, const IntVector& previous) {
  const auto& rows = qnn.layers().at(layer).weights;
  IntVector out(rows.size());
  for (std::size_t j = 0; j < rows.size(); ++j) {
    Integer rounded = round_half_up(qnn.pre_activation(layer, j, previous));
    Integer lo(static_cast<long>(qnn.out_lb(layer)));
    Integer hi(static_cast<long>(qnn.out_ub(layer)));
    out[j] = to_int64(clamp(rounded, lo, hi));
  }
  return out;
}

namespace {

IntVector layer_forward(const QuantizedNetwork& qnn, std::size_t layer, const IntVector& previous) {
  const auto& l = qnn.layers()[layer];
  const int e = qnn.weight_exponent(layer);
  const int eb = qnn.bias_exponent(layer);
  const int64_t lo = qnn.out_lb(layer);
  const int64_t hi = qnn.out_ub(layer);
  IntVector out(l.weights.size());
  for (std::size_t j = 0; j < out.size(); ++j) {
    Wide acc = 0;
    for (std::size_t k = 0; k < previous.size(); ++k) acc += Wide{l.weights[j][k]} * previous[k];
    int64_t rounded = 0;
    bool ok = acc <= Wide{INT64_MAX} && acc >= Wide{INT64_MIN} &&
              scaled_round(static_cast<int64_t>(acc), l.bias[j], e, eb, rounded);
    if (!ok) return qnn_layer_exact(qnn, layer, previous);
    out[j] = clamp(rounded, lo, hi);
  }
  return out;
}

void check_input(const QuantizedNetwork& qnn, const IntVector& input) {
  if (input.size() != qnn.input_size()) {
    throw std::invalid_argument("input arity " + std::to_string(input.size()) + " does not match network input " +
                                std::to_string(qnn.input_size()));
  }
  for (int64_t v : input) {
    if (!qnn.cfg_in().contains(v)) {
      throw std::invalid_argument("input value " + std::to_string(v) + " outside grid " + qnn.cfg_in().to_string());
    }
  }
}

}  // namespace

std::vector<IntVector> qnn_forward_layers(const QuantizedNetwork& qnn, const IntVector& input) {
  check_input(qnn, input);
  std::vector<IntVector> values{input};
  for (std::size_t i = 0; i < qnn.layer_count(); ++i) values.push_back(layer_forward(qnn, i, values.back()));
  return values;
}

IntVector qnn_forward(const QuantizedNetwork& qnn, const IntVector& input) {
  check_input(qnn, input);
  IntVector y = input;
  for (std::size_t i = 0; i < qnn.layer_count(); ++i) y = layer_forward(qnn, i, y);
  return y;
}

std::size_t classify(const IntVector& output) {
  if (output.empty()) throw std::invalid_argument("classify: empty output");
  return static_cast<std::size_t>(std::max_element(output.begin(), output.end()) - output.begin()) + 1;
}

QuantizedNetwork quantize_network(const RealNetwork& dnn, const QuantizedNetwork::Configs& configs,
                                  QuantizationReport* report) {
  QuantizationReport local;
  std::vector<IntLayer> layers;
  for (const auto& real : dnn.layers()) {
    IntLayer layer;
    for (const auto& row : real.weights) {
      IntVector q;
      for (const auto& w : row) {
        auto v = quantize_value_checked(w, configs.weight);
        local.saturated_weights += v.saturated;
        q.push_back(v.value);
      }
      layer.weights.push_back(std::move(q));
    }
    for (const auto& b : real.bias) {
      auto v = quantize_value_checked(b, configs.bias);
      local.saturated_biases += v.saturated;
      layer.bias.push_back(v.value);
    }
    layers.push_back(std::move(layer));
  }
  if (report) *report = local;
  return QuantizedNetwork(std::move(layers), configs);
}

IntVector quantize_input(const RationalVector& x, const QuantConfig& cfg_in) {
  IntVector out;
  out.reserve(x.size());
  for (const auto& v : x) out.push_back(quantize_value(v, cfg_in));
  return out;
}

}  // namespace qnnv
