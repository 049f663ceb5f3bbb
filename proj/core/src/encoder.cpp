#include "qnnv/encoder.hpp"

#include <algorithm>
#include <cstdlib>
#include <stdexcept>

namespace qnnv {

using ilp::LinearExpr;
using ilp::Relation;
using ilp::VarId;

void PiecewiseConstant::validate() const {
  if (values.empty()) throw std::invalid_argument("piecewise constant function needs at least one piece");
  if (breakpoints.size() + 1 != values.size()) {
    throw std::invalid_argument("piecewise constant function: expected pieces - 1 inner breakpoints");
  }
  std::vector<Rational> all;
  if (lower) all.push_back(*lower);
  all.insert(all.end(), breakpoints.begin(), breakpoints.end());
  if (upper) all.push_back(*upper);
  for (std::size_t i = 1; i < all.size(); ++i) {
    if (!(all[i - 1] < all[i])) throw std::invalid_argument("piecewise constant function: breakpoints must increase");
  }
}

bool PiecewiseConstant::in_domain(const Rational& x) const {
  return (!lower || x >= *lower) && (!upper || x < *upper);
}

int64_t PiecewiseConstant::operator()(const Rational& x) const {
  if (!in_domain(x)) throw std::out_of_range("argument outside the piecewise constant domain");
  auto it = std::upper_bound(breakpoints.begin(), breakpoints.end(), x);
  return values[static_cast<std::size_t>(it - breakpoints.begin())];
}

ilp::LinearExpr NeuronRef::expr() const {
  if (var) return LinearExpr::variable(*var);
  return LinearExpr(Rational(static_cast<long>(constant)));
}

int64_t NeuronRef::value(const ilp::Assignment& a) const {
  return var ? a.at(static_cast<std::size_t>(var->value)) : constant;
}

PropertySpec PropertySpec::output_difference(IntVector reference) {
  PropertySpec p;
  p.kind = Kind::kOutputDifference;
  p.arity = reference.size();
  p.reference = std::move(reference);
  return p;
}

PropertySpec PropertySpec::misclassification(std::size_t target, std::size_t arity) {
  if (target < 1 || target > arity) throw std::invalid_argument("target class out of range");
  PropertySpec p;
  p.kind = Kind::kMisclassification;
  p.target_class = target;
  p.arity = arity;
  return p;
}

namespace {

Integer pick_m(const ilp::IlpModel& model, const LinearExpr& e, BigMPolicy policy) {
  return policy == BigMPolicy::kBoundDerived ? model.dominating_m(e) : model.big_m();
}

Rational as_rational(int64_t v) { return Rational(static_cast<long>(v)); }

std::string idx(std::size_t i) { return std::to_string(i + 1); }

// flag = 1 iff e >= 0, for integral e:  e >= M (flag - 1)  and  e < M flag.
void add_indicator(ilp::IlpModel& model, const LinearExpr& e, VarId flag, BigMPolicy policy, const std::string& name) {
  Rational m1(pick_m(model, e, policy));
  model.add_constraint(e - LinearExpr::variable(flag, m1), Relation::kGreaterEqual, LinearExpr(-m1), name + "_1");
  Rational m2(pick_m(model, e, policy));
  model.add_constraint(e - LinearExpr::variable(flag, m2), Relation::kLess, LinearExpr(0), name + "_2");
}

}  // namespace

std::vector<VarId> encode_piecewise_constant(const PiecewiseConstant& f, const LinearExpr& input, VarId output,
                                             ilp::IlpModel& model, const std::string& prefix, BigMPolicy policy) {
  f.validate();
  const std::size_t k = f.pieces();
  std::vector<VarId> v;
  v.reserve(k);
  for (std::size_t i = 0; i < k; ++i) v.push_back(model.add_boolean(prefix + "_" + idx(i)));

  const bool need_m = !f.lower || !f.upper;
  const Rational m = need_m ? Rational(pick_m(model, input, policy)) : Rational(0);

  LinearExpr one_hot;
  LinearExpr value;
  LinearExpr upper;
  LinearExpr lower;
  for (std::size_t i = 0; i < k; ++i) {
    one_hot.add(v[i], 1);
    value.add(v[i], as_rational(f.values[i]));
    upper.add(v[i], i + 1 < k ? f.breakpoints[i] : (f.upper ? *f.upper : m));
    lower.add(v[i], i > 0 ? f.breakpoints[i - 1] : (f.lower ? *f.lower : Rational(-m)));
  }
  model.add_constraint(one_hot, Relation::kEqual, LinearExpr(1), prefix + "_sum");
  model.add_constraint(LinearExpr::variable(output), Relation::kEqual, value, prefix + "_val");
  model.add_constraint(input, Relation::kLess, upper, prefix + "_up");
  model.add_constraint(input, Relation::kGreaterEqual, lower, prefix + "_lo");
  return v;
}

PiecewiseConstant neuron_pcf(const QuantizedNetwork& qnn, std::size_t layer, std::size_t neuron,
                             const std::optional<Interval>& bounds) {
  if (layer >= qnn.layer_count()) throw std::out_of_range("neuron_pcf: layer out of range");
  if (neuron >= qnn.layers()[layer].weights.size()) throw std::out_of_range("neuron_pcf: neuron out of range");
  int64_t lo = qnn.out_lb(layer);
  int64_t hi = qnn.out_ub(layer);
  if (bounds) {
    lo = std::max(lo, bounds->lo);
    hi = std::min(hi, bounds->hi);
    if (lo > hi) throw std::invalid_argument("neuron_pcf: bounds do not meet the output grid");
  }
  PiecewiseConstant f;
  for (int64_t t = lo; t <= hi; ++t) {
    f.values.push_back(t);
    if (t < hi) f.breakpoints.push_back(as_rational(t) + Rational(1, 2));
  }
  return f;
}

void add_input_variables(const QuantizedNetwork& qnn, Encoding& enc) {
  const auto& cfg = qnn.cfg_in();
  for (std::size_t i = 0; i < qnn.input_size(); ++i) {
    enc.inputs.push_back(enc.model.add_integer(cfg.lb(), cfg.ub(), "x" + idx(i)));
  }
}

void encode_network(const QuantizedNetwork& qnn, const IntervalBounds* bounds, Encoding& enc, BigMPolicy policy) {
  if (enc.inputs.size() != qnn.input_size()) throw std::invalid_argument("encode_network: input variables missing");
  if (bounds && bounds->layers.size() != qnn.layer_count() + 1) {
    throw std::invalid_argument("encode_network: interval bounds do not match the network");
  }
  const std::size_t rows_before = enc.model.constraints().size();
  const std::size_t vars_before = enc.model.num_variables();
  const std::size_t bools_before = enc.model.num_booleans();

  std::vector<NeuronRef> previous;
  for (VarId v : enc.inputs) previous.push_back(NeuronRef::of(v));

  enc.neurons.clear();
  enc.selectors.clear();
  for (std::size_t layer = 0; layer < qnn.layer_count(); ++layer) {
    const auto& l = qnn.layers()[layer];
    const Rational weight_scale = pow2(qnn.weight_exponent(layer));
    const Rational bias_scale = pow2(qnn.bias_exponent(layer));
    const int64_t lb = qnn.out_lb(layer);
    const int64_t ub = qnn.out_ub(layer);
    const std::string layer_name = std::to_string(layer + 2);

    std::vector<NeuronRef> current;
    std::vector<std::vector<VarId>> layer_selectors;
    for (std::size_t j = 0; j < l.weights.size(); ++j) {
      std::optional<Interval> iv;
      if (bounds) iv = bounds->neuron(layer, j);
      if (iv) {
        NeuronState state = classify_neuron(*iv, lb, ub);
        if (state != NeuronState::kActive) {
          int64_t c = state == NeuronState::kClampedLow ? lb : state == NeuronState::kClampedHigh ? ub : iv->lo;
          current.push_back(NeuronRef::fixed(c));
          layer_selectors.emplace_back();
          continue;
        }
      }

      LinearExpr z(as_rational(l.bias[j]) * bias_scale);
      for (std::size_t k = 0; k < previous.size(); ++k) {
        if (l.weights[j][k] == 0) continue;
        z += previous[k].expr() * (as_rational(l.weights[j][k]) * weight_scale);
        enc.product_terms += !previous[k].is_fixed();
      }
      const int64_t lo = iv ? std::max(lb, iv->lo) : lb;
      const int64_t hi = iv ? std::min(ub, iv->hi) : ub;
      const std::string name = layer_name + "_" + idx(j);
      VarId y = enc.model.add_integer(lo, hi, "y" + name);
      auto selectors = encode_piecewise_constant(neuron_pcf(qnn, layer, j, iv), z, y, enc.model, "v" + name, policy);
      current.push_back(NeuronRef::of(y));
      layer_selectors.push_back(std::move(selectors));
    }
    enc.neurons.push_back(current);
    enc.selectors.push_back(std::move(layer_selectors));
    previous = std::move(current);
  }
  if (bounds) enc.bounds = *bounds;
  enc.network_constraints = enc.model.constraints().size() - rows_before;
  enc.network_variables = enc.inputs.size() + (enc.model.num_variables() - vars_before);
  enc.network_booleans = enc.model.num_booleans() - bools_before;
}

void encode_input_region(const InputRegionSpec& spec, const QuantConfig& cfg_in, Encoding& enc) {
  validate_region(spec, cfg_in);
  if (spec.center.size() != enc.inputs.size()) throw std::invalid_argument("region arity does not match the inputs");
  auto& model = enc.model;
  const std::size_t rows_before = model.constraints().size();
  const int64_t r = spec.radius;

  auto clip_box = [&] {
    for (std::size_t i = 0; i < enc.inputs.size(); ++i) {
      const int64_t c = spec.center[i];
      model.set_bounds(enc.inputs[i], std::max(c - r, cfg_in.lb()), std::min(c + r, cfg_in.ub()));
    }
  };

  if (r == 0) {
    for (std::size_t i = 0; i < enc.inputs.size(); ++i) model.set_bounds(enc.inputs[i], spec.center[i], spec.center[i]);
    return;
  }

  switch (spec.norm) {
    case Norm::kLinf:
      clip_box();
      break;
    case Norm::kL1: {
      LinearExpr total;
      for (std::size_t i = 0; i < enc.inputs.size(); ++i) {
        VarId d = model.add_integer(0, r, "d" + idx(i));
        LinearExpr x = LinearExpr::variable(enc.inputs[i]);
        LinearExpr center(as_rational(spec.center[i]));
        model.add_constraint(x - LinearExpr::variable(d), Relation::kLessEqual, center, "r" + idx(i) + "_hi");
        model.add_constraint(x + LinearExpr::variable(d), Relation::kGreaterEqual, center, "r" + idx(i) + "_lo");
        total.add(d, 1);
      }
      model.add_constraint(total, Relation::kLessEqual, LinearExpr(as_rational(r)), "r_sum");
      break;
    }
    case Norm::kL0: {
      LinearExpr total;
      for (std::size_t i = 0; i < enc.inputs.size(); ++i) {
        const int64_t c = spec.center[i];
        PiecewiseConstant g;
        if (c > cfg_in.lb()) {
          g.lower = as_rational(cfg_in.lb());
          g.values.push_back(1);
          g.breakpoints.push_back(as_rational(c));
        } else {
          g.lower = as_rational(c);
        }
        g.values.push_back(0);
        if (c < cfg_in.ub()) {
          g.breakpoints.push_back(as_rational(c + 1));
          g.values.push_back(1);
        }
        // Extends one past the top of the grid so that ub itself is covered.
        g.upper = as_rational(c < cfg_in.ub() ? cfg_in.ub() + 1 : c + 1);
        VarId d = model.add_boolean("d" + idx(i));
        encode_piecewise_constant(g, LinearExpr::variable(enc.inputs[i]), d, model, "g" + idx(i));
        total.add(d, 1);
      }
      model.add_constraint(total, Relation::kLessEqual, LinearExpr(as_rational(r)), "r_sum");
      break;
    }
    case Norm::kL2: {
      clip_box();
      ilp::QuadraticConstraint q;
      for (std::size_t i = 0; i < enc.inputs.size(); ++i) q.squares.push_back({enc.inputs[i], spec.center[i]});
      Integer rr(static_cast<long>(r));
      q.bound = rr * rr;
      model.add_quadratic(std::move(q));
      break;
    }
  }
  enc.region_constraints += model.constraints().size() - rows_before;
}

void encode_output_difference(const IntVector& reference, Encoding& enc, BigMPolicy policy) {
  const auto& outputs = enc.outputs();
  if (reference.size() != outputs.size()) throw std::invalid_argument("reference output arity mismatch");
  auto& model = enc.model;
  const std::size_t rows_before = model.constraints().size();
  LinearExpr any;
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    const LinearExpr y_hat = outputs[i].expr();
    const LinearExpr y(as_rational(reference[i]));
    const std::string name = "o" + idx(i);
    VarId above = model.add_boolean(name + "_gt");
    VarId below = model.add_boolean(name + "_lt");

    // above = 1 iff y_hat > y:  y_hat >= y + 1 + M (above - 1),  y_hat < y + 1 + M above
    add_indicator(model, y_hat - y - LinearExpr(1), above, policy, name + "_gt");
    // below = 1 iff y_hat < y, the mirror image
    add_indicator(model, y - y_hat - LinearExpr(1), below, policy, name + "_lt");

    any.add(above, 1).add(below, 1);
  }
  model.add_constraint(any, Relation::kGreaterEqual, LinearExpr(1), "o_any");
  enc.property_constraints += model.constraints().size() - rows_before;
}

void encode_misclassification(std::size_t target, std::size_t arity, Encoding& enc, BigMPolicy policy) {
  const auto& outputs = enc.outputs();
  if (arity != outputs.size()) throw std::invalid_argument("property arity does not match the network output");
  if (target < 1 || target > arity) throw std::invalid_argument("target class out of range");
  auto& model = enc.model;
  const std::size_t rows_before = model.constraints().size();
  const std::size_t g = target - 1;
  const LinearExpr y_target = outputs[g].expr();
  LinearExpr any;
  for (std::size_t i = 0; i < arity; ++i) {
    if (i == g) continue;
    const std::string name = "c" + idx(i);
    VarId beats = model.add_boolean(name);
    // Earlier classes win ties under first-argmax, later ones need a strict lead.
    LinearExpr need = outputs[i].expr() - y_target;
    if (i > g) need -= LinearExpr(1);
    add_indicator(model, need, beats, policy, name);
    any.add(beats, 1);
  }
  model.add_constraint(any, Relation::kGreaterEqual, LinearExpr(1), "c_any");
  enc.property_constraints += model.constraints().size() - rows_before;
}

Integer global_big_m(const QuantizedNetwork& qnn) {
  auto magnitude = [](int64_t lo, int64_t hi) { return std::max(std::llabs(lo), std::llabs(hi)); };
  Rational widest = 0;
  int64_t max_weight = 0;
  std::size_t max_width = 0;
  int64_t prev_mag = magnitude(qnn.cfg_in().lb(), qnn.cfg_in().ub());
  for (std::size_t layer = 0; layer < qnn.layer_count(); ++layer) {
    const auto& l = qnn.layers()[layer];
    const Rational ws = pow2(qnn.weight_exponent(layer));
    const Rational bs = pow2(qnn.bias_exponent(layer));
    max_width = std::max({max_width, l.weights.size(), l.weights.front().size()});
    for (std::size_t j = 0; j < l.weights.size(); ++j) {
      Integer sum = 0;
      for (int64_t w : l.weights[j]) {
        sum += Integer(static_cast<long>(std::llabs(w)));
        max_weight = std::max(max_weight, static_cast<int64_t>(std::llabs(w)));
      }
      Rational bound = Rational(sum * static_cast<long>(prev_mag)) * ws + as_rational(std::llabs(l.bias[j])) * bs;
      widest = std::max(widest, bound);
    }
    prev_mag = magnitude(qnn.out_lb(layer), qnn.out_ub(layer));
  }
  const int64_t span = std::max(qnn.cfg_out_hidden().ub() - qnn.cfg_out_hidden().lb(),
                                qnn.cfg_out_last().ub() - qnn.cfg_out_last().lb());
  Integer formula = Integer(2) * static_cast<long>(span) * static_cast<unsigned long>(max_width) *
                    static_cast<long>(std::max<int64_t>(max_weight, 1));
  Integer network = ceil_of(widest) + 1;
  Integer property(static_cast<long>(span + 2));
  return std::max({formula, network, property});
}

void check_size_bounds(const QuantizedNetwork& qnn, const Encoding& enc) {
  const std::size_t neurons = qnn.neuron_count();
  const std::size_t non_input = neurons - qnn.input_size();
  const int64_t span = std::max(qnn.cfg_out_hidden().ub() - qnn.cfg_out_hidden().lb(),
                                qnn.cfg_out_last().ub() - qnn.cfg_out_last().lb());
  if (enc.network_constraints > 4 * non_input) {
    throw std::logic_error("network encoding exceeds 4 rows per non-input neuron");
  }
  if (enc.network_variables > static_cast<std::size_t>(span + 2) * neurons) {
    throw std::logic_error("network encoding exceeds (span + 2) variables per neuron");
  }
}

Encoding build_verification_model(const QuantizedNetwork& qnn, const InputRegionSpec& region,
                                  const PropertySpec& property, const BuildOptions& options) {
  validate_region(region, qnn.cfg_in());
  if (region.center.size() != qnn.input_size()) throw std::invalid_argument("region arity does not match the network");
  if (property.arity != qnn.output_size()) throw std::invalid_argument("property arity does not match the network");

  Encoding enc;
  enc.model.set_big_m(global_big_m(qnn));
  add_input_variables(qnn, enc);
  encode_input_region(region, qnn.cfg_in(), enc);

  const BigMPolicy policy = options.use_interval_analysis ? BigMPolicy::kBoundDerived : BigMPolicy::kGlobal;
  if (options.use_interval_analysis) {
    IntervalBounds bounds = propagate(qnn, region);
    encode_network(qnn, &bounds, enc, policy);
  } else {
    encode_network(qnn, nullptr, enc, policy);
  }

  if (property.kind == PropertySpec::Kind::kOutputDifference) {
    encode_output_difference(property.reference, enc, policy);
  } else {
    encode_misclassification(property.target_class, property.arity, enc, policy);
  }
  check_size_bounds(qnn, enc);
  if (options.normalize) enc.model = ilp::normalize(enc.model);
  return enc;
}

std::size_t full_network_booleans(const QuantizedNetwork& qnn) {
  std::size_t total = 0;
  for (std::size_t layer = 0; layer < qnn.layer_count(); ++layer) {
    total += static_cast<std::size_t>(qnn.out_ub(layer) - qnn.out_lb(layer) + 1) * qnn.layers()[layer].weights.size();
  }
  return total;
}

}  // namespace qnnv
