#include "qnnv/ilp.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace qnnv::ilp {

LinearExpr LinearExpr::variable(VarId v, const Rational& coeff) {
  LinearExpr e;
  e.add(v, coeff);
  return e;
}

LinearExpr& LinearExpr::add(VarId v, const Rational& coeff) {
  Rational c = coeff;
  c.canonicalize();
  if (c == 0) return *this;
  auto [it, inserted] = coeffs_.try_emplace(v, c);
  if (!inserted) {
    it->second += c;
    if (it->second == 0) coeffs_.erase(it);
  }
  return *this;
}

LinearExpr& LinearExpr::add_constant(const Rational& c) {
  Rational value = c;
  value.canonicalize();
  constant_ += value;
  return *this;
}

LinearExpr& LinearExpr::operator+=(const LinearExpr& other) {
  for (const auto& [v, c] : other.coeffs_) add(v, c);
  constant_ += other.constant_;
  return *this;
}

LinearExpr& LinearExpr::operator-=(const LinearExpr& other) {
  for (const auto& [v, c] : other.coeffs_) add(v, -c);
  constant_ -= other.constant_;
  return *this;
}

LinearExpr& LinearExpr::operator*=(const Rational& factor) {
  if (factor == 0) {
    coeffs_.clear();
    constant_ = 0;
    return *this;
  }
  for (auto& [v, c] : coeffs_) c *= factor;
  constant_ *= factor;
  return *this;
}

LinearExpr operator+(LinearExpr a, const LinearExpr& b) { return a += b; }
LinearExpr operator-(LinearExpr a, const LinearExpr& b) { return a -= b; }
LinearExpr operator*(LinearExpr a, const Rational& f) { return a *= f; }

VarId IlpModel::add_boolean(std::string name) {
  VarId id{static_cast<int32_t>(variables_.size())};
  variables_.push_back({id, VarKind::kBoolean, 0, 1, std::move(name)});
  return id;
}

VarId IlpModel::add_integer(int64_t lower, int64_t upper, std::string name) {
  if (lower > upper) throw std::invalid_argument("variable '" + name + "': lower bound exceeds upper bound");
  VarId id{static_cast<int32_t>(variables_.size())};
  variables_.push_back({id, VarKind::kInteger, lower, upper, std::move(name)});
  return id;
}

void IlpModel::set_bounds(VarId v, int64_t lower, int64_t upper) {
  check_var(v);
  auto& var = variables_[static_cast<std::size_t>(v.value)];
  if (lower > upper) throw std::invalid_argument("variable '" + var.name + "': lower bound exceeds upper bound");
  if (var.kind == VarKind::kBoolean && (lower < 0 || upper > 1)) {
    throw std::invalid_argument("boolean variable '" + var.name + "' must stay within [0, 1]");
  }
  var.lower = lower;
  var.upper = upper;
}

void IlpModel::check_var(VarId v) const {
  if (v.value < 0 || static_cast<std::size_t>(v.value) >= variables_.size()) {
    throw std::invalid_argument("unknown variable id " + std::to_string(v.value));
  }
}

void IlpModel::add_constraint(const LinearExpr& lhs, Relation relation, const LinearExpr& rhs, std::string name) {
  LinearExpr diff = lhs - rhs;
  LinearConstraint c;
  c.relation = relation;
  c.rhs = -diff.constant();
  c.name = std::move(name);
  for (const auto& [v, coeff] : diff.coefficients()) c.terms.push_back({coeff, v});
  add_constraint(std::move(c));
}

void IlpModel::add_constraint(LinearConstraint constraint) {
  std::vector<VarId> seen;
  constraint.rhs.canonicalize();
  for (auto& t : constraint.terms) {
    t.coeff.canonicalize();
    check_var(t.var);
    seen.push_back(t.var);
  }
  std::sort(seen.begin(), seen.end());
  if (std::adjacent_find(seen.begin(), seen.end()) != seen.end()) {
    throw std::invalid_argument("constraint '" + constraint.name + "' repeats a variable");
  }
  constraints_.push_back(std::move(constraint));
}

void IlpModel::add_quadratic(QuadraticConstraint constraint) {
  if (constraint.bound < 0) throw std::invalid_argument("quadratic bound must be non-negative");
  for (const auto& s : constraint.squares) check_var(s.var);
  quadratics_.push_back(std::move(constraint));
}

std::size_t IlpModel::num_booleans() const {
  return static_cast<std::size_t>(std::count_if(variables_.begin(), variables_.end(),
                                                [](const Variable& v) { return v.kind == VarKind::kBoolean; }));
}

Rational IlpModel::expr_min(const LinearExpr& e) const {
  Rational total = e.constant();
  for (const auto& [v, c] : e.coefficients()) {
    const auto& var = variable(v);
    total += c * Rational(static_cast<long>(c > 0 ? var.lower : var.upper));
  }
  return total;
}

Rational IlpModel::expr_max(const LinearExpr& e) const {
  Rational total = e.constant();
  for (const auto& [v, c] : e.coefficients()) {
    const auto& var = variable(v);
    total += c * Rational(static_cast<long>(c > 0 ? var.upper : var.lower));
  }
  return total;
}

Integer IlpModel::dominating_m(const LinearExpr& e) const {
  Rational lo = expr_min(e);
  Rational hi = expr_max(e);
  Rational magnitude = std::max(Rational(abs(lo)), Rational(abs(hi)));
  return ceil_of(magnitude) + 1;
}

bool IlpModel::is_normalized() const {
  for (const auto& c : constraints_) {
    if (c.relation == Relation::kLess || c.relation == Relation::kGreaterEqual) return false;
    if (c.rhs.get_den() != 1) return false;
    for (const auto& t : c.terms) {
      if (t.coeff.get_den() != 1) return false;
    }
  }
  return true;
}

IlpModel normalize(const IlpModel& model) {
  std::vector<LinearConstraint> rows;
  rows.reserve(model.constraints().size());
  for (const auto& c : model.constraints()) {
    Integer denom = c.rhs.get_den();
    for (const auto& t : c.terms) mpz_lcm(denom.get_mpz_t(), denom.get_mpz_t(), t.coeff.get_den_mpz_t());

    LinearConstraint n;
    n.name = c.name;
    const bool negate = c.relation == Relation::kGreaterEqual;
    Rational scale = negate ? Rational(-denom) : Rational(denom);
    for (const auto& t : c.terms) n.terms.push_back({t.coeff * scale, t.var});
    n.rhs = c.rhs * scale;
    switch (c.relation) {
      case Relation::kEqual:
        n.relation = Relation::kEqual;
        break;
      case Relation::kLess:
        n.relation = Relation::kLessEqual;
        n.rhs -= 1;
        break;
      case Relation::kLessEqual:
      case Relation::kGreaterEqual:
        n.relation = Relation::kLessEqual;
        break;
    }
    rows.push_back(std::move(n));
  }
  // Rebuild through the public surface so the copy keeps bounds and quadratics.
  IlpModel result;
  for (const auto& v : model.variables()) {
    if (v.kind == VarKind::kBoolean) {
      result.add_boolean(v.name);
    } else {
      result.add_integer(v.lower, v.upper, v.name);
    }
    result.set_bounds(v.id, v.lower, v.upper);
  }
  for (auto& r : rows) result.add_constraint(std::move(r));
  for (const auto& q : model.quadratics()) result.add_quadratic(q);
  result.set_big_m(model.big_m());
  return result;
}

bool check_assignment(const IlpModel& model, const Assignment& assignment) {
  if (assignment.size() < model.num_variables()) {
    throw std::invalid_argument("assignment does not cover every variable");
  }
  for (const auto& v : model.variables()) {
    int64_t x = assignment[static_cast<std::size_t>(v.id.value)];
    if (x < v.lower || x > v.upper) return false;
  }
  for (const auto& c : model.constraints()) {
    Rational lhs = 0;
    for (const auto& t : c.terms) lhs += t.coeff * Rational(static_cast<long>(assignment[static_cast<std::size_t>(t.var.value)]));
    bool ok = false;
    switch (c.relation) {
      case Relation::kLessEqual: ok = lhs <= c.rhs; break;
      case Relation::kLess: ok = lhs < c.rhs; break;
      case Relation::kEqual: ok = lhs == c.rhs; break;
      case Relation::kGreaterEqual: ok = lhs >= c.rhs; break;
    }
    if (!ok) return false;
  }
  for (const auto& q : model.quadratics()) {
    Integer sum = 0;
    for (const auto& s : q.squares) {
      Integer d(static_cast<long>(assignment[static_cast<std::size_t>(s.var.value)] - s.center));
      sum += d * d;
    }
    if (sum > q.bound) return false;
  }
  return true;
}

namespace {

std::string format_number(const Rational& q) {
  if (q.get_den() == 1) return q.get_num().get_str();
  std::ostringstream s;
  s.precision(17);
  s << q.get_d();
  return s.str();
}

void write_term(std::ostream& out, const Rational& coeff, const std::string& name, bool first) {
  if (first) {
    out << (coeff < 0 ? " -" : " ");
  } else {
    out << (coeff < 0 ? " - " : " + ");
  }
  Rational magnitude = abs(coeff);
  if (magnitude != 1) out << format_number(magnitude) << ' ';
  out << name;
}

}  // namespace

std::string export_lp(const IlpModel& model, const LpExportOptions& options) {
  std::ostringstream out;
  out << "\\ Feasibility model: " << model.num_variables() << " variables, " << model.constraints().size()
      << " constraints\n";
  out << "Minimize\n obj: 0\n";
  out << "Subject To\n";
  std::size_t index = 0;
  for (const auto& c : model.constraints()) {
    std::string name = c.name.empty() ? "c" + std::to_string(index) : c.name;
    ++index;
    if (c.terms.empty() && model.variables().empty()) continue;
    out << ' ' << name << ':';
    if (c.terms.empty()) out << " 0 " << model.variables().front().name;
    bool first = true;
    for (const auto& t : c.terms) {
      write_term(out, t.coeff, model.variable(t.var).name, first);
      first = false;
    }
    Rational rhs = c.rhs;
    switch (c.relation) {
      case Relation::kLessEqual: out << " <= "; break;
      case Relation::kLess:
        out << " <= ";
        rhs -= options.epsilon;
        break;
      case Relation::kEqual: out << " = "; break;
      case Relation::kGreaterEqual: out << " >= "; break;
    }
    out << format_number(rhs) << '\n';
  }
  std::size_t qi = 0;
  for (const auto& q : model.quadratics()) {
    // sum (x - c)^2 <= b  is written as  sum(-2c x) + [ sum x^2 ] <= b - sum c^2
    Integer constant = 0;
    out << " q" << qi++ << ':';
    bool first = true;
    for (const auto& s : q.squares) {
      if (s.center != 0) {
        write_term(out, Rational(static_cast<long>(-2 * s.center)), model.variable(s.var).name, first);
        first = false;
      }
      Integer c(static_cast<long>(s.center));
      constant += c * c;
    }
    out << (first ? " [" : " + [");
    bool first_sq = true;
    for (const auto& s : q.squares) {
      out << (first_sq ? " " : " + ") << model.variable(s.var).name << " ^2";
      first_sq = false;
    }
    out << " ] <= " << Integer(q.bound - constant).get_str() << '\n';
  }
  out << "Bounds\n";
  for (const auto& v : model.variables()) {
    if (v.kind == VarKind::kBoolean && v.lower == 0 && v.upper == 1) continue;
    if (v.lower == v.upper) {
      out << ' ' << v.name << " = " << v.lower << '\n';
    } else {
      out << ' ' << v.lower << " <= " << v.name << " <= " << v.upper << '\n';
    }
  }
  out << "Generals\n";
  for (const auto& v : model.variables()) {
    if (v.kind == VarKind::kInteger) out << ' ' << v.name << '\n';
  }
  out << "Binaries\n";
  for (const auto& v : model.variables()) {
    if (v.kind == VarKind::kBoolean) out << ' ' << v.name << '\n';
  }
  out << "End\n";
  return out.str();
}

}  // namespace qnnv::ilp
