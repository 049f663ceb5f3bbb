#include "simplex.hpp"

#include <limits>

namespace qnnv::ilp::detail {

BoundedSimplex::BoundedSimplex(std::size_t num_structural, const std::vector<Row>& rows)
    : num_structural_(num_structural),
      num_vars_(num_structural + rows.size()),
      lower_(num_vars_),
      upper_(num_vars_),
      value_(num_vars_),
      basic_of_row_(rows.size()),
      row_of_var_(num_vars_, -1),
      tableau_(rows.size(), std::vector<Rational>(num_vars_)) {
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const std::size_t slack = num_structural_ + r;
    basic_of_row_[r] = slack;
    row_of_var_[slack] = static_cast<long>(r);
    for (const auto& [var, coeff] : rows[r].terms) tableau_[r][static_cast<std::size_t>(var)] = Rational(coeff);
    upper_[slack] = {true, Rational(rows[r].rhs)};
    if (rows[r].equality) lower_[slack] = {true, Rational(rows[r].rhs)};
  }
}

void BoundedSimplex::update_nonbasic(std::size_t var, const Rational& v) {
  Rational delta = v - value_[var];
  if (delta == 0) return;
  for (std::size_t r = 0; r < tableau_.size(); ++r) {
    const Rational& a = tableau_[r][var];
    if (sgn(a) != 0) value_[basic_of_row_[r]] += a * delta;
  }
  value_[var] = v;
}

void BoundedSimplex::set_bounds(const std::vector<int64_t>& lower, const std::vector<int64_t>& upper) {
  for (std::size_t j = 0; j < num_structural_; ++j) {
    lower_[j] = {true, Rational(static_cast<long>(lower[j]))};
    upper_[j] = {true, Rational(static_cast<long>(upper[j]))};
  }
  for (std::size_t j = 0; j < num_structural_; ++j) {
    if (row_of_var_[j] >= 0) continue;
    if (below_lower(j)) {
      update_nonbasic(j, lower_[j].value);
    } else if (above_upper(j)) {
      update_nonbasic(j, upper_[j].value);
    }
  }
}

void BoundedSimplex::pivot(std::size_t row, std::size_t entering) {
  const std::size_t leaving = basic_of_row_[row];
  auto& pivot_row = tableau_[row];
  const Rational inv = 1 / pivot_row[entering];

  std::vector<std::size_t> nonzero;
  for (std::size_t c = 0; c < num_vars_; ++c) {
    if (c == entering || sgn(pivot_row[c]) == 0) continue;
    pivot_row[c] *= -inv;
    pivot_row[c].canonicalize();
    nonzero.push_back(c);
  }
  pivot_row[entering] = 0;
  pivot_row[leaving] = inv;
  nonzero.push_back(leaving);

  for (std::size_t r = 0; r < tableau_.size(); ++r) {
    if (r == row) continue;
    auto& other = tableau_[r];
    if (sgn(other[entering]) == 0) continue;
    const Rational factor = other[entering];
    other[entering] = 0;
    for (std::size_t c : nonzero) other[c] += factor * pivot_row[c];
  }

  basic_of_row_[row] = entering;
  row_of_var_[entering] = static_cast<long>(row);
  row_of_var_[leaving] = -1;
  ++pivots_;
}

void BoundedSimplex::pivot_and_update(std::size_t row, std::size_t entering, const Rational& target) {
  const std::size_t basic = basic_of_row_[row];
  const Rational theta = (target - value_[basic]) / tableau_[row][entering];
  value_[basic] = target;
  value_[entering] += theta;
  for (std::size_t r = 0; r < tableau_.size(); ++r) {
    if (r == row) continue;
    const Rational& a = tableau_[r][entering];
    if (sgn(a) != 0) value_[basic_of_row_[r]] += a * theta;
  }
  pivot(row, entering);
}

BoundedSimplex::Outcome BoundedSimplex::check(Deadline deadline) {
  for (uint64_t iteration = 0;; ++iteration) {
    if ((iteration & 63) == 63 && expired(deadline)) return Outcome::kInterrupted;

    std::size_t row = std::numeric_limits<std::size_t>::max();
    std::size_t best_var = std::numeric_limits<std::size_t>::max();
    for (std::size_t r = 0; r < basic_of_row_.size(); ++r) {
      std::size_t var = basic_of_row_[r];
      if (var < best_var && (below_lower(var) || above_upper(var))) {
        best_var = var;
        row = r;
      }
    }
    if (row == std::numeric_limits<std::size_t>::max()) return Outcome::kFeasible;

    const bool increase = below_lower(best_var);
    const auto& coeffs = tableau_[row];
    std::size_t entering = std::numeric_limits<std::size_t>::max();
    for (std::size_t j = 0; j < num_vars_; ++j) {
      int s = sgn(coeffs[j]);
      if (s == 0 || row_of_var_[j] >= 0) continue;
      bool can_rise = !upper_[j].finite || value_[j] < upper_[j].value;
      bool can_fall = !lower_[j].finite || value_[j] > lower_[j].value;
      bool helps = increase ? ((s > 0 && can_rise) || (s < 0 && can_fall))
                            : ((s > 0 && can_fall) || (s < 0 && can_rise));
      if (helps) {
        entering = j;
        break;
      }
    }
    if (entering == std::numeric_limits<std::size_t>::max()) return Outcome::kInfeasible;
    pivot_and_update(row, entering, increase ? lower_[best_var].value : upper_[best_var].value);
  }
}

}  // namespace qnnv::ilp::detail
