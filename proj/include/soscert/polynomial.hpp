#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "soscert/variables.hpp"

namespace soscert {

/// Relative magnitude below which a coefficient is treated as zero after a
/// normalization pass. Keeps cancellation noise from inflating term counts
/// while preserving identities at solver tolerance.
inline constexpr double kCoefficientDropRatio = 1e-14;

/// Sparse power product: (variable index, exponent) pairs sorted by index,
/// exponents strictly positive.
class Monomial {
 public:
  Monomial() = default;

  static Monomial one() { return Monomial(); }

  static Monomial var(int index, int power = 1) {
    Monomial m;
    if (power < 0) throw std::invalid_argument("Monomial: negative exponent");
    if (power > 0) m.exps_.emplace_back(index, power);
    return m;
  }

  static Monomial from_pairs(std::vector<std::pair<int, int>> pairs) {
    std::sort(pairs.begin(), pairs.end());
    Monomial m;
    for (auto& [idx, e] : pairs) {
      if (e < 0) throw std::invalid_argument("Monomial: negative exponent");
      if (e == 0) continue;
      if (!m.exps_.empty() && m.exps_.back().first == idx) {
        m.exps_.back().second += e;
      } else {
        m.exps_.emplace_back(idx, e);
      }
    }
    return m;
  }

  bool is_one() const { return exps_.empty(); }

  int degree() const {
    int d = 0;
    for (auto& [idx, e] : exps_) d += e;
    return d;
  }

  int exponent(int var) const {
    for (auto& [idx, e] : exps_) {
      if (idx == var) return e;
      if (idx > var) break;
    }
    return 0;
  }

  /// Total degree restricted to a set of variable indices (sorted or not).
  int degree_in(std::span<const int> vars) const {
    int d = 0;
    for (auto& [idx, e] : exps_) {
      if (std::find(vars.begin(), vars.end(), idx) != vars.end()) d += e;
    }
    return d;
  }

  const std::vector<std::pair<int, int>>& exponents() const { return exps_; }

  Monomial times(const Monomial& o) const {
    Monomial r;
    auto a = exps_.begin();
    auto b = o.exps_.begin();
    while (a != exps_.end() || b != o.exps_.end()) {
      if (b == o.exps_.end() || (a != exps_.end() && a->first < b->first)) {
        r.exps_.push_back(*a++);
      } else if (a == exps_.end() || b->first < a->first) {
        r.exps_.push_back(*b++);
      } else {
        r.exps_.emplace_back(a->first, a->second + b->second);
        ++a;
        ++b;
      }
    }
    return r;
  }

  /// Rename variables; `map[old_index] = new_index`.
  Monomial remapped(std::span<const int> map) const {
    std::vector<std::pair<int, int>> pairs;
    pairs.reserve(exps_.size());
    for (auto& [idx, e] : exps_) pairs.emplace_back(map[idx], e);
    return from_pairs(std::move(pairs));
  }

  /// Graded lexicographic order: lower total degree sorts first; within a
  /// degree, the monomial with the larger exponent on the earliest differing
  /// variable sorts first (so for two variables: 1, x1, x2, x1^2, x1 x2, x2^2).
  bool operator<(const Monomial& o) const {
    int da = degree(), db = o.degree();
    if (da != db) return da < db;
    auto a = exps_.begin();
    auto b = o.exps_.begin();
    while (a != exps_.end() && b != o.exps_.end()) {
      if (a->first != b->first) return a->first < b->first;
      if (a->second != b->second) return a->second > b->second;
      ++a;
      ++b;
    }
    return false;  // equal (same degree, identical pairs)
  }

  bool operator==(const Monomial& o) const { return exps_ == o.exps_; }
  bool operator!=(const Monomial& o) const { return !(*this == o); }

  double eval(std::span<const double> point) const {
    double v = 1.0;
    for (auto& [idx, e] : exps_) {
      double base = point[idx];
      for (int k = 0; k < e; ++k) v *= base;
    }
    return v;
  }

 private:
  std::vector<std::pair<int, int>> exps_;
};

/// Sparse multivariate polynomial with real coefficients over a fixed
/// variable space. Immutable in spirit: operations return new values.
class Polynomial {
 public:
  explicit Polynomial(SpacePtr space) : space_(std::move(space)) {
    if (!space_) throw std::invalid_argument("Polynomial: null space");
  }

  static Polynomial zero(SpacePtr space) { return Polynomial(std::move(space)); }

  static Polynomial constant(SpacePtr space, double c) {
    Polynomial p(std::move(space));
    if (c != 0.0) p.terms_.emplace(Monomial::one(), c);
    return p;
  }

  static Polynomial variable(SpacePtr space, int index, double coef = 1.0) {
    Polynomial p(std::move(space));
    if (index < 0 || index >= p.space_->size()) {
      throw std::invalid_argument("Polynomial::variable: index out of range");
    }
    if (coef != 0.0) p.terms_.emplace(Monomial::var(index), coef);
    return p;
  }

  static Polynomial monomial(SpacePtr space, Monomial m, double coef) {
    Polynomial p(std::move(space));
    if (coef != 0.0) p.terms_.emplace(std::move(m), coef);
    return p;
  }

  const SpacePtr& space() const { return space_; }
  const std::map<Monomial, double>& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }
  int term_count() const { return static_cast<int>(terms_.size()); }

  int degree() const {
    int d = 0;
    for (auto& [m, c] : terms_) d = std::max(d, m.degree());
    return d;
  }

  double coefficient(const Monomial& m) const {
    auto it = terms_.find(m);
    return it == terms_.end() ? 0.0 : it->second;
  }

  double max_abs_coefficient() const {
    double v = 0.0;
    for (auto& [m, c] : terms_) v = std::max(v, std::abs(c));
    return v;
  }

  void add_term(const Monomial& m, double coef) {
    auto [it, inserted] = terms_.emplace(m, coef);
    if (!inserted) {
      it->second += coef;
      if (it->second == 0.0) terms_.erase(it);
    } else if (coef == 0.0) {
      terms_.erase(it);
    }
  }

  /// Drop terms whose magnitude falls below kCoefficientDropRatio times the
  /// largest coefficient magnitude.
  void normalize() {
    double cutoff = kCoefficientDropRatio * max_abs_coefficient();
    for (auto it = terms_.begin(); it != terms_.end();) {
      it = std::abs(it->second) <= cutoff ? terms_.erase(it) : std::next(it);
    }
  }

  Polynomial operator-() const {
    Polynomial r(space_);
    r.terms_ = terms_;
    for (auto& [m, c] : r.terms_) c = -c;
    return r;
  }

  Polynomial& operator+=(const Polynomial& o) {
    require_same_space(o);
    for (auto& [m, c] : o.terms_) add_term(m, c);
    normalize();
    return *this;
  }

  Polynomial& operator-=(const Polynomial& o) {
    require_same_space(o);
    for (auto& [m, c] : o.terms_) add_term(m, -c);
    normalize();
    return *this;
  }

  Polynomial& operator*=(double s) {
    if (s == 0.0) {
      terms_.clear();
    } else {
      for (auto& [m, c] : terms_) c *= s;
    }
    return *this;
  }

  friend Polynomial operator+(Polynomial a, const Polynomial& b) { return a += b; }
  friend Polynomial operator-(Polynomial a, const Polynomial& b) { return a -= b; }
  friend Polynomial operator*(Polynomial a, double s) { return a *= s; }
  friend Polynomial operator*(double s, Polynomial a) { return a *= s; }

  friend Polynomial operator*(const Polynomial& a, const Polynomial& b) {
    a.require_same_space(b);
    Polynomial r(a.space_);
    for (auto& [ma, ca] : a.terms_) {
      for (auto& [mb, cb] : b.terms_) {
        r.add_term(ma.times(mb), ca * cb);
      }
    }
    r.normalize();
    return r;
  }

  /// Evaluate at a dense point covering every variable of the space.
  double eval(std::span<const double> point) const {
    if (static_cast<int>(point.size()) != space_->size()) {
      throw std::invalid_argument("Polynomial::eval: point size mismatch");
    }
    double sum = 0.0;
    for (auto& [m, c] : terms_) sum += c * m.eval(point);
    return sum;
  }

  /// Evaluate from a name->value map; every variable appearing in the
  /// polynomial must be assigned.
  double eval(const std::map<std::string, double>& point) const {
    std::vector<double> dense(space_->size(),
                              std::numeric_limits<double>::quiet_NaN());
    for (auto& [name, v] : point) {
      int idx = space_->index_of(name);
      if (idx >= 0) dense[idx] = v;
    }
    for (auto& [m, c] : terms_) {
      for (auto& [idx, e] : m.exponents()) {
        if (std::isnan(dense[idx])) {
          throw std::invalid_argument("Polynomial::eval: variable '" +
                                      space_->name(idx) + "' unassigned");
        }
      }
    }
    double sum = 0.0;
    for (auto& [m, c] : terms_) sum += c * m.eval(dense);
    return sum;
  }

  /// Substitute an affine expression (degree <= 1 polynomial in a target
  /// space) for every variable. `assignments[i]` replaces variable i; every
  /// variable appearing in the polynomial must have an assignment.
  Polynomial substitute_affine(
      const SpacePtr& target,
      const std::vector<std::optional<Polynomial>>& assignments) const {
    if (static_cast<int>(assignments.size()) != space_->size()) {
      throw std::invalid_argument(
          "substitute_affine: one assignment slot per source variable required");
    }
    for (auto& a : assignments) {
      if (!a) continue;
      if (!same_space(a->space(), target)) {
        throw std::invalid_argument(
            "substitute_affine: assignment not in the target space");
      }
      if (a->degree() > 1) {
        throw std::invalid_argument("substitute_affine: assignment not affine");
      }
    }
    Polynomial result(target);
    for (auto& [m, c] : terms_) {
      Polynomial term = Polynomial::constant(target, c);
      for (auto& [idx, e] : m.exponents()) {
        if (!assignments[idx]) {
          throw std::invalid_argument("substitute_affine: variable '" +
                                      space_->name(idx) + "' unassigned");
        }
        for (int k = 0; k < e; ++k) term = term * (*assignments[idx]);
      }
      result += term;
    }
    result.normalize();
    return result;
  }

  /// Rename variables into another space; `map[i]` gives the target index of
  /// source variable i (-1 allowed only for variables that do not occur).
  Polynomial remapped(const SpacePtr& target, std::span<const int> map) const {
    Polynomial r(target);
    for (auto& [m, c] : terms_) {
      for (auto& [idx, e] : m.exponents()) {
        if (map[idx] < 0) {
          throw std::invalid_argument("remapped: variable '" +
                                      space_->name(idx) + "' has no image");
        }
      }
      r.add_term(m.remapped(map), c);
    }
    return r;
  }

  std::string to_string() const {
    if (terms_.empty()) return "0";
    std::ostringstream os;
    bool first = true;
    for (auto& [m, c] : terms_) {
      if (!first) os << (c < 0 ? " - " : " + ");
      else if (c < 0) os << "-";
      first = false;
      double a = std::abs(c);
      bool wrote_coef = false;
      if (m.is_one() || a != 1.0) {
        os << a;
        wrote_coef = true;
      }
      for (auto& [idx, e] : m.exponents()) {
        if (wrote_coef) os << "*";
        os << space_->name(idx);
        if (e > 1) os << "^" << e;
        wrote_coef = true;
      }
    }
    return os.str();
  }

 private:
  void require_same_space(const Polynomial& o) const {
    if (!same_space(space_, o.space_)) {
      throw std::invalid_argument("Polynomial: mismatched variable spaces");
    }
  }

  SpacePtr space_;
  std::map<Monomial, double> terms_;
};

namespace detail {

inline void enumerate_monomials(std::span<const int> vars, int pos,
                                int remaining, Monomial current,
                                std::vector<Monomial>& out) {
  if (pos == static_cast<int>(vars.size())) {
    out.push_back(std::move(current));
    return;
  }
  for (int e = 0; e <= remaining; ++e) {
    Monomial next =
        e == 0 ? current : current.times(Monomial::var(vars[pos], e));
    enumerate_monomials(vars, pos + 1, remaining - e, std::move(next), out);
  }
}

}  // namespace detail

/// All monomials in the given variables with total degree <= max_degree,
/// in graded lexicographic order. Size is binom(k + d, d).
inline std::vector<Monomial> monomial_basis(std::span<const int> vars,
                                            int max_degree) {
  if (max_degree < 0) {
    throw std::invalid_argument("monomial_basis: negative degree");
  }
  std::vector<Monomial> out;
  detail::enumerate_monomials(vars, 0, max_degree, Monomial::one(), out);
  std::sort(out.begin(), out.end());
  return out;
}

/// Basis over the variables of the selected groups of a space.
inline std::vector<Monomial> monomial_basis(const VariableSpace& space,
                                            std::span<const VarGroup> groups,
                                            int max_degree) {
  std::vector<int> vars;
  for (VarGroup g : groups) {
    const auto& idx = space.group_indices(g);
    vars.insert(vars.end(), idx.begin(), idx.end());
  }
  std::sort(vars.begin(), vars.end());
  return monomial_basis(vars, max_degree);
}

/// Sum of squared state variables |x|^2 (or of any group) as a polynomial.
inline Polynomial group_norm_squared(const SpacePtr& space, VarGroup g) {
  Polynomial p(space);
  for (int idx : space->group_indices(g)) {
    p.add_term(Monomial::var(idx, 2), 1.0);
  }
  return p;
}

}  // namespace soscert
