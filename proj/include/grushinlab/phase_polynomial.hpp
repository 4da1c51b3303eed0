#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <stdexcept>
#include <utility>
#include <vector>

#include "grushinlab/multi_index.hpp"
#include "grushinlab/rational_complex.hpp"

namespace grushinlab {

using cd = std::complex<double>;

template <class Scalar>
struct ScalarOps;

template <>
struct ScalarOps<cd> {
  static cd zero() { return {0.0, 0.0}; }
  static cd one() { return {1.0, 0.0}; }
  static cd from_int(long long k) { return {static_cast<double>(k), 0.0}; }
  static cd i_unit() { return {0.0, 1.0}; }
  // Canonical-form drop threshold; keeps exact zeros out of the term map.
  static bool is_negligible(const cd& c) { return std::abs(c) < 1e-300; }
  static cd conj(const cd& c) { return std::conj(c); }
  static cd to_complex(const cd& c) { return c; }
};

template <>
struct ScalarOps<RationalComplex> {
  static RationalComplex zero() { return {}; }
  static RationalComplex one() { return RationalComplex(1); }
  static RationalComplex from_int(long long k) { return RationalComplex(k); }
  static RationalComplex i_unit() { return RationalComplex::i_unit(); }
  static bool is_negligible(const RationalComplex& c) { return c.is_zero(); }
  static RationalComplex conj(const RationalComplex& c) { return {c.re, -c.im}; }
  static cd to_complex(const RationalComplex& c) { return c.to_complex(); }
};

// Complex-coefficient polynomial on phase space R^{2n}; the universal symbol
// carrier. Terms are kept in canonical form: graded-lex ordered, no stored
// zero coefficients.
template <class Scalar>
class PhasePolynomial {
 public:
  using Ops = ScalarOps<Scalar>;
  using TermMap = std::map<MultiIndex, Scalar, GradedLexLess>;

  explicit PhasePolynomial(int dim) : dim_(dim) {
    if (dim < 1) throw std::invalid_argument("PhasePolynomial: dim must be >= 1");
  }

  static PhasePolynomial constant(int dim, Scalar c) {
    PhasePolynomial p(dim);
    p.add_term(MultiIndex(2 * static_cast<std::size_t>(dim)), c);
    return p;
  }

  static PhasePolynomial monomial(int dim, const MultiIndex& alpha, Scalar c) {
    PhasePolynomial p(dim);
    if (alpha.size() != 2 * static_cast<std::size_t>(dim))
      throw std::invalid_argument("monomial: multi-index length must be 2n");
    p.add_term(alpha, c);
    return p;
  }

  // Convenience for n-dim symbols: variable i in 0..2n-1 (x_0..x_{n-1},
  // xi_0..xi_{n-1}) raised to power k.
  static PhasePolynomial variable(int dim, int i, int k = 1) {
    MultiIndex a(2 * static_cast<std::size_t>(dim));
    a[static_cast<std::size_t>(i)] = k;
    return monomial(dim, a, Ops::one());
  }

  int dim() const { return dim_; }
  const TermMap& terms() const { return terms_; }
  bool empty() const { return terms_.empty(); }

  int degree() const {
    if (terms_.empty()) return -1;  // zero polynomial
    return terms_.rbegin()->first.degree();
  }

  void add_term(const MultiIndex& alpha, const Scalar& c) {
    if (alpha.size() != 2 * static_cast<std::size_t>(dim_))
      throw std::invalid_argument("add_term: multi-index length must be 2n");
    auto it = terms_.find(alpha);
    if (it == terms_.end()) {
      if (!Ops::is_negligible(c)) terms_.emplace(alpha, c);
    } else {
      it->second = it->second + c;
      if (Ops::is_negligible(it->second)) terms_.erase(it);
    }
  }

  Scalar coeff(const MultiIndex& alpha) const {
    auto it = terms_.find(alpha);
    return it == terms_.end() ? Ops::zero() : it->second;
  }

  PhasePolynomial operator+(const PhasePolynomial& o) const {
    check_dim(o);
    PhasePolynomial r(*this);
    for (const auto& [a, c] : o.terms_) r.add_term(a, c);
    return r;
  }

  PhasePolynomial operator-(const PhasePolynomial& o) const {
    check_dim(o);
    PhasePolynomial r(*this);
    for (const auto& [a, c] : o.terms_) r.add_term(a, -c);
    return r;
  }

  PhasePolynomial operator*(const PhasePolynomial& o) const {
    check_dim(o);
    PhasePolynomial r(dim_);
    for (const auto& [a, ca] : terms_)
      for (const auto& [b, cb] : o.terms_) r.add_term(a.plus(b), ca * cb);
    return r;
  }

  PhasePolynomial scaled(const Scalar& s) const {
    PhasePolynomial r(dim_);
    for (const auto& [a, c] : terms_) r.add_term(a, c * s);
    return r;
  }

  PhasePolynomial conjugated() const {
    PhasePolynomial r(dim_);
    for (const auto& [a, c] : terms_) r.add_term(a, Ops::conj(c));
    return r;
  }

  PhasePolynomial derivative(std::size_t var) const {
    PhasePolynomial r(dim_);
    for (const auto& [a, c] : terms_) {
      if (a[var] == 0) continue;
      r.add_term(a.minus_unit(var), c * Ops::from_int(a[var]));
    }
    return r;
  }

  // Keep only terms of total degree g.
  PhasePolynomial homogeneous_part(int g) const {
    PhasePolynomial r(dim_);
    for (const auto& [a, c] : terms_)
      if (a.degree() == g) r.add_term(a, c);
    return r;
  }

  // Largest coefficient magnitude, in double precision.
  double coeff_norm() const {
    double m = 0.0;
    for (const auto& [a, c] : terms_) m = std::max(m, std::abs(Ops::to_complex(c)));
    return m;
  }

  PhasePolynomial<cd> to_double() const {
    PhasePolynomial<cd> r(dim_);
    for (const auto& [a, c] : terms_) r.add_term(a, Ops::to_complex(c));
    return r;
  }

 private:
  void check_dim(const PhasePolynomial& o) const {
    if (o.dim_ != dim_) throw std::invalid_argument("PhasePolynomial: dimension mismatch");
  }

  int dim_;
  TermMap terms_;
};

enum class Parity { even, odd, mixed };

template <class Scalar>
Parity symbol_parity(const PhasePolynomial<Scalar>& a) {
  bool has_even = false, has_odd = false;
  for (const auto& [alpha, c] : a.terms()) (alpha.degree() % 2 == 0 ? has_even : has_odd) = true;
  if (has_even && has_odd) return Parity::mixed;
  return has_odd ? Parity::odd : Parity::even;
}

template <class Scalar>
cd symbol_eval(const PhasePolynomial<Scalar>& a, const std::vector<cd>& X) {
  if (X.size() != 2 * static_cast<std::size_t>(a.dim()))
    throw std::invalid_argument("symbol_eval: vector length must be 2n");
  cd total = 0.0;
  for (const auto& [alpha, c] : a.terms()) {
    cd v = ScalarOps<Scalar>::to_complex(c);
    for (std::size_t i = 0; i < X.size(); ++i)
      for (int k = 0; k < alpha[i]; ++k) v *= X[i];
    total += v;
  }
  return total;
}

namespace detail {

// Polynomial on the doubled phase space (X1, X2), used only inside the star
// product. Key is the concatenated exponent pair.
struct PairGradedLexLess {
  bool operator()(const std::pair<MultiIndex, MultiIndex>& a,
                  const std::pair<MultiIndex, MultiIndex>& b) const {
    GradedLexLess less;
    if (less(a.first, b.first)) return true;
    if (less(b.first, a.first)) return false;
    return less(a.second, b.second);
  }
};

template <class Scalar>
using TensorMap = std::map<std::pair<MultiIndex, MultiIndex>, Scalar, PairGradedLexLess>;

template <class Scalar>
void tensor_add(TensorMap<Scalar>& m, const MultiIndex& a, const MultiIndex& b, const Scalar& c) {
  if (ScalarOps<Scalar>::is_negligible(c)) return;
  auto key = std::make_pair(a, b);
  auto it = m.find(key);
  if (it == m.end()) {
    m.emplace(std::move(key), c);
  } else {
    it->second = it->second + c;
    if (ScalarOps<Scalar>::is_negligible(it->second)) m.erase(it);
  }
}

// One application of sigma(d_{X1}, d_{X2}) = d_{xi1} . d_{x2} - d_{x1} . d_{xi2}.
template <class Scalar>
TensorMap<Scalar> apply_sigma_bidiff(const TensorMap<Scalar>& m, int n) {
  using Ops = ScalarOps<Scalar>;
  TensorMap<Scalar> out;
  for (const auto& [key, c] : m) {
    const MultiIndex& a = key.first;
    const MultiIndex& b = key.second;
    for (int j = 0; j < n; ++j) {
      const std::size_t xj = static_cast<std::size_t>(j);
      const std::size_t kj = static_cast<std::size_t>(n + j);
      if (a[kj] > 0 && b[xj] > 0)
        tensor_add(out, a.minus_unit(kj), b.minus_unit(xj),
                   c * Ops::from_int(static_cast<long long>(a[kj]) * b[xj]));
      if (a[xj] > 0 && b[kj] > 0)
        tensor_add(out, a.minus_unit(xj), b.minus_unit(kj),
                   -(c * Ops::from_int(static_cast<long long>(a[xj]) * b[kj])));
    }
  }
  return out;
}

}  // namespace detail

// Moyal product: the Weyl symbol of Op(a) Op(b), via the exact finite sum
//   sum_p (1/p!) ((1/2i) sigma(d_{X1}, d_{X2}))^p a(X1) b(X2) |_{X1=X2}.
// The sum terminates at p = min(deg a, deg b).
template <class Scalar>
PhasePolynomial<Scalar> star(const PhasePolynomial<Scalar>& a, const PhasePolynomial<Scalar>& b) {
  using Ops = ScalarOps<Scalar>;
  if (a.dim() != b.dim()) throw std::invalid_argument("star: dimension mismatch");
  const int n = a.dim();

  detail::TensorMap<Scalar> tensor;
  for (const auto& [alpha, ca] : a.terms())
    for (const auto& [beta, cb] : b.terms()) detail::tensor_add(tensor, alpha, beta, ca * cb);

  const int pmax = std::max(0, std::min(a.degree(), b.degree()));
  // 1/(2i) = -i/2
  const Scalar half_over_i = -(Ops::i_unit() / Ops::from_int(2));

  PhasePolynomial<Scalar> result(n);
  Scalar prefactor = Ops::one();  // (1/p!) (1/2i)^p
  for (int p = 0; p <= pmax; ++p) {
    if (p > 0) {
      tensor = detail::apply_sigma_bidiff(tensor, n);
      prefactor = prefactor * half_over_i / Ops::from_int(p);
    }
    for (const auto& [key, c] : tensor) result.add_term(key.first.plus(key.second), c * prefactor);
    if (tensor.empty()) break;
  }
  return result;
}

// Poisson bracket {a,b} = sum_j d_xi_j a d_x_j b - d_x_j a d_xi_j b.
template <class Scalar>
PhasePolynomial<Scalar> poisson_bracket(const PhasePolynomial<Scalar>& a,
                                        const PhasePolynomial<Scalar>& b) {
  if (a.dim() != b.dim()) throw std::invalid_argument("poisson_bracket: dimension mismatch");
  const int n = a.dim();
  PhasePolynomial<Scalar> r(n);
  for (int j = 0; j < n; ++j) {
    const std::size_t xj = static_cast<std::size_t>(j), kj = static_cast<std::size_t>(n + j);
    r = r + a.derivative(kj) * b.derivative(xj) - a.derivative(xj) * b.derivative(kj);
  }
  return r;
}

using Poly = PhasePolynomial<cd>;
using PolyQ = PhasePolynomial<RationalComplex>;

}  // namespace grushinlab
