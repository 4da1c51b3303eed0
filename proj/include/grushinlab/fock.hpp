#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "grushinlab/multi_index.hpp"
#include "grushinlab/phase_polynomial.hpp"

namespace grushinlab {

using Eigen::MatrixXcd;
using Eigen::VectorXcd;

struct TrustExhausted : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Truncated n-dimensional Hermite basis: all occupation multi-indices nu with
// |nu| <= n_cut + guard, enumerated in graded-lex order. Convention:
// [a, a^dag] = 1, X = (a + a^dag)/sqrt(2), so quantize(x^2 + xi^2) = 2N + 1.
class FockBasis {
 public:
  FockBasis(int n, int n_cut, int guard) : n_(n), n_cut_(n_cut), guard_(guard) {
    if (n_cut < 1 || guard < 0) throw std::invalid_argument("FockBasis: need n_cut >= 1, guard >= 0");
    enumerate(MultiIndex(static_cast<std::size_t>(n)), 0, n_total());
    if (states_.size() > 200000) throw std::invalid_argument("FockBasis: basis size overflow guard");
    std::sort(states_.begin(), states_.end(),
              [](const MultiIndex& a, const MultiIndex& b) { return GradedLexLess{}(a, b); });
    for (std::size_t i = 0; i < states_.size(); ++i) index_[states_[i].e] = static_cast<int>(i);
    build_ladders();
  }

  int n() const { return n_; }
  int n_cut() const { return n_cut_; }
  int guard() const { return guard_; }
  int n_total() const { return n_cut_ + guard_; }
  int size() const { return static_cast<int>(states_.size()); }

  const MultiIndex& state(int i) const { return states_[static_cast<std::size_t>(i)]; }
  int state_degree(int i) const { return states_[static_cast<std::size_t>(i)].degree(); }

  int index_of(const std::vector<int>& nu) const {
    auto it = index_.find(nu);
    return it == index_.end() ? -1 : it->second;
  }

  // Number of basis states with degree <= d.
  int block_size(int d) const {
    int c = 0;
    while (c < size() && state_degree(c) <= d) ++c;
    return c;
  }

  const MatrixXcd& position_op(int j) const { return X_[static_cast<std::size_t>(j)]; }
  const MatrixXcd& momentum_op(int j) const { return D_[static_cast<std::size_t>(j)]; }
  const MatrixXcd& lowering_op(int j) const { return a_[static_cast<std::size_t>(j)]; }
  const MatrixXcd& raising_op(int j) const { return adag_[static_cast<std::size_t>(j)]; }

 private:
  void enumerate(MultiIndex nu, int pos, int budget) {
    if (pos == n_) {
      states_.push_back(nu);
      return;
    }
    for (int k = 0; k <= budget; ++k) {
      nu[static_cast<std::size_t>(pos)] = k;
      enumerate(nu, pos + 1, budget - k);
    }
  }

  void build_ladders() {
    const int M = size();
    for (int j = 0; j < n_; ++j) {
      MatrixXcd low = MatrixXcd::Zero(M, M);
      for (int i = 0; i < M; ++i) {
        const MultiIndex& nu = states_[static_cast<std::size_t>(i)];
        const int nj = nu[static_cast<std::size_t>(j)];
        if (nj == 0) continue;
        MultiIndex down = nu.minus_unit(static_cast<std::size_t>(j));
        const int k = index_.at(down.e);
        low(k, i) = std::sqrt(static_cast<double>(nj));  // a_j |nu> = sqrt(nu_j)|nu - e_j>
      }
      a_.push_back(low);
      adag_.push_back(low.adjoint());
      const double s = 1.0 / std::sqrt(2.0);
      X_.push_back(s * (a_.back() + adag_.back()));
      D_.push_back((a_.back() - adag_.back()) * cd(0.0, -1.0) * s);  // (a - a^dag)/(i sqrt 2)
    }
  }

  int n_, n_cut_, guard_;
  std::vector<MultiIndex> states_;
  std::map<std::vector<int>, int> index_;
  std::vector<MatrixXcd> a_, adag_, X_, D_;
};

// Dense matrix of a quantized symbol with trusted-degree metadata: entries
// <mu|A|nu> with |mu|,|nu| <= trusted_degree are exact up to round-off.
struct FockOperator {
  const FockBasis* basis = nullptr;
  MatrixXcd mat;
  int trusted_degree = 0;
  int degree_leakage = 0;  // symbol degree; how far one application can move mass

  static FockOperator identity(const FockBasis& b) {
    return {&b, MatrixXcd::Identity(b.size(), b.size()), b.n_total(), 0};
  }

  FockOperator adjoint() const { return {basis, mat.adjoint(), trusted_degree, degree_leakage}; }

  FockOperator operator+(const FockOperator& o) const {
    require_same_basis(o);
    return {basis, mat + o.mat, std::min(trusted_degree, o.trusted_degree),
            std::max(degree_leakage, o.degree_leakage)};
  }
  FockOperator operator-(const FockOperator& o) const {
    require_same_basis(o);
    return {basis, mat - o.mat, std::min(trusted_degree, o.trusted_degree),
            std::max(degree_leakage, o.degree_leakage)};
  }
  FockOperator operator*(const FockOperator& o) const {
    require_same_basis(o);
    return {basis, mat * o.mat,
            std::min(trusted_degree - o.degree_leakage, o.trusted_degree - degree_leakage),
            degree_leakage + o.degree_leakage};
  }
  FockOperator scaled(cd s) const { return {basis, s * mat, trusted_degree, degree_leakage}; }
  FockOperator shifted(cd s) const {  // A + s I
    return {basis, mat + s * MatrixXcd::Identity(mat.rows(), mat.cols()), trusted_degree,
            degree_leakage};
  }

  // Matrix restricted to the block of states with degree <= d.
  MatrixXcd trusted_block(int d) const {
    const int m = basis->block_size(d);
    return mat.topLeftCorner(m, m);
  }

  void require_same_basis(const FockOperator& o) const {
    if (basis != o.basis) throw std::invalid_argument("FockOperator: basis mismatch");
  }
};

struct FockVector {
  const FockBasis* basis = nullptr;
  VectorXcd v;
  int trusted_degree = 0;

  static FockVector ground(const FockBasis& b) {
    VectorXcd v = VectorXcd::Zero(b.size());
    v(0) = 1.0;
    return {&b, v, b.n_total()};
  }

  double norm() const { return v.norm(); }
};

inline FockBasis build_basis(int n, int n_cut, int guard) { return FockBasis(n, n_cut, guard); }

namespace detail {

// Weyl quantization of a monomial X^gamma by the symmetrization recursion
// Op(x_j s) = (X_j Op(s) + Op(s) X_j)/2, exact because x_j * s + s * x_j
// = 2 x_j s under the Moyal product. Order of variable extraction does not
// matter (tested).
inline MatrixXcd quantize_monomial(const FockBasis& b,
                                   std::map<std::vector<int>, MatrixXcd>& memo,
                                   const MultiIndex& gamma) {
  auto it = memo.find(gamma.e);
  if (it != memo.end()) return it->second;
  if (gamma.degree() == 0) return MatrixXcd::Identity(b.size(), b.size());
  std::size_t var = 0;
  while (gamma[var] == 0) ++var;
  const MatrixXcd inner = quantize_monomial(b, memo, gamma.minus_unit(var));
  const MatrixXcd& V = var < static_cast<std::size_t>(b.n())
                           ? b.position_op(static_cast<int>(var))
                           : b.momentum_op(static_cast<int>(var) - b.n());
  MatrixXcd out = 0.5 * (V * inner + inner * V);
  memo.emplace(gamma.e, out);
  return out;
}

}  // namespace detail

template <class Scalar>
FockOperator quantize(const PhasePolynomial<Scalar>& sym, const FockBasis& basis) {
  const Poly a = sym.to_double();
  if (a.dim() != basis.n()) throw std::invalid_argument("quantize: dimension mismatch");
  const int deg = std::max(a.degree(), 0);
  if (deg > basis.n_total())
    throw std::invalid_argument("quantize: symbol degree exceeds basis range");

  std::map<std::vector<int>, MatrixXcd> memo;
  MatrixXcd M = MatrixXcd::Zero(basis.size(), basis.size());
  for (const auto& [gamma, c] : a.terms()) M += c * detail::quantize_monomial(basis, memo, gamma);

  FockOperator op;
  op.basis = &basis;
  op.mat = std::move(M);
  op.trusted_degree = basis.n_total() - deg;
  op.degree_leakage = deg;
  return op;
}

// Left-to-right application with trust bookkeeping: ops[0] is applied first.
inline FockVector apply_chain(const std::vector<FockOperator>& ops, const FockVector& v0) {
  FockVector v = v0;
  for (const auto& op : ops) {
    if (op.basis != v.basis) throw std::invalid_argument("apply_chain: basis mismatch");
    const int t = std::min(v.trusted_degree - op.degree_leakage, op.trusted_degree);
    if (t < 0)
      throw TrustExhausted("apply_chain: trusted degree exhausted; increase the basis guard");
    v.v = op.mat * v.v;
    v.trusted_degree = t;
  }
  return v;
}

// Hermite coefficients of the Gaussian exp((i/2) <x, B+ x>), Im B+ > 0,
// via the ladder recurrence a f = T a^dag f with T = (I - alpha)(I + alpha)^{-1},
// alpha = -i B+. Normalized on return.
inline FockVector project_gaussian(const MatrixXcd& Bplus, const FockBasis& basis) {
  const int n = basis.n();
  if (Bplus.rows() != n || Bplus.cols() != n)
    throw std::invalid_argument("project_gaussian: B+ must be n x n");
  const MatrixXcd alpha = cd(0, -1) * Bplus;
  const MatrixXcd I = MatrixXcd::Identity(n, n);
  const MatrixXcd iplus = I + alpha;
  Eigen::FullPivLU<MatrixXcd> lu(iplus);
  if (!lu.isInvertible())
    throw std::runtime_error("project_gaussian: I + alpha singular (ill-conditioned B+)");
  const MatrixXcd T = (I - alpha) * lu.inverse();
  Eigen::JacobiSVD<MatrixXcd> svdT(T);
  if (svdT.singularValues()(0) > 1.0 - 1e-12)
    throw std::runtime_error("project_gaussian: divergent recurrence (ill-conditioned B+)");

  VectorXcd c = VectorXcd::Zero(basis.size());
  c(0) = 1.0;
  // Fill by increasing degree; only even total degrees are populated.
  for (int i = 1; i < basis.size(); ++i) {
    const MultiIndex& nu = basis.state(i);
    if (nu.degree() % 2 != 0) continue;
    std::size_t j = 0;
    while (nu[j] == 0) ++j;
    const MultiIndex mu = nu.minus_unit(j);  // c_{mu + e_j} sqrt(mu_j + 1) = sum_k T_{jk} sqrt(mu_k) c_{mu - e_k}
    cd acc = 0.0;
    for (int k = 0; k < n; ++k) {
      const int mk = mu[static_cast<std::size_t>(k)];
      if (mk == 0) continue;
      const int src = basis.index_of(mu.minus_unit(static_cast<std::size_t>(k)).e);
      acc += T(static_cast<int>(j), k) * std::sqrt(static_cast<double>(mk)) * c(src);
    }
    c(i) = acc / std::sqrt(static_cast<double>(mu[j] + 1));
  }
  const double nrm = c.norm();
  if (!(nrm > 0.0) || !std::isfinite(nrm))
    throw std::runtime_error("project_gaussian: recurrence produced a non-finite vector");
  return {&basis, c / nrm, basis.n_total()};
}

}  // namespace grushinlab
