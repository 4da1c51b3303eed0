#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <stdexcept>
#include <vector>

#include "grushinlab/phase_polynomial.hpp"
#include "grushinlab/symbol_jet.hpp"

namespace grushinlab {

using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

constexpr double kPi = 3.14159265358979323846;

// q(X) = X^T M X with M complex symmetric (symmetrized on construction).
struct QuadraticForm {
  int n = 1;
  MatrixXcd M;

  QuadraticForm(int dim, const MatrixXcd& mat) : n(dim), M(0.5 * (mat + mat.transpose())) {
    if (mat.rows() != 2 * dim || mat.cols() != 2 * dim)
      throw std::invalid_argument("QuadraticForm: matrix must be 2n x 2n");
  }

  // From the |gamma| = 2 part of a polynomial symbol.
  static QuadraticForm from_poly(const Poly& q2) {
    const int n = q2.dim();
    MatrixXcd M = MatrixXcd::Zero(2 * n, 2 * n);
    for (const auto& [alpha, c] : q2.terms()) {
      if (alpha.degree() != 2) throw std::invalid_argument("from_poly: symbol must be quadratic");
      int i = -1, j = -1;
      for (std::size_t v = 0; v < alpha.size(); ++v) {
        if (alpha[v] == 2) i = j = static_cast<int>(v);
        if (alpha[v] == 1) (i < 0 ? i : j) = static_cast<int>(v);
      }
      if (i == j) {
        M(i, i) += c;
      } else {
        M(i, j) += 0.5 * c;
        M(j, i) += 0.5 * c;
      }
    }
    return {n, M};
  }

  template <class Vec>
  cd eval(const Vec& X) const {
    VectorXcd v(2 * n);
    for (int i = 0; i < 2 * n; ++i) v(i) = X(i);
    return (v.transpose() * M * v)(0);
  }

  Poly to_poly() const {
    Poly q(n);
    for (int i = 0; i < 2 * n; ++i)
      for (int j = i; j < 2 * n; ++j) {
        MultiIndex a(2 * static_cast<std::size_t>(n));
        a[static_cast<std::size_t>(i)] += 1;
        a[static_cast<std::size_t>(j)] += 1;
        q.add_term(a, (i == j ? M(i, i) : 2.0 * M(i, j)));
      }
    return q;
  }
};

// The fixed symplectic matrix with sigma(X, Z) = X^T J Z for
// sigma((x,xi),(y,eta)) = xi.y - x.eta.
inline MatrixXd symplectic_J(int n) {
  MatrixXd J = MatrixXd::Zero(2 * n, 2 * n);
  J.topRightCorner(n, n) = -MatrixXd::Identity(n, n);
  J.bottomLeftCorner(n, n) = MatrixXd::Identity(n, n);
  return J;
}

struct HamiltonMap {
  int n = 1;
  MatrixXcd F;

  MatrixXd ReF() const { return F.real(); }
  MatrixXd ImF() const { return F.imag(); }
};

// F = J^{-1} M, so that q(X;Y) = sigma(X, FY).
inline HamiltonMap hamilton_map(const QuadraticForm& q) {
  const MatrixXd J = symplectic_J(q.n);
  HamiltonMap H;
  H.n = q.n;
  H.F = J.transpose() * q.M;  // J^{-1} = J^T
  return H;
}

// Deterministic unit-sphere samples in R^{2n}.
inline std::vector<VectorXd> sphere_samples(int two_n, int count, unsigned seed = 20240901u) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<VectorXd> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int s = 0; s < count; ++s) {
    VectorXd v(two_n);
    do {
      for (int i = 0; i < two_n; ++i) v(i) = gauss(rng);
    } while (v.norm() < 1e-8);
    out.push_back(v.normalized());
  }
  return out;
}

struct EllipticityResult {
  bool elliptic = false;
  double min_abs = 0.0;
  VectorXd witness;  // minimizer of |q| on the unit sphere
};

// Dense sphere sampling plus projected-gradient polish on |q|^2.
inline EllipticityResult check_elliptic(const QuadraticForm& q, double eps_ell = 1e-6) {
  const int two_n = 2 * q.n;
  auto polish = [&](VectorXd X) {
    double f = std::norm(q.eval(X));
    double step = 0.1;
    for (int it = 0; it < 200 && step > 1e-14; ++it) {
      const VectorXcd Xc = X.cast<cd>();
      const cd qv = q.eval(X);
      const VectorXd grad = 4.0 * (std::conj(qv) * (q.M * Xc)).real();
      VectorXd Y = (X - step * grad).normalized();
      const double fy = std::norm(q.eval(Y));
      if (fy < f) {
        X = Y;
        f = fy;
        step *= 1.3;
      } else {
        step *= 0.5;
      }
    }
    return std::make_pair(X, f);
  };

  EllipticityResult res;
  res.min_abs = std::numeric_limits<double>::infinity();
  std::vector<std::pair<double, VectorXd>> best;
  for (const auto& X : sphere_samples(two_n, 10000 * q.n)) {
    const double f = std::norm(q.eval(X));
    best.emplace_back(f, X);
  }
  std::partial_sort(best.begin(), best.begin() + std::min<std::size_t>(8, best.size()), best.end(),
                    [](const auto& a, const auto& b) { return a.first < b.first; });
  for (std::size_t i = 0; i < std::min<std::size_t>(8, best.size()); ++i) {
    auto [X, f] = polish(best[i].second);
    if (std::sqrt(f) < res.min_abs) {
      res.min_abs = std::sqrt(f);
      res.witness = X;
    }
  }
  res.elliptic = res.min_abs > eps_ell;
  return res;
}

// Minimal closed angular sector (vertex 0) containing a set of angles.
struct Sector {
  double axis = 0.0;      // direction of the bisector, radians
  double aperture = 0.0;  // half-angle

  bool contains_angle(double theta, double slack = 1e-8) const {
    double d = std::remainder(theta - axis, 2.0 * kPi);
    return std::abs(d) <= aperture + slack;
  }
  // True if theta sits within slack of the sector boundary.
  bool on_boundary(double theta, double slack = 1e-8) const {
    double d = std::abs(std::remainder(theta - axis, 2.0 * kPi));
    return std::abs(d - aperture) <= slack;
  }
};

inline Sector minimal_sector(std::vector<double> angles) {
  if (angles.empty()) throw std::invalid_argument("minimal_sector: no angles");
  for (double& a : angles) a = std::remainder(a, 2.0 * kPi);
  std::sort(angles.begin(), angles.end());
  // Largest gap between consecutive angles on the circle; the sector is the
  // complement of that gap.
  double max_gap = 2.0 * kPi - (angles.back() - angles.front());
  std::size_t gap_after = angles.size() - 1;
  for (std::size_t i = 0; i + 1 < angles.size(); ++i) {
    const double gap = angles[i + 1] - angles[i];
    if (gap > max_gap) {
      max_gap = gap;
      gap_after = i;
    }
  }
  const double lo = angles[(gap_after + 1) % angles.size()];
  const double extent = 2.0 * kPi - max_gap;
  Sector s;
  s.aperture = 0.5 * extent;
  s.axis = std::remainder(lo + s.aperture, 2.0 * kPi);
  return s;
}

// Sigma(q) = closure of q(R^{2n}): minimal sector containing q(unit sphere).
// Fails if the sampled values span an angle >= pi (non-elliptic or Re q < 0).
inline Sector sigma_q_sector(const QuadraticForm& q) {
  std::vector<double> angles;
  for (const auto& X : sphere_samples(2 * q.n, 4000 * q.n, 777u)) {
    const cd v = q.eval(X);
    if (std::abs(v) > 1e-12) angles.push_back(std::arg(v));
  }
  if (angles.empty()) return Sector{0.0, 0.0};
  Sector s = minimal_sector(angles);
  if (2.0 * s.aperture >= kPi - 1e-9)
    throw std::runtime_error("sigma_q_sector: range of q spans an angle >= pi");
  return s;
}

struct SpectrumMode {
  cd mu;  // -i lambda for the selected eigenvalue lambda of F
  int r;  // algebraic multiplicity r_lambda
};

// Cluster eigenvalues of F into distinct values with algebraic multiplicities.
inline std::vector<std::pair<cd, int>> clustered_eigenvalues(const MatrixXcd& F, double tol) {
  Eigen::ComplexEigenSolver<MatrixXcd> es(F, false);
  std::vector<std::pair<cd, int>> clusters;
  for (int i = 0; i < F.rows(); ++i) {
    const cd lam = es.eigenvalues()(i);
    bool merged = false;
    for (auto& [mu, count] : clusters) {
      if (std::abs(lam - mu) < tol) {
        mu = (mu * static_cast<double>(count) + lam) / static_cast<double>(count + 1);
        ++count;
        merged = true;
        break;
      }
    }
    if (!merged) clusters.emplace_back(lam, 1);
  }
  return clusters;
}

// Eigenvalue selection for the spectral lattice: keep lambda with -i lambda in Sigma(q).
// Boundary-ambiguous pairs are flagged, not guessed.
inline std::vector<SpectrumMode> spectrum_lattice_modes(const HamiltonMap& H, const Sector& sector,
                                                        double angular_slack = 1e-8) {
  const double scale = std::max(H.F.norm(), 1.0);
  auto clusters = clustered_eigenvalues(H.F, 1e-8 * scale);
  std::vector<SpectrumMode> modes;
  for (const auto& [lam, r] : clusters) {
    if (std::abs(lam) < 1e-10 * scale) continue;
    const cd mu = cd(0, -1) * lam;
    const bool in_plus = sector.contains_angle(std::arg(mu), angular_slack);
    const bool in_minus = sector.contains_angle(std::arg(-mu), angular_slack);
    if (in_plus && in_minus)
      throw std::runtime_error("spectrum_lattice: ambiguous mode selection on sector boundary");
    if (in_plus) modes.push_back({mu, r});
  }
  int total_r = 0;
  for (const auto& m : modes) total_r += m.r;
  if (total_r != H.n)
    throw std::runtime_error("spectrum_lattice: selected multiplicities do not sum to n");
  return modes;
}

// Spectrum-mode selection for partially elliptic q: keep lambda with
// -i lambda in C+ or in Sigma(q|_S) \ {0}. Only the case where q restricted
// to S is purely imaginary by inspection is supported; anything else throws.
inline std::vector<SpectrumMode> spectrum_modes_partial(const HamiltonMap& H,
                                                        const QuadraticForm& q,
                                                        const std::vector<VectorXd>& s_basis,
                                                        double tol = 1e-9) {
  const double scale = std::max(H.F.norm(), 1.0);
  bool has_pos_imag = false, has_neg_imag = false;
  std::mt19937 rng(99u);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  for (int s = 0; s < 200; ++s) {
    VectorXd X = VectorXd::Zero(2 * H.n);
    for (const auto& b : s_basis) X += unif(rng) * b;
    if (X.norm() < 1e-8) continue;
    const cd v = q.eval(X);
    if (std::abs(v.real()) > tol * std::max(std::abs(v), 1e-30))
      throw std::runtime_error("spectrum_modes_partial: q|_S is not purely imaginary; unsupported");
    if (v.imag() > tol) has_pos_imag = true;
    if (v.imag() < -tol) has_neg_imag = true;
  }
  auto clusters = clustered_eigenvalues(H.F, 1e-8 * scale);
  std::vector<SpectrumMode> modes;
  for (const auto& [lam, r] : clusters) {
    if (std::abs(lam) < 1e-10 * scale) continue;
    const cd mu = cd(0, -1) * lam;
    const bool on_imag_axis = std::abs(mu.real()) <= tol * scale;
    bool selected = mu.real() > tol * scale;
    if (!selected && on_imag_axis && std::abs(mu.imag()) > tol * scale)
      selected = (mu.imag() > 0 && has_pos_imag) || (mu.imag() < 0 && has_neg_imag);
    if (selected) modes.push_back({mu, r});
  }
  return modes;
}

// Enumerate lattice values sum_m (r_m + 2 k_m) mu_m with sum k_m <= cap.
inline std::vector<cd> lattice_points(const std::vector<SpectrumMode>& modes, int cap) {
  std::vector<cd> values{cd(0.0)};
  cd base(0.0);
  for (const auto& m : modes) base += static_cast<double>(m.r) * m.mu;
  // values accumulates sum 2 k_m mu_m over all assignments with sum k_m <= cap
  std::vector<cd> sums{cd(0.0)};
  std::vector<int> budget{0};
  for (const auto& m : modes) {
    std::vector<cd> next_sums;
    std::vector<int> next_budget;
    for (std::size_t i = 0; i < sums.size(); ++i) {
      for (int k = 0; budget[i] + k <= cap; ++k) {
        next_sums.push_back(sums[i] + 2.0 * static_cast<double>(k) * m.mu);
        next_budget.push_back(budget[i] + k);
      }
    }
    sums = std::move(next_sums);
    budget = std::move(next_budget);
  }
  std::vector<cd> out;
  for (const cd& s : sums) out.push_back(base + s);
  std::sort(out.begin(), out.end(), [](const cd& a, const cd& b) {
    if (std::abs(a.real() - b.real()) > 1e-12) return a.real() < b.real();
    return a.imag() < b.imag();
  });
  out.erase(std::unique(out.begin(), out.end(),
                        [](const cd& a, const cd& b) { return std::abs(a - b) < 1e-9; }),
            out.end());
  return out;
}

// Dimension of the eigenspace of q^w for a given lattice value: expand the
// modes into unit oscillator directions and count Hermite multi-indices.
inline int lattice_multiplicity(const std::vector<SpectrumMode>& modes, cd value, int cap,
                                double tol = 1e-7) {
  std::vector<cd> mus;
  for (const auto& m : modes)
    for (int i = 0; i < m.r; ++i) mus.push_back(m.mu);
  int count = 0;
  std::vector<int> nu(mus.size(), 0);
  std::function<void(std::size_t, int, cd)> rec = [&](std::size_t i, int used, cd acc) {
    if (i == mus.size()) {
      if (std::abs(acc - value) < tol) ++count;
      return;
    }
    for (int k = 0; used + k <= cap; ++k) rec(i + 1, used + k, acc + (2.0 * k + 1.0) * mus[i]);
  };
  rec(0, 0, cd(0.0));
  return count;
}

struct SingularSpaceResult {
  std::vector<VectorXd> basis;  // real basis of S
  int k0 = -1;                  // -1 means undefined (S != {0})
};

// S = intersection over j = 0..2n-1 of Ker(Re F (Im F)^j) in R^{2n};
// k0 = smallest prefix length giving trivial intersection.
inline SingularSpaceResult singular_space_k0(const HamiltonMap& H) {
  const int two_n = 2 * H.n;
  const MatrixXd ReF = H.ReF(), ImF = H.ImF();
  auto null_space = [&](const MatrixXd& A) {
    Eigen::JacobiSVD<MatrixXd> svd(A, Eigen::ComputeFullV);
    const double thresh = 1e-9 * std::max(svd.singularValues()(0), 1e-30);
    int rank = 0;
    for (int i = 0; i < svd.singularValues().size(); ++i)
      if (svd.singularValues()(i) > thresh) ++rank;
    return MatrixXd(svd.matrixV().rightCols(two_n - rank));
  };

  SingularSpaceResult res;
  MatrixXd stacked(0, two_n);
  MatrixXd power = MatrixXd::Identity(two_n, two_n);
  for (int j = 0; j < two_n; ++j) {
    MatrixXd block = ReF * power;
    stacked.conservativeResize(stacked.rows() + two_n, two_n);
    stacked.bottomRows(two_n) = block;
    MatrixXd ns = null_space(stacked);
    if (ns.cols() == 0) {
      if (res.k0 < 0) res.k0 = j;
      res.basis.clear();
      return res;
    }
    if (j == two_n - 1)
      for (int c = 0; c < ns.cols(); ++c) res.basis.push_back(ns.col(c));
    power = ImF * power;
  }
  res.k0 = -1;
  return res;
}

struct GroundStateData {
  MatrixXcd Bplus;        // n x n complex symmetric, Im Bplus > 0
  cd bottom_eigenvalue;   // sum of -i lambda r_lambda over selected modes
  double u_conditioning;  // condition number of the x-block inverted for Bplus
};

// Positive Lagrangian plane: V+ = direct sum of generalized eigenspaces of the
// selected modes, written as {(x, B+ x)}.
inline GroundStateData ground_state_Bplus(const HamiltonMap& H, const Sector& sector) {
  const int n = H.n, two_n = 2 * n;
  const double scale = std::max(H.F.norm(), 1.0);
  auto modes = spectrum_lattice_modes(H, sector);

  MatrixXcd basis(two_n, 0);
  for (const auto& m : modes) {
    const cd lam = cd(0, 1) * m.mu;  // lambda = i mu
    MatrixXcd A = MatrixXcd::Identity(two_n, two_n);
    const MatrixXcd shifted = H.F - lam * MatrixXcd::Identity(two_n, two_n);
    for (int k = 0; k < two_n; ++k) A = shifted * A;  // (F - lambda)^{2n}
    Eigen::JacobiSVD<MatrixXcd> svd(A, Eigen::ComputeFullV);
    const double thresh = 1e-9 * std::max(svd.singularValues()(0), 1e-30);
    int rank = 0;
    for (int i = 0; i < svd.singularValues().size(); ++i)
      if (svd.singularValues()(i) > thresh) ++rank;
    const MatrixXcd ns = svd.matrixV().rightCols(two_n - rank);
    if (ns.cols() != m.r)
      throw std::runtime_error("ground_state_Bplus: generalized eigenspace dimension mismatch");
    MatrixXcd joined(two_n, basis.cols() + ns.cols());
    joined << basis, ns;
    basis = joined;
  }
  if (basis.cols() != n) throw std::runtime_error("ground_state_Bplus: plane dimension != n");

  const MatrixXcd U = basis.topRows(n), W = basis.bottomRows(n);
  Eigen::JacobiSVD<MatrixXcd> svdU(U, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const double smin = svdU.singularValues()(n - 1), smax = svdU.singularValues()(0);
  if (smin < 1e-12 * std::max(smax, 1e-30))
    throw std::runtime_error("ground_state_Bplus: x-projection of the plane is singular");

  GroundStateData gs;
  gs.u_conditioning = smax / smin;
  MatrixXcd B = W * U.inverse();
  gs.Bplus = 0.5 * (B + B.transpose());
  gs.bottom_eigenvalue = cd(0.0);
  for (const auto& m : modes) gs.bottom_eigenvalue += static_cast<double>(m.r) * m.mu;

  Eigen::SelfAdjointEigenSolver<MatrixXd> es(gs.Bplus.imag());
  if (es.eigenvalues()(0) < 1e-10 * scale)
    throw std::runtime_error("ground_state_Bplus: Im B+ is not positive definite");
  return gs;
}

// Remainder sector check (re1): r(X) = p0-part beyond the quadratic term,
// evaluated on a real ball; true iff all nonzero values share a sector
// strictly inside Re z > 0.
inline bool check_remainder_sector(const SymbolJet& jet, double rho, int samples) {
  const Poly p0 = jet.pj(0);
  const Poly r = p0 - p0.homogeneous_part(2) - p0.homogeneous_part(1) - p0.homogeneous_part(0);
  if (r.empty()) return true;  // r == 0: vacuously true
  std::mt19937 rng(13u);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  std::vector<double> angles;
  const int two_n = 2 * jet.dim;
  for (int s = 0; s < samples; ++s) {
    std::vector<cd> X(static_cast<std::size_t>(two_n));
    VectorXd v(two_n);
    for (int i = 0; i < two_n; ++i) v(i) = unif(rng);
    if (v.norm() > 1.0) {
      --s;
      continue;
    }
    for (int i = 0; i < two_n; ++i) X[static_cast<std::size_t>(i)] = rho * v(i);
    const cd val = symbol_eval(r, X);
    if (std::abs(val) > 1e-14) angles.push_back(std::arg(val));
  }
  if (angles.empty()) return true;
  Sector s = minimal_sector(angles);
  // The minimal sector must sit strictly inside the open right half plane.
  return std::abs(s.axis) + s.aperture < kPi / 2.0 - 1e-9;
}

struct QuadraticReport {
  std::vector<SpectrumMode> spectrum_modes;
  std::vector<VectorXd> singular_space_basis;
  int k0 = -1;  // -1: undefined
  Sector sector;
  bool elliptic = false;
  double min_abs_on_sphere = 0.0;
  std::optional<double> subelliptic_exponent;  // 2k0/(2k0+1) when S = {0}
  std::optional<GroundStateData> ground_state;
};

inline QuadraticReport analyze_quadratic(const QuadraticForm& q, double eps_ell = 1e-6) {
  QuadraticReport rep;
  const auto ell = check_elliptic(q, eps_ell);
  rep.elliptic = ell.elliptic;
  rep.min_abs_on_sphere = ell.min_abs;
  const HamiltonMap H = hamilton_map(q);
  const auto ss = singular_space_k0(H);
  rep.singular_space_basis = ss.basis;
  rep.k0 = ss.k0;
  if (ss.k0 >= 0) rep.subelliptic_exponent = 2.0 * ss.k0 / (2.0 * ss.k0 + 1.0);
  if (rep.elliptic) {
    rep.sector = sigma_q_sector(q);
    rep.spectrum_modes = spectrum_lattice_modes(H, rep.sector);
    rep.ground_state = ground_state_Bplus(H, rep.sector);
  }
  return rep;
}

}  // namespace grushinlab
