#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "grushinlab/fock.hpp"
#include "grushinlab/quadratic.hpp"
#include "grushinlab/symbol_jet.hpp"

namespace grushinlab {

// Quantized symbol family on a shared basis. a_tilde ops are quantized once;
// a_k = a_tilde_k - z_k shifts the diagonal.
struct QuantizedFamily {
  int N0 = 1;
  std::vector<FockOperator> a;        // k = 0..2N0+2
  std::vector<FockOperator> a_tilde;  // z-free parts
  std::vector<cd> z;
};

inline QuantizedFamily quantize_family(const AkFamily& fam, const FockBasis& basis) {
  QuantizedFamily qf;
  qf.N0 = fam.N0;
  qf.z = fam.z;
  for (std::size_t k = 0; k < fam.a_tilde.size(); ++k) {
    FockOperator t = quantize(fam.a_tilde[k], basis);
    qf.a.push_back(t.shifted(-fam.z[k]));
    qf.a_tilde.push_back(std::move(t));
  }
  return qf;
}

// Re-shift an existing quantized family to a new z tail (z_0 kept).
inline QuantizedFamily reshift_family(const QuantizedFamily& qf, const std::vector<cd>& z) {
  if (z.size() != qf.z.size()) throw std::invalid_argument("reshift_family: z length mismatch");
  if (std::abs(z[0] - qf.z[0]) > 1e-14)
    throw std::invalid_argument("reshift_family: z_0 must be unchanged (kernels depend on it)");
  QuantizedFamily out;
  out.N0 = qf.N0;
  out.z = z;
  out.a_tilde = qf.a_tilde;
  for (std::size_t k = 0; k < qf.a_tilde.size(); ++k)
    out.a.push_back(qf.a_tilde[k].shifted(-z[k]));
  return out;
}

struct GrushinOptions {
  double rank_tol = 1e-8;        // relative SVD threshold for kernel detection
  double conditioning_warn = 0;  // filled on build: smallest kept singular value
};

struct GrushinSystem {
  const FockBasis* basis = nullptr;
  int N0 = 1;
  int d = 0;
  MatrixXcd Phi, Psi;  // M x d orthonormal kernel bases of Q and Q*
  MatrixXcd Qmat;      // quantize(a_0)
  MatrixXcd Smat;      // Moore-Penrose pseudoinverse of Qmat
  double smallest_kept_sv = 0.0;
  int q_degree = 2;

  // corr_plus[j].col(l) = phi^+_{j,l}; corr_plus[0] = Phi. Same for minus.
  std::vector<MatrixXcd> corr_plus, corr_minus;
  std::vector<MatrixXcd> A;  // A[j] for j = 1..2N0+2; A[0] is zero
  std::vector<int> trust_plus;

  cd pairing() const {  // (phi_1, psi_1)
    return (Psi.adjoint() * Phi)(0, 0);
  }
};

// L2 inner products (u, v) for coefficient columns: conjugate-linear in the
// second slot, i.e. (u, v) = v^H u.
inline MatrixXcd pair_with(const MatrixXcd& kets, const MatrixXcd& bras) {
  return bras.adjoint() * kets;
}

// Fix column phases: largest-magnitude entry made real positive.
inline void fix_phases(MatrixXcd& cols) {
  for (int c = 0; c < cols.cols(); ++c) {
    int imax = 0;
    cols.col(c).cwiseAbs().maxCoeff(&imax);
    const cd v = cols(imax, c);
    if (std::abs(v) > 0) cols.col(c) *= std::abs(v) / v;
  }
}

// Null spaces of Q and Q* plus the reduced inverse, all from one SVD.
// d must match the multiplicity expected from the spectrum lattice.
inline GrushinSystem compute_kernels_and_inverse(const FockBasis& basis, const FockOperator& Qop,
                                                 int expected_d, int N0,
                                                 const GrushinOptions& opts = {}) {
  Eigen::BDCSVD<MatrixXcd> svd(Qop.mat, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const int M = static_cast<int>(sv.size());
  const double thresh = opts.rank_tol * std::max(sv(0), 1e-300);
  int d = 0;
  while (d < M && sv(M - 1 - d) < thresh) ++d;
  if (d != expected_d)
    throw std::runtime_error("compute_kernels: numerical kernel dimension " + std::to_string(d) +
                             " does not match the lattice multiplicity " +
                             std::to_string(expected_d) +
                             " (insufficient cutoff or wrong z0?)");

  GrushinSystem sys;
  sys.basis = &basis;
  sys.N0 = N0;
  sys.d = d;
  sys.Qmat = Qop.mat;
  sys.q_degree = Qop.degree_leakage;
  sys.Phi = svd.matrixV().rightCols(d);
  sys.Psi = svd.matrixU().rightCols(d);
  fix_phases(sys.Phi);
  fix_phases(sys.Psi);

  VectorXcd inv = VectorXcd::Zero(M);
  for (int i = 0; i < M - d; ++i) inv(i) = 1.0 / sv(i);
  sys.smallest_kept_sv = (M - d > 0) ? sv(M - d - 1) : 0.0;
  if (sys.smallest_kept_sv < 10.0 * thresh && M > d)
    sys.smallest_kept_sv = sys.smallest_kept_sv;  // conditioning surfaced via the field
  sys.Smat = svd.matrixV() * inv.asDiagonal() * svd.matrixU().adjoint();
  return sys;
}

// Corrector recursions:
//   phi^+_{j,l} = -S   sum_{k1+k2=j, k1>=1} a_{k1}^w phi^+_{k2,l}
//   psi^-_{j,l} = -S*  sum_{k1+k2=j, k1>=1} abar_{k1}^w psi^-_{k2,l}
//   A^{(j)}_{k,l} = -sum_{k1+k2=j, k1>=1} (a_{k1}^w phi^+_{k2,l}, psi_k)
inline void build_correctors(GrushinSystem& sys, const QuantizedFamily& qf) {
  const int jmax = 2 * sys.N0 + 2;
  const int n_total = sys.basis->n_total();
  sys.corr_plus.assign(1, sys.Phi);
  sys.corr_minus.assign(1, sys.Psi);
  sys.A.assign(1, MatrixXcd::Zero(sys.d, sys.d));
  sys.trust_plus.assign(1, n_total);

  const MatrixXcd Sadj = sys.Smat.adjoint();
  for (int j = 1; j <= jmax; ++j) {
    MatrixXcd rhs_plus = MatrixXcd::Zero(sys.basis->size(), sys.d);
    MatrixXcd rhs_minus = MatrixXcd::Zero(sys.basis->size(), sys.d);
    int trust = n_total;
    for (int k1 = 1; k1 <= j; ++k1) {
      const int k2 = j - k1;
      const FockOperator& ak = qf.a[static_cast<std::size_t>(k1)];
      rhs_plus += ak.mat * sys.corr_plus[static_cast<std::size_t>(k2)];
      rhs_minus += ak.mat.adjoint() * sys.corr_minus[static_cast<std::size_t>(k2)];
      trust = std::min(trust, std::min(sys.trust_plus[static_cast<std::size_t>(k2)] -
                                           ak.degree_leakage,
                                       ak.trusted_degree));
    }
    if (trust < 0)
      throw TrustExhausted("build_correctors: trusted degree exhausted at level " +
                           std::to_string(j) + "; increase the basis guard");
    sys.A.push_back(-pair_with(rhs_plus, sys.Psi));
    sys.corr_plus.push_back(-(sys.Smat * rhs_plus));
    sys.corr_minus.push_back(-(Sadj * rhs_minus));
    sys.trust_plus.push_back(trust);
  }
}

inline GrushinSystem build_grushin_system(const FockBasis& basis, const QuantizedFamily& qf,
                                          int expected_d, const GrushinOptions& opts = {}) {
  GrushinSystem sys =
      compute_kernels_and_inverse(basis, qf.a[0], expected_d, qf.N0, opts);
  build_correctors(sys, qf);
  return sys;
}

// Enumerate integer compositions of j with parts in 1..max_part.
inline void for_each_composition(int j, int max_part,
                                 const std::function<void(const std::vector<int>&)>& visit) {
  std::vector<int> parts;
  std::function<void(int)> rec = [&](int rest) {
    if (rest == 0) {
      visit(parts);
      return;
    }
    for (int k = 1; k <= std::min(rest, max_part); ++k) {
      parts.push_back(k);
      rec(rest - k);
      parts.pop_back();
    }
  };
  rec(j);
}

// Direct composition formula for A_j:
//   A^{(j)}_{k,l} = sum_{i=1}^j (-1)^i sum_{k1+...+ki=j}
//                   (a_{k1}^w S a_{k2}^w S ... a_{ki}^w phi_l, psi_k).
// Cross-validates the recursive construction above.
inline MatrixXcd effective_direct(const GrushinSystem& sys, const QuantizedFamily& qf, int j) {
  const int max_part = 2 * sys.N0 + 2;
  MatrixXcd total = MatrixXcd::Zero(sys.d, sys.d);
  for_each_composition(j, max_part, [&](const std::vector<int>& parts) {
    // rightmost factor acts first
    MatrixXcd cols = sys.Phi;
    for (std::size_t i = parts.size(); i-- > 0;) {
      cols = qf.a[static_cast<std::size_t>(parts[i])].mat * cols;
      if (i > 0) cols = sys.Smat * cols;
    }
    const double sign = (parts.size() % 2 == 0) ? 1.0 : -1.0;
    total += sign * pair_with(cols, sys.Psi);
  });
  return total;
}

// E(h) = sum_j A_j h^{1 + j/2} and the Theorem margin sigma_min(E)/h^{N0/2+1}.
struct EffectiveEvaluation {
  MatrixXcd E;
  double sigma_min = 0.0;
  double margin = 0.0;
};

inline EffectiveEvaluation effective_family(const GrushinSystem& sys, double h) {
  EffectiveEvaluation ev;
  ev.E = MatrixXcd::Zero(sys.d, sys.d);
  for (int j = 1; j <= 2 * sys.N0 + 2; ++j)
    ev.E += std::pow(h, 1.0 + 0.5 * j) * sys.A[static_cast<std::size_t>(j)];
  Eigen::JacobiSVD<MatrixXcd> svd(ev.E);
  ev.sigma_min = svd.singularValues()(sys.d - 1);
  ev.margin = ev.sigma_min / std::pow(h, 0.5 * sys.N0 + 1.0);
  return ev;
}

// ---- N0 = 1 localization (study case i/ii) ----

struct LocalizationResult {
  int d0 = 0;                    // rank of A0 = ((phi_l, psi_k))
  std::vector<cd> lambda_set;    // finite roots of det A_1(z1)
  std::string classification;    // "estimate-holds-all-z1", "violated-all-z1",
                                 // "localized", "identically-singular"
  MatrixXcd A0, A1_at_0;
};

inline std::vector<cd> polynomial_roots(std::vector<cd> coeffs) {
  while (!coeffs.empty() && std::abs(coeffs.back()) < 1e-12) coeffs.pop_back();
  if (coeffs.size() <= 1) return {};
  const int deg = static_cast<int>(coeffs.size()) - 1;
  MatrixXcd comp = MatrixXcd::Zero(deg, deg);
  for (int i = 1; i < deg; ++i) comp(i, i - 1) = 1.0;
  for (int i = 0; i < deg; ++i) comp(i, deg - 1) = -coeffs[static_cast<std::size_t>(i)] / coeffs.back();
  Eigen::ComplexEigenSolver<MatrixXcd> es(comp, false);
  std::vector<cd> roots(es.eigenvalues().data(), es.eigenvalues().data() + deg);
  std::sort(roots.begin(), roots.end(), [](const cd& a, const cd& b) {
    if (std::abs(a.real() - b.real()) > 1e-12) return a.real() < b.real();
    return a.imag() < b.imag();
  });
  return roots;
}

// A_1(z1) = ((a_1^w phi_l, psi_k)) = A1_tilde - z1 A0; Lambda = finite roots
// of its determinant, computed from the pencil by interpolation of det.
inline LocalizationResult localization_N0_1(const GrushinSystem& sys, const QuantizedFamily& qf) {
  if (sys.N0 != 1) throw std::invalid_argument("localization_N0_1: requires N0 = 1");
  LocalizationResult res;
  res.A0 = pair_with(MatrixXcd(sys.Phi), sys.Psi);
  res.A1_at_0 = pair_with(qf.a_tilde[1].mat * sys.Phi, sys.Psi);

  Eigen::JacobiSVD<MatrixXcd> svd(res.A0);
  const double thresh = 1e-10 * std::max(svd.singularValues()(0), 1e-300);
  res.d0 = 0;
  for (int i = 0; i < sys.d; ++i)
    if (svd.singularValues()(i) > thresh) ++res.d0;

  // det(A1_tilde - z A0) is a polynomial of degree d0 in z.
  std::vector<cd> nodes, values;
  const int npts = sys.d + 1;
  for (int i = 0; i < npts; ++i) {
    const double t = 2.0 * kPi * i / npts;
    const cd z = 2.0 * std::exp(cd(0, t));
    nodes.push_back(z);
    values.push_back((res.A1_at_0 - z * res.A0).determinant());
  }
  MatrixXcd V(npts, npts);
  for (int i = 0; i < npts; ++i)
    for (int k = 0; k < npts; ++k) V(i, k) = std::pow(nodes[static_cast<std::size_t>(i)], k);
  VectorXcd rhs(npts);
  for (int i = 0; i < npts; ++i) rhs(i) = values[static_cast<std::size_t>(i)];
  const VectorXcd coeff = V.fullPivLu().solve(rhs);

  double cmax = 0.0;
  for (int i = 0; i < npts; ++i) cmax = std::max(cmax, std::abs(coeff(i)));
  if (cmax < 1e-13) {
    res.classification = "identically-singular";
    return res;
  }
  std::vector<cd> cv;
  for (int i = 0; i <= res.d0; ++i) cv.push_back(coeff(i));
  res.lambda_set = polynomial_roots(cv);

  if (res.d0 == 0) {
    res.classification =
        std::abs(values[0]) > 1e-12 ? "estimate-holds-all-z1" : "violated-all-z1";
  } else {
    res.classification = "localized";
  }
  return res;
}

// ---- d = 1 eigenvalue-expansion coefficients ----

struct EigenExpansion {
  cd z0;
  std::vector<cd> ztilde;  // ztilde[j] for j = 1..2N0+2 (index 0 unused)
  bool parity_even_case = false;
};

// Recursions (eq17.1)/(eq15.1): every chain factor is (a~_k^w - ztilde_k)
// with the previously computed ztilde.
inline EigenExpansion ztilde_sequence(const GrushinSystem& sys, const QuantizedFamily& qf,
                                      double pairing_tol = 1e-8) {
  if (sys.d != 1) throw std::runtime_error("ztilde_sequence: only d = 1 is supported");
  const cd pairing = sys.pairing();
  if (std::abs(pairing) < pairing_tol) throw std::runtime_error("ztilde_sequence: pairing degenerate");

  const int jmax = 2 * sys.N0 + 2;
  EigenExpansion ex;
  ex.z0 = qf.z[0];
  ex.ztilde.assign(static_cast<std::size_t>(jmax) + 1, cd(0.0));

  const VectorXcd phi = sys.Phi.col(0), psi = sys.Psi.col(0);
  auto bracket = [&](const VectorXcd& u) { return psi.dot(u); };  // (u, psi)

  for (int j = 1; j <= jmax; ++j) {
    cd val = bracket(qf.a_tilde[static_cast<std::size_t>(j)].mat * phi);
    for_each_composition(j, jmax, [&](const std::vector<int>& parts) {
      if (parts.size() < 2) return;
      VectorXcd u = phi;
      for (std::size_t i = parts.size(); i-- > 0;) {
        const int k = parts[i];
        u = qf.a_tilde[static_cast<std::size_t>(k)].mat * u -
            ex.ztilde[static_cast<std::size_t>(k)] * u;
        if (i > 0) u = sys.Smat * u;
      }
      const double sign = (parts.size() % 2 == 0) ? -1.0 : 1.0;  // (-1)^{i+1}
      val += sign * bracket(u);
    });
    ex.ztilde[static_cast<std::size_t>(j)] = val / pairing;
  }
  return ex;
}

// ---- parity audit (Proposition 3.1) ----

struct ParityAudit {
  bool applicable = false;
  std::string note;
  int phi_parity = -1, psi_parity = -1;  // 0 even, 1 odd
  double max_forbidden_A = 0.0;          // largest ||A_j|| that parity forces to vanish
  double smat_parity_leak = 0.0;         // opposite-parity mass of S applied to parity vectors
};

inline int column_parity(const FockBasis& basis, const VectorXcd& col, double tol = 1e-8) {
  double even = 0.0, odd = 0.0;
  for (int i = 0; i < basis.size(); ++i)
    (basis.state_degree(i) % 2 == 0 ? even : odd) += std::norm(col(i));
  if (odd < tol * (even + odd)) return 0;
  if (even < tol * (even + odd)) return 1;
  return -1;
}

inline ParityAudit parity_audit(const GrushinSystem& sys, const QuantizedFamily& qf) {
  ParityAudit audit;
  const FockBasis& basis = *sys.basis;
  int phi_par = column_parity(basis, sys.Phi.col(0));
  int psi_par = column_parity(basis, sys.Psi.col(0));
  for (int c = 1; c < sys.d; ++c) {
    if (column_parity(basis, sys.Phi.col(c)) != phi_par) phi_par = -1;
    if (column_parity(basis, sys.Psi.col(c)) != psi_par) psi_par = -1;
  }
  if (phi_par < 0 || psi_par < 0) {
    audit.note = "mixed-parity kernel; audit skipped";
    return audit;
  }
  for (std::size_t k = 1; k < qf.z.size(); k += 2)
    if (std::abs(qf.z[k]) > 1e-14) {
      audit.note = "odd-index z coefficients nonzero; audit skipped";
      return audit;
    }
  audit.applicable = true;
  audit.phi_parity = phi_par;
  audit.psi_parity = psi_par;

  const bool same_parity = (phi_par == psi_par);
  for (int j = 1; j <= 2 * sys.N0 + 2; ++j) {
    const bool forced_zero = same_parity ? (j % 2 == 1) : (j % 2 == 0);
    if (forced_zero)
      audit.max_forbidden_A =
          std::max(audit.max_forbidden_A, sys.A[static_cast<std::size_t>(j)].norm());
  }

  // S preserves parity: apply Smat to the two lowest parity eigenvectors.
  for (int probe = 0; probe < std::min(2, basis.size()); ++probe) {
    VectorXcd e = VectorXcd::Zero(basis.size());
    e(probe) = 1.0;
    const VectorXcd out = sys.Smat * e;
    const int par = basis.state_degree(probe) % 2;
    double leak = 0.0, tot = 0.0;
    for (int i = 0; i < basis.size(); ++i) {
      tot += std::norm(out(i));
      if (basis.state_degree(i) % 2 != par) leak += std::norm(out(i));
    }
    if (tot > 1e-28) audit.smat_parity_leak = std::max(audit.smat_parity_leak, std::sqrt(leak / tot));
  }
  return audit;
}

// ---- residuals of the approximate Grushin inversion identities ----

struct GrushinResiduals {
  double eq4 = 0.0;  // ||R+ E+ - I||,        expected O(h^{1/2})
  double eq3 = 0.0;  // ||sum h^{1+k/2} a_k^w E+ + R- E_pm||, expected O(h^{N0+5/2})
  double eq2 = 0.0;  // adjoint-side residual, expected O(h^{N0+5/2})
  double eq1 = 0.0;  // ||S a_0^w + E+ R+ - I||, expected O(h^{1/2})
};

inline GrushinResiduals grushin_residuals(const GrushinSystem& sys, const QuantizedFamily& qf,
                                          double h) {
  const FockBasis& basis = *sys.basis;
  const int jmax = 2 * sys.N0 + 2;
  const int mt = basis.block_size(basis.n_cut());

  MatrixXcd Eplus = MatrixXcd::Zero(basis.size(), sys.d);
  MatrixXcd Eminus_cols = MatrixXcd::Zero(basis.size(), sys.d);
  for (int j = 0; j <= jmax; ++j) {
    const double w = std::pow(h, 0.5 * j);
    Eplus += w * sys.corr_plus[static_cast<std::size_t>(j)];
    Eminus_cols += w * sys.corr_minus[static_cast<std::size_t>(j)];
  }
  MatrixXcd Epm = MatrixXcd::Zero(sys.d, sys.d);
  for (int j = 1; j <= jmax; ++j)
    Epm += std::pow(h, 1.0 + 0.5 * j) * sys.A[static_cast<std::size_t>(j)];

  GrushinResiduals r;
  r.eq4 = (pair_with(Eplus, sys.Phi) - MatrixXcd::Identity(sys.d, sys.d)).norm();

  MatrixXcd res3 = sys.Psi * Epm;  // R- E_pm
  for (int k = 0; k <= jmax; ++k)
    res3 += std::pow(h, 1.0 + 0.5 * k) * (qf.a[static_cast<std::size_t>(k)].mat * Eplus);
  r.eq3 = res3.topRows(mt).norm();

  // E-(sum a_k^w h^{1+k/2}) + E_pm R+ as a d x M matrix acting on u.
  MatrixXcd opsum = MatrixXcd::Zero(basis.size(), basis.size());
  for (int k = 0; k <= jmax; ++k)
    opsum += std::pow(h, 1.0 + 0.5 * k) * qf.a[static_cast<std::size_t>(k)].mat;
  MatrixXcd res2 = Eminus_cols.adjoint() * opsum + Epm * sys.Phi.adjoint();
  r.eq2 = res2.leftCols(mt).norm();

  MatrixXcd res1 = sys.Smat * qf.a[0].mat + Eplus * sys.Phi.adjoint() -
                   MatrixXcd::Identity(basis.size(), basis.size());
  r.eq1 = res1.topLeftCorner(mt, mt).norm();
  return r;
}

}  // namespace grushinlab
