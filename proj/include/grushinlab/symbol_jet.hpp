#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

#include "grushinlab/phase_polynomial.hpp"

namespace grushinlab {

// Taylor data of the symbol family at the doubly characteristic point:
// jet.p[j] stores the available Taylor polynomial of p_j at 0, with monomial
// coefficients p_j^{(gamma)}(0)/gamma!.
struct SymbolJet {
  int dim = 1;
  int N0 = 1;
  std::vector<Poly> p;  // p[0], p[1], ... (missing tail treated as zero)

  SymbolJet(int n, int n0) : dim(n), N0(n0) {
    if (n < 1 || n0 < 1) throw std::invalid_argument("SymbolJet: need n >= 1, N0 >= 1");
  }

  int max_j() const { return 1 + N0 / 2; }
  int max_alpha() const { return N0 + 2; }

  Poly pj(int j) const {
    if (j < 0 || j >= static_cast<int>(p.size())) return Poly(dim);
    return p[static_cast<std::size_t>(j)];
  }

  cd subprincipal_at_0() const {
    if (p.size() < 2) return 0.0;
    return p[1].coeff(MultiIndex(2 * static_cast<std::size_t>(dim)));
  }

  // |gamma| <= 1 terms of p_0 must vanish (doubly characteristic point).
  bool doubly_characteristic(double tol = 0.0) const {
    if (p.empty()) return true;
    for (const auto& [alpha, c] : p[0].terms())
      if (alpha.degree() <= 1 && std::abs(c) > tol) return false;
    return true;
  }

  Poly quadratic_part() const {
    if (p.empty()) return Poly(dim);
    return p[0].homogeneous_part(2);
  }
};

// Spectral parameter z(h) = sum_{k=0}^{2N0+2} z_k h^{k/2}.
struct SpectralParameter {
  int N0 = 1;
  std::vector<cd> z;  // size 2N0+3

  SpectralParameter(int n0, std::vector<cd> zs) : N0(n0), z(std::move(zs)) {
    if (static_cast<int>(z.size()) != 2 * N0 + 3)
      throw std::invalid_argument("SpectralParameter: need 2N0+3 coefficients");
  }

  static SpectralParameter leading_only(int n0, cd z0) {
    std::vector<cd> zs(static_cast<std::size_t>(2 * n0 + 3), cd(0.0));
    zs[0] = z0;
    return {n0, std::move(zs)};
  }
};

struct AkFamily {
  int N0 = 1;
  std::vector<Poly> a;        // a_k = a_tilde_k - z_k, k = 0..2N0+2
  std::vector<Poly> a_tilde;  // z-free parts
  std::vector<cd> z;
};

// Symbols a_k(X) = sum_{j + |gamma|/2 = 1 + k/2} p_j^{(gamma)}(0)/gamma! X^gamma - z_k,
// restricted to 0 <= j <= 1 + [N0/2] and |gamma| <= N0+2. The double
// constraint can leave some sums empty; we apply it literally and a_k is
// then the constant -z_k.
inline AkFamily build_ak_family(const SymbolJet& jet, const SpectralParameter& zp) {
  if (jet.N0 != zp.N0) throw std::invalid_argument("build_ak_family: N0 mismatch");
  const int n = jet.dim;
  AkFamily fam;
  fam.N0 = jet.N0;
  fam.z = zp.z;

  for (int k = 0; k <= 2 * jet.N0 + 2; ++k) {
    Poly atk(n);
    // j + |gamma|/2 = 1 + k/2  <=>  |gamma| = k + 2 - 2j
    for (int j = 0; j <= jet.max_j(); ++j) {
      const int g = k + 2 - 2 * j;
      if (g < 0 || g > jet.max_alpha()) continue;
      atk = atk + jet.pj(j).homogeneous_part(g);
    }
    Poly ak = atk - Poly::constant(n, zp.z[static_cast<std::size_t>(k)]);
    fam.a_tilde.push_back(std::move(atk));
    fam.a.push_back(std::move(ak));
  }
  return fam;
}

}  // namespace grushinlab
