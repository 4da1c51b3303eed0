// Acceptance gate: one pass/fail line per criterion, exit code = #failures.

#include <chrono>
#include <cstdio>
#include <memory>
#include <random>
#include <vector>

#include "grushinlab/grushin.hpp"
#include "grushinlab/lab.hpp"
#include "grushinlab/quadratic.hpp"

using namespace grushinlab;

namespace {

int g_failures = 0;

void report(int num, const char* what, bool ok, double elapsed_s) {
  std::printf("%s  criterion %2d: %s  (%.1fs)\n", ok ? "PASS" : "FAIL", num, what, elapsed_s);
  if (!ok) ++g_failures;
}

template <class Fn>
void criterion(int num, const char* what, Fn&& fn) {
  const auto t0 = std::chrono::steady_clock::now();
  bool ok = false;
  try {
    ok = fn();
  } catch (const std::exception& e) {
    std::printf("      exception: %s\n", e.what());
    ok = false;
  }
  const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  report(num, what, ok, dt);
}

Poly harm() { return Poly::variable(1, 0, 2) + Poly::variable(1, 1, 2); }
Poly xpow(int k) { return Poly::variable(1, 0, k); }

SymbolJet jet1(const Poly& p0, int N0, const Poly& p1 = Poly(1)) {
  SymbolJet j(1, N0);
  j.p = {p0, p1};
  return j;
}

struct Built {
  std::unique_ptr<FockBasis> basis;
  QuantizedFamily qf;
  GrushinSystem sys;
};

Built build_system(const SymbolJet& jet, cd z0, int expected_d, int n_cut, int guard = -1) {
  Built b;
  if (guard < 0) guard = (2 * jet.N0 + 2) * (jet.N0 + 3);
  b.basis = std::make_unique<FockBasis>(jet.dim, n_cut, guard);
  const AkFamily fam = build_ak_family(jet, SpectralParameter::leading_only(jet.N0, z0));
  b.qf = quantize_family(fam, *b.basis);
  b.sys = build_grushin_system(*b.basis, b.qf, expected_d);
  return b;
}

Poly random_poly(std::mt19937& rng, int max_deg) {
  std::uniform_int_distribution<int> d(0, max_deg);
  std::uniform_real_distribution<double> coef(-1.0, 1.0);
  Poly p(1);
  for (int t = 0; t < 5; ++t) {
    const int dx = d(rng);
    const int dxi = std::min(d(rng), max_deg - dx);
    p.add_term(MultiIndex{std::vector<int>{dx, dxi}}, cd(coef(rng), coef(rng)));
  }
  return p;
}

bool c1_star_exactness() {
  PolyQ x = PolyQ::variable(1, 0), xi = PolyQ::variable(1, 1);
  const PolyQ comm = star(x, xi) - star(xi, x);
  if (!(comm - PolyQ::constant(1, RationalComplex::i_unit())).empty()) return false;

  Poly xd = Poly::variable(1, 0), xid = Poly::variable(1, 1);
  const Poly commd = star(xd, xid) - star(xid, xd);
  if (std::abs(commd.coeff(MultiIndex{std::vector<int>{0, 0}}) - cd(0, 1)) > 1e-14) return false;

  std::mt19937 rng(1);
  for (int t = 0; t < 100; ++t) {
    Poly a = random_poly(rng, 4), b = random_poly(rng, 4), c = random_poly(rng, 4);
    if ((star(star(a, b), c) - star(a, star(b, c))).coeff_norm() > 1e-12) return false;
  }
  return true;
}

bool c2_quantization_oracle() {
  FockBasis b(1, 40, 4);
  FockOperator H = quantize(harm(), b);
  Eigen::ComplexEigenSolver<MatrixXcd> es(H.trusted_block(40), false);
  std::vector<double> ev;
  for (int i = 0; i < es.eigenvalues().size(); ++i) ev.push_back(es.eigenvalues()(i).real());
  std::sort(ev.begin(), ev.end());
  for (int k = 0; k < 6; ++k)
    if (std::abs(ev[static_cast<std::size_t>(k)] - (2.0 * k + 1.0)) > 1e-10) return false;

  FockBasis bh(1, 12, 8);
  std::mt19937 rng(2);
  for (int t = 0; t < 50; ++t) {
    Poly u = random_poly(rng, 3), v = random_poly(rng, 3);
    FockOperator UV = quantize(u, bh) * quantize(v, bh);
    FockOperator S = quantize(star(u, v), bh);
    const int mt = bh.block_size(std::min(UV.trusted_degree, S.trusted_degree));
    if ((UV.mat.topLeftCorner(mt, mt) - S.mat.topLeftCorner(mt, mt)).norm() > 1e-10) return false;
  }
  return true;
}

bool c3_spectrum_formula() {
  for (double theta : {kPi / 6, kPi / 4, kPi / 3}) {
    Poly q = Poly::variable(1, 1, 2) + Poly::variable(1, 0, 2).scaled(std::exp(cd(0, theta)));
    FockBasis b(1, 60, 8);
    FockOperator Q = quantize(q, b);
    Eigen::ComplexEigenSolver<MatrixXcd> es(Q.trusted_block(60), false);
    std::vector<cd> ev(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
    for (int k = 0; k < 6; ++k) {
      const cd target = (2.0 * k + 1.0) * std::exp(cd(0, theta / 2));
      double best = 1e18;
      for (const cd& e : ev) best = std::min(best, std::abs(e - target));
      if (best > 1e-7) return false;
    }
  }
  return true;
}

bool c4_singular_space() {
  Poly q1 = Poly::variable(1, 1, 2) + Poly::variable(1, 0, 2).scaled(cd(0, 1));
  auto s1 = singular_space_k0(hamilton_map(QuadraticForm::from_poly(q1)));
  if (s1.k0 != 1 || !s1.basis.empty()) return false;
  auto s0 = singular_space_k0(hamilton_map(QuadraticForm::from_poly(harm())));
  if (s0.k0 != 0) return false;
  auto si = singular_space_k0(hamilton_map(QuadraticForm::from_poly(harm().scaled(cd(0, 1)))));
  return si.k0 == -1 && si.basis.size() == 2;
}

bool c5_ground_state() {
  const double theta = kPi / 4;
  Poly q = Poly::variable(1, 1, 2) + Poly::variable(1, 0, 2).scaled(std::exp(cd(0, theta)));
  QuadraticForm Q = QuadraticForm::from_poly(q);
  auto gs = ground_state_Bplus(hamilton_map(Q), sigma_q_sector(Q));
  FockBasis b(1, 60, 8);
  FockVector v = project_gaussian(gs.Bplus, b);
  FockOperator Qop = quantize(q - Poly::constant(1, gs.bottom_eigenvalue), b);
  const int mt = b.block_size(b.n_cut());
  if ((Qop.mat * v.v).head(mt).norm() / v.v.norm() > 1e-6) return false;
  Eigen::BDCSVD<MatrixXcd> svd(Qop.mat, Eigen::ComputeFullV);
  VectorXcd nv = svd.matrixV().col(b.size() - 1);
  return std::abs(std::abs(nv.dot(v.v)) - 1.0) < 1e-8;
}

bool c6_direct_vs_recursive() {
  std::vector<SymbolJet> jets;
  jets.push_back(jet1(harm() + xpow(3), 2));
  jets.push_back(jet1(harm() + xpow(4), 2));
  Poly qrot = Poly::variable(1, 1, 2) + Poly::variable(1, 0, 2).scaled(std::exp(cd(0, kPi / 4)));
  jets.push_back(jet1(qrot + xpow(3), 2));
  std::vector<cd> z0s{cd(1.0), cd(1.0), std::exp(cd(0, kPi / 8))};
  for (std::size_t t = 0; t < jets.size(); ++t) {
    Built b = build_system(jets[t], z0s[t], 1, 16);
    for (int j = 1; j <= 6; ++j)
      if ((effective_direct(b.sys, b.qf, j) - b.sys.A[static_cast<std::size_t>(j)]).norm() > 1e-8)
        return false;
  }
  return true;
}

bool c7_perturbation_oracle() {
  Built cubic = build_system(jet1(harm() + xpow(3), 1), cd(1.0), 1, 20);
  auto ex = ztilde_sequence(cubic.sys, cubic.qf);
  if (std::abs(ex.ztilde[1]) > 1e-8) return false;
  if (std::abs(ex.ztilde[2] - cd(-11.0 / 16.0)) > 1e-8) return false;
  Built quartic = build_system(jet1(harm() + xpow(4), 2), cd(1.0), 1, 20);
  auto exq = ztilde_sequence(quartic.sys, quartic.qf);
  return std::abs(exq.ztilde[2] - cd(3.0 / 4.0)) < 1e-8;
}

bool c8_semiclassical_closure() {
  FockBasis b(1, 80, 16);
  ScaledAssembler asmbl(jet1(harm() + xpow(3), 1), b);
  std::vector<double> hs{0.02, 0.01, 0.005};
  std::vector<double> res;
  for (double h : hs) {
    const cd pred = h * (1.0 - (11.0 / 16.0) * h);
    auto found = eigen_near(ScaledOperator{h, asmbl.assemble(h)}, pred, 0.5 * h);
    if (found.empty()) return false;
    res.push_back(std::abs(found[0] - pred));
  }
  // |z_num - pred| <= C h^3 with a stable constant, slope in [2.7, 3.3]
  const double slope = std::log(res[0] / res[2]) / std::log(hs[0] / hs[2]);
  if (slope < 2.7 || slope > 3.3) return false;
  const double C0 = res[0] / std::pow(hs[0], 3), C2 = res[2] / std::pow(hs[2], 3);
  return C0 / C2 < 2.0 && C2 / C0 < 2.0;
}

bool c9_parity() {
  Built b = build_system(jet1(harm() + xpow(3), 2), cd(1.0), 1, 16);
  if (b.sys.A[1].norm() > 1e-10) return false;
  if (b.sys.A[3].norm() > 1e-10) return false;
  if (b.sys.A[5].norm() > 1e-10) return false;
  auto audit = parity_audit(b.sys, b.qf);
  return audit.applicable && audit.smat_parity_leak < 1e-10;
}

bool c10_residual_orders() {
  Built b = build_system(jet1(harm() + xpow(3), 2), cd(1.0), 1, 16);
  std::vector<double> hs{0.02, 0.01, 0.005};
  std::vector<GrushinResiduals> res;
  for (double h : hs) res.push_back(grushin_residuals(b.sys, b.qf, h));
  const double slope3 = std::log(res[0].eq3 / res[2].eq3) / std::log(hs[0] / hs[2]);
  if (std::abs(slope3 - 4.5) > 0.3) return false;
  for (const auto& r : res)
    if (r.eq4 > 1e-8) return false;
  const double c0 = res[0].eq1 / std::sqrt(hs[0]), c2 = res[2].eq1 / std::sqrt(hs[2]);
  return c0 / c2 < 2.0 && c2 / c0 < 2.0;
}

bool c11_resolvent_geography() {
  Poly p0 = Poly::variable(1, 1, 2) + Poly::variable(1, 0, 2).scaled(cd(0, 1)) +
            Poly::variable(1, 0, 4).scaled(cd(0.1));
  SymbolJet jet = jet1(p0, 1);
  QuadraticForm q = QuadraticForm::from_poly(jet.quadratic_part());
  auto qrep = analyze_quadratic(q);
  if (qrep.k0 != 1) return false;
  std::vector<cd> lattice = lattice_points(qrep.spectrum_modes, 40);

  FockBasis b(1, 40, 8);
  ScaledAssembler asmbl(jet, b);
  GridRect rect{-0.13, 0.13, -0.13, 0.13, 100, 100};
  RegionConstants rc;
  rc.C = 2.0;
  rc.c0 = 0.12;
  std::vector<double> omega_infs, disk_infs;
  for (double h : {0.02, 0.01}) {
    auto grid = pseudospectrum_scan(ScaledOperator{h, asmbl.assemble(h)}, rect, 2);
    auto chk = check_estimate_regions(grid, qrep.k0, lattice, rc);
    if (chk.omega_count == 0 || chk.disk_count == 0) return false;
    if (!(chk.omega_inf > 0.0) || !(chk.disk_inf > 0.0)) return false;
    omega_infs.push_back(chk.omega_inf);
    disk_infs.push_back(chk.disk_inf);
  }
  const double ro = omega_infs[0] / omega_infs[1], rd = disk_infs[0] / disk_infs[1];
  return ro < 2.0 && 1.0 / ro < 2.0 && rd < 2.0 && 1.0 / rd < 2.0;
}

bool c12_localization() {
  SymbolJet j(2, 1);
  Poly q2 = Poly::variable(2, 0, 2) + Poly::variable(2, 1, 2) + Poly::variable(2, 2, 2) +
            Poly::variable(2, 3, 2);
  Poly pert = Poly::variable(2, 0, 3) + Poly::variable(2, 1, 3);
  j.p = {q2 + pert, Poly(2)};
  Built b = build_system(j, cd(4.0), 2, 8, 12);
  auto loc = localization_N0_1(b.sys, b.qf);
  if (loc.d0 != 2 || loc.lambda_set.size() != 2) return false;
  for (const cd& r : loc.lambda_set)
    if (std::abs(r) > 1e-8) return false;

  std::vector<double> deltas{0.02, 0.04, 0.08}, margins;
  for (double d : deltas) {
    std::vector<cd> z = b.qf.z;
    z[1] = cd(d, 0.0);
    QuantizedFamily qz = reshift_family(b.qf, z);
    GrushinSystem s2 = b.sys;
    build_correctors(s2, qz);
    margins.push_back(effective_family(s2, 1e-6).margin);
  }
  const double slope = std::log(margins[2] / margins[0]) / std::log(deltas[2] / deltas[0]);
  return std::abs(slope - 1.0) < 0.2;
}

}  // namespace

int main() {
  criterion(1, "star-product exactness and associativity", c1_star_exactness);
  criterion(2, "quantization oracle and star homomorphism", c2_quantization_oracle);
  criterion(3, "rotated-oscillator spectrum formula", c3_spectrum_formula);
  criterion(4, "singular space and index k0", c4_singular_space);
  criterion(5, "projected Gaussian ground state", c5_ground_state);
  criterion(6, "recursive vs direct effective matrices", c6_direct_vs_recursive);
  criterion(7, "perturbation coefficients -11/16 and 3/4", c7_perturbation_oracle);
  criterion(8, "semiclassical eigenvalue closure", c8_semiclassical_closure);
  criterion(9, "parity selection rules", c9_parity);
  criterion(10, "approximate-inverse residual orders", c10_residual_orders);
  criterion(11, "resolvent estimate geography", c11_resolvent_geography);
  criterion(12, "finite localization of the effective pencil", c12_localization);

  if (g_failures == 0) {
    std::printf("all 12 criteria passed\n");
  } else {
    std::printf("%d criteria FAILED\n", g_failures);
  }
  return g_failures;
}
