#include <catch2/catch_amalgamated.hpp>

#include <memory>

#include "grushinlab/grushin.hpp"
#include "grushinlab/lab.hpp"
#include "grushinlab/quadratic.hpp"

using namespace grushinlab;

namespace {

Poly harm() { return Poly::variable(1, 0, 2) + Poly::variable(1, 1, 2); }

SymbolJet jet1(const Poly& p0, int N0 = 1, const Poly& p1 = Poly(1)) {
  SymbolJet j(1, N0);
  j.p = {p0, p1};
  return j;
}

}  // namespace

TEST_CASE("scaled assembly of the harmonic jet") {
  FockBasis b(1, 20, 4);
  const double h = 0.1;
  ScaledOperator sop = assemble_scaled(jet1(harm()), h, b);
  for (int k = 0; k <= 20; ++k) CHECK(std::abs(sop.op.mat(k, k) - cd(h * (2.0 * k + 1.0))) < 1e-13);

  // h = 1 equals plain quantization of the full Taylor polynomial
  ScaledOperator one = assemble_scaled(jet1(harm() + Poly::variable(1, 0, 3)), 1.0, b);
  FockOperator direct = quantize(harm() + Poly::variable(1, 0, 3), b);
  CHECK((one.op.mat - direct.mat).norm() < 1e-12);
}

TEST_CASE("cubic block carries weight h^{3/2}") {
  FockBasis b(1, 10, 6);
  const double h = 0.01;
  ScaledOperator sop = assemble_scaled(jet1(harm() + Poly::variable(1, 0, 3)), h, b);
  FockOperator X3 = quantize(Poly::variable(1, 0, 3), b);
  // the |0> -> |3> entry comes only from the cubic part
  CHECK(std::abs(sop.op.mat(3, 0) - std::pow(h, 1.5) * X3.mat(3, 0)) < 1e-15);
}

TEST_CASE("eigenvalues near the rescaled lattice") {
  FockBasis b(1, 30, 6);
  const double h = 0.05;
  ScaledOperator sop = assemble_scaled(jet1(harm()), h, b);

  auto one = eigen_near(sop, cd(h), h / 2);
  REQUIRE(one.size() == 1);
  CHECK(std::abs(one[0] - cd(h)) < 1e-12);

  CHECK(eigen_near(sop, cd(2.0 * h), h / 4).empty());

  // first 6 lattice points to 1e-9 relative
  for (int k = 0; k < 6; ++k) {
    const cd target = h * (2.0 * k + 1.0);
    auto found = eigen_near(sop, target, h / 2);
    REQUIRE(found.size() == 1);
    CHECK(std::abs(found[0] - target) < 1e-9 * std::abs(target));
  }
}

TEST_CASE("expansion validation on the unperturbed operator") {
  FockBasis b(1, 30, 6);
  SymbolJet j = jet1(harm(), 1, Poly::constant(1, cd(0.25)));
  ScaledAssembler asmbl(j, b);
  EigenExpansion ex;
  ex.z0 = cd(1.25);
  ex.ztilde.assign(5, cd(0.0));
  auto fit = validate_expansion(asmbl, ex, {0.04, 0.02, 0.01}, 4);
  for (double r : fit.residual) CHECK(r < 1e-12);
  CHECK_FALSE(fit.slope_reliable);
}

TEST_CASE("expansion validation on the cubic example") {
  FockBasis b(1, 60, 16);
  SymbolJet j = jet1(harm() + Poly::variable(1, 0, 3));
  ScaledAssembler asmbl(j, b);
  EigenExpansion ex;
  ex.z0 = cd(1.0);
  ex.ztilde = {cd(0.0), cd(0.0), cd(-11.0 / 16.0)};
  auto fit = validate_expansion(asmbl, ex, {0.02, 0.01, 0.005}, 2);
  REQUIRE(fit.slope_reliable);
  // next correction is h^3 (the half-order term vanishes by parity)
  CHECK(fit.fitted_slope > 2.7);
  CHECK(fit.fitted_slope < 3.3);
}

TEST_CASE("pseudospectrum of the self adjoint oscillator") {
  FockBasis b(1, 25, 6);
  const double h = 0.05;
  ScaledOperator sop = assemble_scaled(jet1(harm()), h, b);
  GridRect rect{h, 3.0 * h, 0.0, 0.0, 21, 2};
  rect.im_min = -1e-3;
  rect.im_max = 1e-3;
  auto grid = pseudospectrum_scan(sop, rect, 1);
  for (int ix = 0; ix < rect.nx; ++ix) {
    const cd z = grid.point(ix, 0);
    double dist = std::min(std::abs(z - cd(h)), std::abs(z - cd(3.0 * h)));
    dist = std::min(dist, std::abs(z - cd(5.0 * h)));
    CHECK(std::abs(grid.value(ix, 0) - dist) < 1e-10);
  }
}

TEST_CASE("grid point on an eigenvalue") {
  FockBasis b(1, 25, 6);
  const double h = 0.05;
  ScaledOperator sop = assemble_scaled(jet1(harm()), h, b);
  GridRect rect{h, h, -1e-12, 1e-12, 2, 2};
  rect.re_max = h + 1e-12;
  auto grid = pseudospectrum_scan(sop, rect, 1);
  CHECK(grid.value(0, 0) < 1e-10);
}

TEST_CASE("conjugation symmetry for real symbols") {
  FockBasis b(1, 20, 6);
  const double h = 0.05;
  ScaledOperator sop = assemble_scaled(jet1(harm() + Poly::variable(1, 0, 3)), h, b);
  GridRect rect{0.5 * h, 2.0 * h, -h, h, 11, 11};
  auto grid = pseudospectrum_scan(sop, rect, 1);
  for (int iy = 0; iy < 11; ++iy)
    for (int ix = 0; ix < 11; ++ix)
      CHECK(std::abs(grid.value(ix, iy) - grid.value(ix, 10 - iy)) < 1e-10);
}

TEST_CASE("scan is deterministic across worker counts") {
  FockBasis b(1, 20, 6);
  ScaledOperator sop = assemble_scaled(jet1(harm() + Poly::variable(1, 0, 3)), 0.05, b);
  GridRect rect{0.02, 0.2, -0.1, 0.1, 13, 9};
  auto g1 = pseudospectrum_scan(sop, rect, 1);
  auto g3 = pseudospectrum_scan(sop, rect, 3);
  REQUIRE(g1.sigma_min.size() == g3.sigma_min.size());
  for (std::size_t i = 0; i < g1.sigma_min.size(); ++i)
    CHECK(g1.sigma_min[i] == g3.sigma_min[i]);
}

TEST_CASE("non normal pseudospectrum extends beyond the spectrum") {
  // rotated oscillator at theta = pi/2: eigenvalues on the ray at angle pi/4;
  // z in the interior of the symbol range (first quadrant, off the ray) has
  // sigma_min far below the distance to the spectrum
  FockBasis b(1, 60, 8);
  Poly q = Poly::variable(1, 1, 2) + Poly::variable(1, 0, 2).scaled(cd(0, 1));
  const double h = 0.005;
  ScaledOperator sop = assemble_scaled(jet1(q), h, b);

  const cd ray = std::exp(cd(0, kPi / 4));
  const cd z = 20.0 * h * std::exp(cd(0, kPi / 8));  // interior point, |z| in the bulk
  MatrixXcd A = sop.op.trusted_block(b.n_cut());
  A.diagonal().array() -= z;
  Eigen::JacobiSVD<MatrixXcd> svd(A);
  const double smin = svd.singularValues()(A.rows() - 1);
  double dist = 1e9;
  for (int k = 0; k < 40; ++k) dist = std::min(dist, std::abs(z - h * (2.0 * k + 1.0) * ray));
  CHECK(smin / dist < 0.1);
}

TEST_CASE("estimate regions for the elliptic self adjoint case") {
  FockBasis b(1, 40, 6);
  const double h = 0.02;
  ScaledOperator sop = assemble_scaled(jet1(harm()), h, b);
  GridRect rect{-0.12, 0.12, -0.12, 0.12, 61, 61};
  auto grid = pseudospectrum_scan(sop, rect, 2);

  std::vector<cd> lattice;
  for (int k = 0; k < 40; ++k) lattice.emplace_back(2.0 * k + 1.0, 0.0);
  RegionConstants rc;
  rc.C = 2.0;
  rc.c0 = 0.12;
  auto check = check_estimate_regions(grid, 0, lattice, rc);
  CHECK(check.omega_count > 0);
  CHECK(check.disk_count > 0);
  CHECK(check.omega_inf > 0.1);  // normal operator: sigma_min = distance
  CHECK(check.disk_inf > 0.1);
}

TEST_CASE("lattice neighborhoods are excluded from the disk region") {
  PseudospectrumGrid grid;
  grid.h = 0.02;
  grid.rect = GridRect{0.02, 0.02, 0.0, 0.0, 2, 2};
  grid.rect.re_max = 0.0201;
  grid.rect.im_max = 1e-6;
  grid.sigma_min = {0.0, 0.0, 0.0, 0.0};  // exactly on h * lattice point 1
  std::vector<cd> lattice{cd(1.0)};
  RegionConstants rc;
  rc.C = 100.0;  // empty Omega region
  auto check = check_estimate_regions(grid, 1, lattice, rc);
  CHECK(check.disk_count == 0);
  CHECK(check.omega_count == 0);
}
