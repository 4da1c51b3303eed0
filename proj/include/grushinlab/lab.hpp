#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "grushinlab/fock.hpp"
#include "grushinlab/grushin.hpp"
#include "grushinlab/quadratic.hpp"
#include "grushinlab/symbol_jet.hpp"

namespace grushinlab {

// Rescaled model operator p(h^{1/2} X; h): each jet monomial X^gamma of p_j
// carries the weight h^{j + |gamma|/2}. Homogeneous pieces are quantized once
// so the operator can be reassembled cheaply along an h list.
class ScaledAssembler {
 public:
  ScaledAssembler(const SymbolJet& jet, const FockBasis& basis) : basis_(&basis) {
    for (int j = 0; j < static_cast<int>(jet.p.size()); ++j) {
      const Poly& pj = jet.p[static_cast<std::size_t>(j)];
      for (int g = 0; g <= pj.degree(); ++g) {
        Poly part = pj.homogeneous_part(g);
        if (part.empty()) continue;
        pieces_.push_back(quantize(part, basis));
        weights_.push_back(static_cast<double>(j) + 0.5 * g);
      }
    }
    if (pieces_.empty()) throw std::invalid_argument("ScaledAssembler: empty jet");
  }

  FockOperator assemble(double h) const {
    if (!(h > 0)) throw std::invalid_argument("ScaledAssembler: h must be positive");
    FockOperator out = pieces_[0].scaled(std::pow(h, weights_[0]));
    for (std::size_t i = 1; i < pieces_.size(); ++i)
      out = out + pieces_[i].scaled(std::pow(h, weights_[i]));
    return out;
  }

  const FockBasis& basis() const { return *basis_; }

 private:
  const FockBasis* basis_;
  std::vector<FockOperator> pieces_;
  std::vector<double> weights_;
};

struct ScaledOperator {
  double h = 0.0;
  FockOperator op;
};

inline ScaledOperator assemble_scaled(const SymbolJet& jet, double h, const FockBasis& basis) {
  return {h, ScaledAssembler(jet, basis).assemble(h)};
}

// Dense eigendecomposition with a spurious-mode filter: modes whose
// eigenvector mass in the guard band (degree > n_cut) reaches 1% are
// truncation artifacts and are dropped. Returns eigenvalues inside the disk.
inline std::vector<cd> eigen_near(const ScaledOperator& sop, cd center, double radius,
                                  double guard_mass_tol = 0.01) {
  if (!(radius > 0)) throw std::invalid_argument("eigen_near: radius must be positive");
  const FockBasis& basis = *sop.op.basis;
  Eigen::ComplexEigenSolver<MatrixXcd> es(sop.op.mat, true);
  if (es.info() != Eigen::Success) throw std::runtime_error("eigen_near: eigensolver failed");
  const int mt = basis.block_size(basis.n_cut());

  std::vector<cd> found;
  for (int i = 0; i < es.eigenvalues().size(); ++i) {
    const cd lam = es.eigenvalues()(i);
    if (std::abs(lam - center) > radius) continue;
    const VectorXcd v = es.eigenvectors().col(i);
    const double tot = v.squaredNorm();
    const double guard_mass = tot - v.head(mt).squaredNorm();
    if (guard_mass >= guard_mass_tol * tot) continue;  // spurious
    found.push_back(lam);
  }
  std::sort(found.begin(), found.end(), [&](const cd& a, const cd& b) {
    return std::abs(a - center) < std::abs(b - center);
  });
  return found;
}

struct ExpansionFit {
  std::vector<double> h;
  std::vector<cd> z_num;
  std::vector<cd> z_pred;
  std::vector<double> residual;
  double fitted_slope = 0.0;
  double expected_slope = 0.0;
  bool slope_reliable = true;  // false when residuals hit round-off
};

inline cd expansion_value(const EigenExpansion& ex, double h, int J) {
  cd z = ex.z0;
  for (int j = 1; j <= J && j < static_cast<int>(ex.ztilde.size()); ++j)
    z += ex.ztilde[static_cast<std::size_t>(j)] * std::pow(h, 0.5 * j);
  return h * z;
}

// Compare truncated-operator eigenvalues against the predicted expansion
// h(z0 + sum z~_j h^{j/2}) over a decreasing h list; fit the residual order.
// Tracking uses the prediction as disk center, nearest-first, largest h down.
inline ExpansionFit validate_expansion(const ScaledAssembler& asmbl, const EigenExpansion& ex,
                                       std::vector<double> h_list, int J,
                                       double disk_factor = 0.5) {
  if (h_list.empty()) throw std::invalid_argument("validate_expansion: empty h list");
  std::sort(h_list.rbegin(), h_list.rend());

  ExpansionFit fit;
  fit.expected_slope = 1.0 + 0.5 * (J + 1);
  for (double h : h_list) {
    const cd pred = expansion_value(ex, h, J);
    const ScaledOperator sop{h, asmbl.assemble(h)};
    const double radius = disk_factor * h;
    const std::vector<cd> cands = eigen_near(sop, pred, radius);
    if (cands.empty())
      throw std::runtime_error("validate_expansion: no eigenvalue within " +
                               std::to_string(radius) + " of prediction at h = " +
                               std::to_string(h));
    if (cands.size() > 1 && std::abs(cands[1] - pred) < 0.5 * radius) {
      throw std::runtime_error(
          "validate_expansion: eigenvalue tracking ambiguity at h = " + std::to_string(h) +
          "; candidates " + std::to_string(cands[0].real()) + "+" +
          std::to_string(cands[0].imag()) + "i and " + std::to_string(cands[1].real()) + "+" +
          std::to_string(cands[1].imag()) + "i");
    }
    fit.h.push_back(h);
    fit.z_num.push_back(cands[0]);
    fit.z_pred.push_back(pred);
    fit.residual.push_back(std::abs(cands[0] - pred));
  }

  // log-log least squares; guard the round-off floor.
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int m = 0;
  for (std::size_t i = 0; i < fit.h.size(); ++i) {
    if (fit.residual[i] < 1e-13) {
      fit.slope_reliable = false;
      continue;
    }
    const double x = std::log(fit.h[i]), y = std::log(fit.residual[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++m;
  }
  if (m >= 2) {
    fit.fitted_slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  } else {
    fit.slope_reliable = false;
  }
  return fit;
}

struct GridRect {
  double re_min = 0, re_max = 1, im_min = 0, im_max = 1;
  int nx = 50, ny = 50;
};

struct PseudospectrumGrid {
  double h = 0.0;
  GridRect rect;
  std::vector<double> sigma_min;  // row-major: iy * nx + ix

  cd point(int ix, int iy) const {
    const double re = rect.nx > 1 ? rect.re_min + (rect.re_max - rect.re_min) * ix / (rect.nx - 1)
                                  : rect.re_min;
    const double im = rect.ny > 1 ? rect.im_min + (rect.im_max - rect.im_min) * iy / (rect.ny - 1)
                                  : rect.im_min;
    return {re, im};
  }
  double value(int ix, int iy) const {
    return sigma_min[static_cast<std::size_t>(iy) * static_cast<std::size_t>(rect.nx) + ix];
  }
};

// sigma_min(op - z) over a rectangle, dense SVD per point on the trusted
// block. Grid points are independent; split across workers by index stride,
// identical output for any worker count.
inline PseudospectrumGrid pseudospectrum_scan(const ScaledOperator& sop, const GridRect& rect,
                                              int workers = 1) {
  const FockBasis& basis = *sop.op.basis;
  const int mt = basis.block_size(basis.n_cut());
  const MatrixXcd A = sop.op.mat.topLeftCorner(mt, mt);

  PseudospectrumGrid grid;
  grid.h = sop.h;
  grid.rect = rect;
  const int total = rect.nx * rect.ny;
  grid.sigma_min.assign(static_cast<std::size_t>(total), 0.0);

  workers = std::max(1, workers);
  auto work = [&](int start) {
    MatrixXcd shifted(mt, mt);
    for (int idx = start; idx < total; idx += workers) {
      const int ix = idx % rect.nx, iy = idx / rect.nx;
      shifted = A;
      shifted.diagonal().array() -= grid.point(ix, iy);
      Eigen::JacobiSVD<MatrixXcd> svd(shifted);
      grid.sigma_min[static_cast<std::size_t>(idx)] = svd.singularValues()(mt - 1);
    }
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work, w);
    for (auto& t : pool) t.join();
  }
  return grid;
}

struct RegionCheck {
  // inf over Omega_h of sigma_min/(h^{2k0/(2k0+1)} |z|^{1/(2k0+1)})
  double omega_inf = 0.0;
  int omega_count = 0;
  // inf over {|z| <= disk_radius} minus lattice neighborhoods of sigma_min/h
  double disk_inf = 0.0;
  int disk_count = 0;
};

struct RegionConstants {
  double C = 10.0;           // Omega_h aperture and inner-radius constant
  double c0 = 1.0;           // Omega_h outer radius
  double disk_radius = 0.0;  // absolute; 0 means 5h
  double exclusion = 0.3;    // lattice-neighborhood radius in units of h
};

// Empirical resolvent geography: the subelliptic estimate region Omega_h and
// the fixed disk away from the rescaled spectrum lattice. Infima are the
// reported quantities; stability under h-halving is checked by the caller.
inline RegionCheck check_estimate_regions(const PseudospectrumGrid& grid, int k0,
                                          const std::vector<cd>& lattice,
                                          const RegionConstants& rc = {}) {
  if (k0 < 0) throw std::invalid_argument("check_estimate_regions: needs S = {0} (k0 >= 0)");
  const double h = grid.h;
  const double expo = 2.0 * k0 / (2.0 * k0 + 1.0);
  const double zexp = 1.0 / (2.0 * k0 + 1.0);
  const double disk_r = rc.disk_radius > 0 ? rc.disk_radius : 5.0 * h;

  RegionCheck out;
  double omega_inf = std::numeric_limits<double>::infinity();
  double disk_inf = std::numeric_limits<double>::infinity();
  for (int iy = 0; iy < grid.rect.ny; ++iy) {
    for (int ix = 0; ix < grid.rect.nx; ++ix) {
      const cd z = grid.point(ix, iy);
      const double az = std::abs(z);
      const double s = grid.value(ix, iy);

      if (az >= rc.C * h && az <= rc.c0 &&
          z.real() <= (1.0 / rc.C) * std::pow(h, expo) * std::pow(az, zexp)) {
        omega_inf = std::min(omega_inf, s / (std::pow(h, expo) * std::pow(az, zexp)));
        ++out.omega_count;
      }

      if (az <= disk_r) {
        bool near_lattice = false;
        for (const cd& mu : lattice)
          if (std::abs(z - h * mu) < rc.exclusion * h) {
            near_lattice = true;
            break;
          }
        if (!near_lattice) {
          disk_inf = std::min(disk_inf, s / h);
          ++out.disk_count;
        }
      }
    }
  }
  out.omega_inf = out.omega_count > 0 ? omega_inf : 0.0;
  out.disk_inf = out.disk_count > 0 ? disk_inf : 0.0;
  return out;
}

}  // namespace grushinlab
