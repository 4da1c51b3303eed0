#pragma once

#include <cmath>
#include <complex>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "grushinlab/grushin.hpp"
#include "grushinlab/lab.hpp"
#include "grushinlab/quadratic.hpp"
#include "grushinlab/symbol_jet.hpp"

namespace grushinlab {

using pjson = nlohmann::ordered_json;

// Exit-code contract: 2 invalid config, 3 assumption violated, 4 numerical.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct AssumptionViolation : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline pjson complex_json(cd z) { return pjson{{"re", z.real()}, {"im", z.imag()}}; }

inline cd parse_complex(const pjson& j, const char* where) {
  if (j.is_number()) return cd(j.get<double>(), 0.0);
  if (j.is_object())
    return cd(j.value("re", 0.0), j.value("im", 0.0));
  throw ConfigError(std::string(where) + ": expected a number or {re, im}");
}

// Symbol literal: list of {"alpha": [2n ints], "re": c, "im": c}.
inline Poly parse_symbol(const pjson& j, int n, const char* where) {
  if (!j.is_array()) throw ConfigError(std::string(where) + ": expected a term list");
  Poly p(n);
  for (const auto& term : j) {
    if (!term.contains("alpha"))
      throw ConfigError(std::string(where) + ": term without alpha");
    const auto& av = term.at("alpha");
    if (!av.is_array() || static_cast<int>(av.size()) != 2 * n)
      throw ConfigError(std::string(where) + ": alpha must have 2n entries");
    MultiIndex alpha(2 * static_cast<std::size_t>(n));
    for (int i = 0; i < 2 * n; ++i) {
      const int e = av[static_cast<std::size_t>(i)].get<int>();
      if (e < 0) throw ConfigError(std::string(where) + ": negative exponent");
      alpha[static_cast<std::size_t>(i)] = e;
    }
    p.add_term(alpha, cd(term.value("re", 0.0), term.value("im", 0.0)));
  }
  return p;
}

struct ProblemSpec {
  int n = 1, N0 = 1;
  SymbolJet jet{1, 1};
  // z0 selection
  std::string z0_mode;  // "bottom" | "lattice-index" | "explicit"
  int z0_index = 0;
  cd z0_explicit{0.0};
  std::vector<cd> z_tail;  // z_1..z_{2N0+2}, zeros if absent
  bool has_omega_box = false;
  double omega_re_min = 0, omega_re_max = 0, omega_im_min = 0, omega_im_max = 0;
  int n_cut = 30;
  int guard = -1;  // -1 = auto
  std::vector<double> h_list;
  double tol_rank = 1e-8, tol_pairing = 1e-8, tol_margin = 1e-8, tol_slope = 0.3;
  RegionConstants region;
  GridRect rect;

  int guard_value() const { return guard >= 0 ? guard : (2 * N0 + 2) * (N0 + 3); }
};

inline ProblemSpec load_problem(const pjson& j) {
  ProblemSpec spec;
  try {
    spec.n = j.at("n").get<int>();
    spec.N0 = j.at("N0").get<int>();
    if (spec.n < 1 || spec.N0 < 1) throw ConfigError("need n >= 1 and N0 >= 1");
    spec.jet = SymbolJet(spec.n, spec.N0);

    const auto& syms = j.at("symbols");
    for (int jj = 0;; ++jj) {
      const std::string key = "p" + std::to_string(jj);
      if (!syms.contains(key)) {
        if (jj <= 1) throw ConfigError("symbols: p0 and p1 are required (p1 may be empty)");
        break;
      }
      spec.jet.p.push_back(parse_symbol(syms.at(key), spec.n, key.c_str()));
    }

    const auto& z0 = j.at("z0");
    if (z0.is_string() && z0.get<std::string>() == "bottom") {
      spec.z0_mode = "bottom";
    } else if (z0.is_object() && z0.contains("lattice_index")) {
      spec.z0_mode = "lattice-index";
      spec.z0_index = z0.at("lattice_index").get<int>();
      if (spec.z0_index < 0) throw ConfigError("z0.lattice_index must be >= 0");
    } else {
      spec.z0_mode = "explicit";
      spec.z0_explicit = parse_complex(z0, "z0");
    }

    spec.z_tail.assign(static_cast<std::size_t>(2 * spec.N0 + 2), cd(0.0));
    if (j.contains("z_tail")) {
      const auto& zt = j.at("z_tail");
      if (static_cast<int>(zt.size()) != 2 * spec.N0 + 2)
        throw ConfigError("z_tail must have 2*N0+2 entries");
      for (std::size_t k = 0; k < zt.size(); ++k)
        spec.z_tail[k] = parse_complex(zt[k], "z_tail");
    }
    if (j.contains("omega_box")) {
      const auto& b = j.at("omega_box");
      spec.has_omega_box = true;
      spec.omega_re_min = b.at("re_min").get<double>();
      spec.omega_re_max = b.at("re_max").get<double>();
      spec.omega_im_min = b.at("im_min").get<double>();
      spec.omega_im_max = b.at("im_max").get<double>();
      if (spec.omega_re_min > spec.omega_re_max || spec.omega_im_min > spec.omega_im_max)
        throw ConfigError("omega_box: empty box");
    }

    spec.n_cut = j.at("n_cut").get<int>();
    if (spec.n_cut < 1) throw ConfigError("n_cut must be >= 1");
    if (j.contains("guard")) {
      const auto& g = j.at("guard");
      if (g.is_string()) {
        if (g.get<std::string>() != "auto") throw ConfigError("guard: expected \"auto\" or int");
      } else {
        spec.guard = g.get<int>();
        if (spec.guard < 0) throw ConfigError("guard must be >= 0");
      }
    }

    if (j.contains("h"))
      for (const auto& hv : j.at("h")) {
        const double h = hv.get<double>();
        if (!(h > 0)) throw ConfigError("h values must be positive");
        spec.h_list.push_back(h);
      }

    if (j.contains("tolerances")) {
      const auto& t = j.at("tolerances");
      spec.tol_rank = t.value("rank", spec.tol_rank);
      spec.tol_pairing = t.value("pairing", spec.tol_pairing);
      spec.tol_margin = t.value("margin", spec.tol_margin);
      spec.tol_slope = t.value("slope", spec.tol_slope);
    }
    if (j.contains("region")) {
      const auto& r = j.at("region");
      spec.region.C = r.value("C", spec.region.C);
      spec.region.c0 = r.value("c0", spec.region.c0);
      spec.region.disk_radius = r.value("disk_radius", spec.region.disk_radius);
      spec.region.exclusion = r.value("exclusion", spec.region.exclusion);
    }
    if (j.contains("rect")) {
      const auto& r = j.at("rect");
      spec.rect.re_min = r.at("re_min").get<double>();
      spec.rect.re_max = r.at("re_max").get<double>();
      spec.rect.im_min = r.at("im_min").get<double>();
      spec.rect.im_max = r.at("im_max").get<double>();
      spec.rect.nx = r.value("nx", 100);
      spec.rect.ny = r.value("ny", 100);
      if (spec.rect.nx < 2 || spec.rect.ny < 2) throw ConfigError("rect: need nx, ny >= 2");
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config parse: ") + e.what());
  }
  return spec;
}

inline ProblemSpec load_problem_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  pjson j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return load_problem(j);
}

// ---- analyze layer ----

struct AnalyzeOutcome {
  QuadraticForm q{1, MatrixXcd::Zero(2, 2)};
  QuadraticReport qrep;
  bool remainder_sector_ok = false;
  std::vector<std::string> caveats;
};

inline AnalyzeOutcome run_analyze_layer(const ProblemSpec& spec) {
  if (!spec.jet.doubly_characteristic(1e-14))
    throw AssumptionViolation(
        "double-characteristic condition violated: p0 has nonzero terms of degree <= 1 at 0");

  AnalyzeOutcome out;
  out.q = QuadraticForm::from_poly(spec.jet.quadratic_part());
  out.qrep = analyze_quadratic(out.q);
  if (!out.qrep.elliptic) {
    std::string w = "full ellipticity of the quadratic part violated: |q| = " +
                    std::to_string(out.qrep.min_abs_on_sphere) + " at witness (";
    const auto ell = check_elliptic(out.q);
    for (int i = 0; i < ell.witness.size(); ++i)
      w += (i ? ", " : "") + std::to_string(ell.witness(i));
    throw AssumptionViolation(w + ")");
  }
  out.remainder_sector_ok = check_remainder_sector(spec.jet, 0.5, 2000);
  out.caveats = {
      "nonnegativity of Re p0 on all of phase space is not decidable from the jet; not checked",
      "ellipticity at infinity is not decidable from the jet; recorded as a caveat",
      "uniqueness of the characteristic point is not decidable from the jet; recorded as a caveat"};
  if (!out.remainder_sector_ok)
    out.caveats.push_back(
        "remainder of p0 beyond the quadratic part is not confined to a sector in Re z > 0 near "
        "0; results apply to the truncated-Taylor model operator only");
  return out;
}

inline pjson analyze_report(const ProblemSpec& spec, const AnalyzeOutcome& out) {
  pjson rep;
  rep["n"] = spec.n;
  rep["N0"] = spec.N0;
  const HamiltonMap H = hamilton_map(out.q);
  pjson F = pjson::array();
  for (int i = 0; i < H.F.rows(); ++i) {
    pjson row = pjson::array();
    for (int k = 0; k < H.F.cols(); ++k) row.push_back(complex_json(H.F(i, k)));
    F.push_back(row);
  }
  rep["hamilton_map"] = F;
  rep["elliptic"] = out.qrep.elliptic;
  rep["min_abs_on_sphere"] = out.qrep.min_abs_on_sphere;
  rep["sector"] = {{"axis", out.qrep.sector.axis}, {"aperture", out.qrep.sector.aperture}};
  rep["singular_space_dim"] = static_cast<int>(out.qrep.singular_space_basis.size());
  rep["k0"] = out.qrep.k0;
  if (out.qrep.subelliptic_exponent)
    rep["subelliptic_exponent"] = *out.qrep.subelliptic_exponent;
  pjson modes = pjson::array();
  for (const auto& m : out.qrep.spectrum_modes)
    modes.push_back(pjson{{"mu", complex_json(m.mu)}, {"r", m.r}});
  rep["spectrum_modes"] = modes;
  pjson lattice = pjson::array();
  for (const cd& v : lattice_points(out.qrep.spectrum_modes, 5)) lattice.push_back(complex_json(v));
  rep["lattice_head"] = lattice;
  if (out.qrep.ground_state) {
    pjson B = pjson::array();
    for (int i = 0; i < out.qrep.ground_state->Bplus.rows(); ++i) {
      pjson row = pjson::array();
      for (int k = 0; k < out.qrep.ground_state->Bplus.cols(); ++k)
        row.push_back(complex_json(out.qrep.ground_state->Bplus(i, k)));
      B.push_back(row);
    }
    rep["B_plus"] = B;
    rep["bottom_eigenvalue"] = complex_json(out.qrep.ground_state->bottom_eigenvalue);
  }
  rep["remainder_sector_ok"] = out.remainder_sector_ok;
  rep["caveats"] = out.caveats;
  rep["tolerances"] = {{"rank", spec.tol_rank},
                       {"ellipticity", 1e-6},
                       {"n_cut", spec.n_cut},
                       {"guard", spec.guard_value()}};
  return rep;
}

// ---- grushin layer ----

inline cd resolve_z0(const ProblemSpec& spec, const QuadraticReport& qrep, cd p1_at_0) {
  if (spec.z0_mode == "explicit") return spec.z0_explicit;
  if (!qrep.ground_state)
    throw std::runtime_error("z0 selection requires the elliptic spectral lattice");
  if (spec.z0_mode == "bottom") return qrep.ground_state->bottom_eigenvalue + p1_at_0;
  const auto lat = lattice_points(qrep.spectrum_modes, spec.n_cut);
  if (spec.z0_index >= static_cast<int>(lat.size()))
    throw ConfigError("z0.lattice_index out of enumerated range");
  return lat[static_cast<std::size_t>(spec.z0_index)] + p1_at_0;
}

struct GrushinOutcome {
  cd z0{0.0};
  int expected_d = 0;
  FockBasis basis{1, 1, 0};
  QuantizedFamily qf;
  GrushinSystem sys;
};

inline GrushinOutcome run_grushin_layer(const ProblemSpec& spec, const AnalyzeOutcome& an) {
  GrushinOutcome out;
  const cd p1_at_0 = spec.jet.subprincipal_at_0();
  out.z0 = resolve_z0(spec, an.qrep, p1_at_0);
  const cd mu0 = out.z0 - p1_at_0;
  out.expected_d = lattice_multiplicity(an.qrep.spectrum_modes, mu0, spec.n_cut);
  if (out.expected_d == 0)
    throw std::runtime_error(
        "z0 - p1(0) is not a spectrum lattice value: expected kernel dimension 0");

  std::vector<cd> z(static_cast<std::size_t>(2 * spec.N0 + 3), cd(0.0));
  z[0] = out.z0;
  for (int k = 1; k <= 2 * spec.N0 + 2; ++k)
    z[static_cast<std::size_t>(k)] = spec.z_tail[static_cast<std::size_t>(k - 1)];

  out.basis = FockBasis(spec.n, spec.n_cut, spec.guard_value());
  const AkFamily fam = build_ak_family(spec.jet, SpectralParameter(spec.N0, z));
  out.qf = quantize_family(fam, out.basis);
  GrushinOptions gopts;
  gopts.rank_tol = spec.tol_rank;
  out.sys = build_grushin_system(out.basis, out.qf, out.expected_d, gopts);
  return out;
}

// Halton sequence in [0,1]^dim (quasi-random Omega samples; deterministic).
inline std::vector<std::vector<double>> halton_points(int count, int dim) {
  static const int primes[] = {2,  3,  5,  7,  11, 13, 17, 19, 23, 29,
                               31, 37, 41, 43, 47, 53, 59, 61, 67, 71};
  if (dim > 20) throw std::invalid_argument("halton_points: dim too large");
  std::vector<std::vector<double>> pts;
  for (int i = 1; i <= count; ++i) {
    std::vector<double> p;
    for (int d = 0; d < dim; ++d) {
      const int base = primes[d];
      double f = 1.0, r = 0.0;
      int k = i;
      while (k > 0) {
        f /= base;
        r += f * (k % base);
        k /= base;
      }
      p.push_back(r);
    }
    pts.push_back(std::move(p));
  }
  return pts;
}

// z-tail samples for the Theorem 3.1 criterion over the Omega box: corner/
// center tensor grid per coordinate plus quasi-random interior points.
inline std::vector<std::vector<cd>> omega_samples(const ProblemSpec& spec) {
  const int m = 2 * spec.N0 + 2;
  std::vector<std::vector<cd>> samples;
  if (!spec.has_omega_box) {
    samples.push_back(spec.z_tail);
    return samples;
  }
  const double rm = spec.omega_re_min, rM = spec.omega_re_max;
  const double im = spec.omega_im_min, iM = spec.omega_im_max;
  const std::vector<cd> nodes = {cd(rm, im), cd(rm, iM), cd(rM, im), cd(rM, iM),
                                 cd(0.5 * (rm + rM), 0.5 * (im + iM))};
  // Tensor product of the 5 nodes per coordinate, capped for large m.
  double total = std::pow(5.0, m);
  if (total <= 4000) {
    std::vector<cd> cur(static_cast<std::size_t>(m));
    std::function<void(int)> rec = [&](int k) {
      if (k == m) {
        samples.push_back(cur);
        return;
      }
      for (const cd& v : nodes) {
        cur[static_cast<std::size_t>(k)] = v;
        rec(k + 1);
      }
    };
    rec(0);
  }
  for (const auto& p : halton_points(100, 2 * m)) {
    std::vector<cd> zt;
    for (int k = 0; k < m; ++k)
      zt.emplace_back(rm + (rM - rm) * p[static_cast<std::size_t>(2 * k)],
                      im + (iM - im) * p[static_cast<std::size_t>(2 * k + 1)]);
    samples.push_back(std::move(zt));
  }
  return samples;
}

inline pjson grushin_report(const ProblemSpec& spec, GrushinOutcome& gr) {
  pjson rep;
  rep["z0"] = complex_json(gr.z0);
  rep["d"] = gr.sys.d;
  rep["pairing"] = complex_json(gr.sys.pairing());
  rep["smallest_kept_singular_value"] = gr.sys.smallest_kept_sv;

  pjson As = pjson::array();
  for (int j = 1; j <= 2 * spec.N0 + 2; ++j) {
    pjson A = pjson::array();
    const MatrixXcd& Aj = gr.sys.A[static_cast<std::size_t>(j)];
    for (int r = 0; r < Aj.rows(); ++r) {
      pjson row = pjson::array();
      for (int c = 0; c < Aj.cols(); ++c) row.push_back(complex_json(Aj(r, c)));
      A.push_back(row);
    }
    As.push_back(A);
  }
  rep["A"] = As;

  // Theorem 3.1 margin over the h grid and the Omega samples.
  std::vector<double> hs = spec.h_list;
  if (hs.empty()) hs = {0.02, 0.01, 0.005};
  double margin_inf = std::numeric_limits<double>::infinity();
  const auto samples = omega_samples(spec);
  pjson margin_table = pjson::array();
  for (const auto& ztail : samples) {
    std::vector<cd> z = gr.qf.z;
    for (int k = 1; k <= 2 * spec.N0 + 2; ++k)
      z[static_cast<std::size_t>(k)] = ztail[static_cast<std::size_t>(k - 1)];
    QuantizedFamily qz = reshift_family(gr.qf, z);
    GrushinSystem s2 = gr.sys;
    build_correctors(s2, qz);
    for (double h : hs) {
      const auto ev = effective_family(s2, h);
      margin_inf = std::min(margin_inf, ev.margin);
      if (&ztail == &samples.front())
        margin_table.push_back(pjson{{"h", h}, {"sigma_min", ev.sigma_min}, {"margin", ev.margin}});
    }
  }
  rep["margin_at_config_tail"] = margin_table;
  rep["margin_inf"] = margin_inf;
  rep["omega_samples"] = static_cast<int>(samples.size());
  rep["criterion_satisfied"] = margin_inf > spec.tol_margin;

  if (spec.N0 == 1) {
    const auto loc = localization_N0_1(gr.sys, gr.qf);
    pjson lj;
    lj["d0"] = loc.d0;
    lj["classification"] = loc.classification;
    pjson roots = pjson::array();
    for (const cd& r : loc.lambda_set) roots.push_back(complex_json(r));
    lj["lambda"] = roots;
    rep["localization"] = lj;
  }

  if (gr.sys.d == 1) {
    try {
      const auto ex = ztilde_sequence(gr.sys, gr.qf, spec.tol_pairing);
      pjson zt = pjson::array();
      for (int j = 1; j <= 2 * spec.N0 + 2; ++j)
        zt.push_back(complex_json(ex.ztilde[static_cast<std::size_t>(j)]));
      rep["ztilde"] = zt;
    } catch (const std::exception& e) {
      rep["ztilde"] = std::string("unavailable: ") + e.what();
    }
  } else {
    rep["ztilde"] = "unsupported: d > 1";
  }

  const auto audit = parity_audit(gr.sys, gr.qf);
  pjson pa;
  pa["applicable"] = audit.applicable;
  if (!audit.note.empty()) pa["note"] = audit.note;
  if (audit.applicable) {
    pa["phi_parity"] = audit.phi_parity;
    pa["psi_parity"] = audit.psi_parity;
    pa["max_forbidden_A_norm"] = audit.max_forbidden_A;
    pa["smat_parity_leak"] = audit.smat_parity_leak;
  }
  rep["parity"] = pa;
  rep["tolerances"] = {{"rank", spec.tol_rank}, {"pairing", spec.tol_pairing},
                       {"margin", spec.tol_margin}, {"n_cut", spec.n_cut},
                       {"guard", spec.guard_value()}};
  return rep;
}

// ---- validate layer ----

inline pjson validate_report(const ProblemSpec& spec, const GrushinOutcome& gr) {
  if (gr.sys.d != 1)
    throw std::runtime_error("validate: eigenvalue expansion requires d = 1, got d = " +
                             std::to_string(gr.sys.d));
  if (spec.h_list.empty()) throw ConfigError("validate: h list required");

  const auto ex = ztilde_sequence(gr.sys, gr.qf, spec.tol_pairing);
  const ScaledAssembler asmbl(spec.jet, gr.basis);
  const int J = 2 * spec.N0 + 2;
  const auto fit = validate_expansion(asmbl, ex, spec.h_list, J);

  // Expected slope: the first nonzero correction beyond order J; when trailing
  // ztilde vanish (parity), the expansion is accurate to a higher order than
  // the generic 1 + (J+1)/2 and the fitted slope may exceed it.
  pjson rep;
  pjson rows = pjson::array();
  for (std::size_t i = 0; i < fit.h.size(); ++i)
    rows.push_back(pjson{{"h", fit.h[i]},
                         {"z_num_re", fit.z_num[i].real()},
                         {"z_num_im", fit.z_num[i].imag()},
                         {"residual", fit.residual[i]}});
  rep["fits"] = rows;
  rep["fitted_slope"] = fit.fitted_slope;
  rep["expected_slope"] = fit.expected_slope;
  rep["slope_reliable"] = fit.slope_reliable;
  rep["pass"] = !fit.slope_reliable || fit.fitted_slope >= fit.expected_slope - spec.tol_slope;
  return rep;
}

// ---- pseudospectrum layer ----

inline void write_grid_csv(const PseudospectrumGrid& grid, const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw std::runtime_error("cannot open output file: " + path);
  std::fprintf(f, "re_z,im_z,sigma_min\n");
  for (int iy = 0; iy < grid.rect.ny; ++iy)
    for (int ix = 0; ix < grid.rect.nx; ++ix) {
      const cd z = grid.point(ix, iy);
      std::fprintf(f, "%.17g,%.17g,%.17g\n", z.real(), z.imag(), grid.value(ix, iy));
    }
  std::fclose(f);
}

inline std::string h_tag(double h) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%g", h);
  return buf;
}

inline pjson pseudospectrum_report(const ProblemSpec& spec, const AnalyzeOutcome& an,
                                   const std::string& out_dir, int workers) {
  if (spec.h_list.empty()) throw ConfigError("pseudospectrum: h list required");
  const FockBasis basis(spec.n, spec.n_cut, spec.guard_value());
  const ScaledAssembler asmbl(spec.jet, basis);
  const cd p1_at_0 = spec.jet.subprincipal_at_0();
  std::vector<cd> lattice;
  for (const cd& v : lattice_points(an.qrep.spectrum_modes, spec.n_cut))
    lattice.push_back(v + p1_at_0);

  pjson rep;
  pjson grids = pjson::array();
  for (double h : spec.h_list) {
    const ScaledOperator sop{h, asmbl.assemble(h)};
    const auto grid = pseudospectrum_scan(sop, spec.rect, workers);
    const std::string file = "grid_" + h_tag(h) + ".csv";
    write_grid_csv(grid, out_dir + "/" + file);
    pjson g;
    g["h"] = h;
    g["file"] = file;
    if (an.qrep.k0 >= 0) {
      const auto rc = check_estimate_regions(grid, an.qrep.k0, lattice, spec.region);
      g["omega_inf"] = rc.omega_inf;
      g["omega_points"] = rc.omega_count;
      g["disk_inf"] = rc.disk_inf;
      g["disk_points"] = rc.disk_count;
      if (rc.omega_count == 0) g["omega_note"] = "region empty at given constants";
      if (rc.disk_count == 0) g["disk_note"] = "region empty at given constants";
    } else {
      g["region_note"] = "singular space nontrivial; subelliptic region check skipped";
    }
    grids.push_back(g);
  }
  rep["grids"] = grids;
  rep["region_constants"] = {{"C", spec.region.C},
                             {"c0", spec.region.c0},
                             {"disk_radius", spec.region.disk_radius},
                             {"exclusion", spec.region.exclusion}};
  rep["note"] =
      "the constants in the resolvent estimates are existential; reported infima demonstrate "
      "stability, not the constants";
  return rep;
}

}  // namespace grushinlab
