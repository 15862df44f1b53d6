// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "typeiia/flow.hpp"
#include "typeiia/hitchin.hpp"
#include "typeiia/identities.hpp"
#include "typeiia/torusgrid.hpp"

using namespace typeiia;

namespace {

constexpr double kPi = std::numbers::pi;

struct Verdict {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

FlowEngine engine_for(const std::string& name) { return FlowEngine(builtin_model(name), *builtin_ansatz(name)); }

double mabs(const Mat6& m) { return m.cwiseAbs().maxCoeff(); }

// Runs whose monotonicity is audited by the last criterion.
struct Audit {
  std::vector<std::pair<std::string, FlowRun>> homogeneous;
  GridRun grid;
  bool have_grid = false;
};

Verdict nil_exact(Audit& audit) {
  Verdict v;
  const auto t0 = std::chrono::steady_clock::now();
  const FlowEngine e = engine_for("nil");
  RunConfig cfg;
  cfg.dt = 1e-3;
  cfg.t_max = 1;
  const FlowRun run = e.run(e.state(Eigen::Vector2d(0, 0.3)), cfg);
  const double secs = seconds_since(t0);
  const auto& last = run.rows.back();
  const double da = std::abs(last.params[0] - 8.0), db = std::abs(last.params[1] - 0.3);
  double dn = 0;
  int checkpoints = 0;
  for (const auto& r : run.rows) {
    const double k = r.t * 10;
    if (r.t > 0 && std::abs(k - std::round(k)) < 1e-9) {
      dn = std::max(dn, std::abs(r.norm_N_sq - std::pow(1 + r.params[0] - r.params[1] * r.params[1], -1.5)));
      ++checkpoints;
    }
  }
  v.detail << "a(1)-8=" << da << " b(1)-0.3=" << db << " |N|^2 dev=" << dn << " at " << checkpoints << " checkpoints, "
           << secs << " s";
  v.require(!run.blowup.detected && std::abs(last.t - 1) < 1e-12, "reached t = 1");
  v.require(da < 1e-8, "a(1)");
  v.require(db < 1e-12, "b(1)");
  v.require(checkpoints == 10 && dn < 1e-6, "|N|^2 checkpoints");
  v.require(secs < 1, "runtime");
  audit.homogeneous.emplace_back("nil", run);
  return v;
}

Verdict solv_singularity(Audit& audit) {
  Verdict v;
  const auto t0 = std::chrono::steady_clock::now();
  const FlowEngine e = engine_for("solv");
  const Eigen::Vector4d p0(1, 1, 0.5, 0.4);
  const Oracle o = make_oracle("solv", p0);
  const double l = solv_lambda();
  const double A = p0[0] * p0[3], B = p0[1] * p0[2];
  const double T = (std::log(A) - std::log(B)) / (32 * l * l * (A - B));
  RunConfig cfg;
  cfg.dt = T / 1000;
  cfg.t_max = 2 * T;
  const FlowRun run = e.run(e.state(p0), cfg);
  const OracleReport rep = oracle_compare(run, o, 0.9);
  double min_n = INFINITY;
  for (const auto& r : run.rows) min_n = std::min(min_n, r.norm_N_sq);

  // Approach the singularity and read off the anti-invariant Ricci part.
  RunConfig near = cfg;
  near.t_max = 0.999 * T;
  const FlowRun late = e.run(e.state(p0), near);
  const double anti = std::sqrt(late.rows.back().anti_ricci_sq);
  const double secs = seconds_since(t0);

  v.detail << "T=" << T << " bracket=[" << run.blowup.t_last << ", " << run.blowup.t_upper << "] width_rel="
           << rep.bracket_width_rel << " dev(0.9T)=" << rep.param_deviation << " min|N|^2-4l^2=" << min_n - 4 * l * l
           << " |R^-J|(" << late.rows.back().t / T << "T)=" << anti << ", " << secs << " s";
  v.require(std::abs(o.blowup_time - T) <= 1e-12 * T, "closed-form T");
  v.require(run.blowup.detected && rep.bracket_contains_T, "bracket contains T");
  v.require(rep.bracket_width_rel < 0.01, "bracket width");
  v.require(rep.param_deviation < 1e-6, "closed-form state");
  v.require(min_n >= 4 * l * l - 1e-8, "|N|^2 lower bound");
  v.require(!late.blowup.detected && std::abs(late.rows.back().t - 0.999 * T) < 1e-12, "reached 0.999 T");
  v.require(anti < 1e-3, "harmonic limit");
  v.require(secs < 5, "runtime");
  audit.homogeneous.emplace_back("solv", run);
  return v;
}

Verdict solv_self_expander(Audit& audit) {
  Verdict v;
  const FlowEngine e = engine_for("solv");
  const Eigen::VectorXd p0 = Eigen::Vector4d::Constant(std::sqrt(0.5));
  const double l = solv_lambda();
  const double T = make_oracle("solv", p0).blowup_time;
  RunConfig cfg;
  cfg.dt = T / 1000;
  cfg.t_max = 0.9 * T;
  const FlowRun run = e.run(e.state(p0), cfg);
  double dj = 0, dn = 0;
  for (const auto& r : run.rows) {
    dj = std::max(dj, mabs(r.J - run.rows.front().J));
    dn = std::max(dn, std::abs(r.norm_N_sq - 4 * l * l));
  }
  const double dev = oracle_compare(run, make_oracle("solv", p0), 0.9).param_deviation;
  v.detail << "T=" << T << " max|J-J0|=" << dj << " max||N|^2-4l^2|=" << dn << " (4l^2=" << 4 * l * l
           << ") dev=" << dev << " rows=" << run.rows.size();
  v.require(!run.blowup.detected, "no blow-up before 0.9 T");
  v.require(std::abs(T - 1 / (16 * l * l)) < 1e-14, "T = 1/(16 l^2)");
  v.require(dj < 1e-8, "J stationary");
  v.require(dn < 1e-8, "|N|^2 = 4 l^2");
  v.require(dev < 1e-6, "closed-form state");
  audit.homogeneous.emplace_back("solv critical", run);
  return v;
}

std::array<FieldInit, 4> grid_data() {
  return {FieldInit{2, {{1, 0, 0.2}}}, FieldInit{2, {{1, 0.2, 0}}}, FieldInit{0, {{1, 0.1, 0}}}, FieldInit{0.1, {}}};
}

double evaluator_gap(int n) {
  const GridState s = grid_from_fourier(n, grid_data());
  const GridRate g = rhs_general(s), r = rhs_reduced(s);
  double worst = 0;
  for (int k = 0; k < 4; ++k) worst = std::max(worst, (g.v[k] - r.v[k]).cwiseAbs().maxCoeff());
  return worst;
}

Verdict torus_convergence(Audit& audit) {
  Verdict v;
  const auto t0 = std::chrono::steady_clock::now();
  const double g64 = evaluator_gap(64), g128 = evaluator_gap(128);
  const GridState s0 = grid_from_fourier(128, grid_data());
  GridRunConfig cfg;
  cfg.record_every = 1;
  GridRun run = run_to_equilibrium(s0, 1.0, cfg);
  const auto m0 = fourier_mode(s0.f[kA], 1), m1 = fourier_mode(run.final_state.f[kA], 1);
  const double decay = std::hypot(m1[0], m1[1]) / std::hypot(m0[0], m0[1]);
  const double rel = std::abs(decay / std::exp(-16 * kPi * kPi) - 1);
  const double supN = nijenhuis_norm(run.final_state).cwiseAbs().maxCoeff();
  const double dchange = (run.final_state.f[kD].values() - s0.f[kD].values()).cwiseAbs().maxCoeff();
  const double secs = seconds_since(t0);
  v.detail << "gap64/gap128=" << g64 / g128 << " mode1 decay/e^{-16pi^2}-1=" << rel << " sup|N|^2=" << supN
           << " d change=" << dchange << ", " << secs << " s";
  v.require(g64 / g128 >= 3.5 && g64 / g128 <= 4.5, "evaluator refinement ratio");
  v.require(rel < 0.05, "first-mode decay");
  v.require(supN < 1e-4, "terminal |N|^2");
  v.require(dchange <= 1e-12, "d constant");
  v.require(secs < 30, "runtime");
  audit.grid = std::move(run);
  audit.have_grid = true;
  return v;
}

Verdict identity_suite_all() {
  Verdict v;
  std::mt19937_64 rng(2024);
  double worst = 0;
  std::string worst_name;
  int failures = 0;
  for (const char* name : {"torus", "nil", "solv"}) {
    const LieModel m = builtin_model(name);
    for (int trial = 0; trial < 100; ++trial) {
      const IdentityReport r = identity_suite(build(random_point(m, rng), m.omega), m, 1e-9);
      if (!r.pass()) ++failures;
      for (const auto& c : r.checks)
        if (c.residual > worst) {
          worst = c.residual;
          worst_name = std::string(name) + ":" + c.name;
        }
    }
  }
  v.detail << "300 points, worst residual " << worst << " (" << worst_name << "), failing points " << failures;
  v.require(failures == 0 && worst < 1e-9, "identity residuals");
  return v;
}

Verdict rhs_equivalence() {
  Verdict v;
  std::mt19937_64 rng(2025);
  double worst = 0;
  for (const char* name : {"torus", "nil", "solv"}) {
    const LieModel m = builtin_model(name);
    for (int trial = 0; trial < 100; ++trial) {
      const HitchinData d = build(random_point(m, rng), m.omega);
      const Form a = rhs_primary(d, m), b = rhs_laplacian(d, m);
      worst = std::max(worst, (a - b).max_abs() / std::max({a.max_abs(), b.max_abs(), 1.0}));
    }
  }
  v.detail << "300 states, worst relative gap " << worst;
  v.require(worst < 1e-9, "evaluator agreement");
  return v;
}

Verdict variation_of_phi_hat() {
  Verdict v;
  std::mt19937_64 rng(2026);
  std::normal_distribution<double> nd;
  double worst = 0;
  const char* names[] = {"torus", "nil", "solv"};
  for (int trial = 0; trial < 100; ++trial) {
    const LieModel m = builtin_model(names[trial % 3]);
    const HitchinData d = build(random_point(m, rng), m.omega);
    const Eigen::MatrixXd P = primitive_basis(m.omega);
    Eigen::VectorXd z(P.cols());
    for (auto& x : z) x = nd(rng);
    Form dphi(3, P * z);
    dphi = (1.0 / dphi.coeffs().norm()) * dphi;
    const double h = 1e-5;
    const Form fd = (1.0 / (2 * h)) * (build(d.phi + h * dphi, m.omega).phi_hat - build(d.phi - h * dphi, m.omega).phi_hat);
    const Form an = variation_hat(d, dphi);
    worst = std::max(worst, (fd - an).coeffs().norm() / an.coeffs().norm());
  }
  v.detail << "100 perturbations, worst relative error " << worst;
  v.require(worst < 1e-6, "finite-difference agreement");
  return v;
}

Verdict symbol_spectrum_check() {
  Verdict v;
  std::mt19937_64 rng(2027);
  std::normal_distribution<double> nd;
  const double ref[5] = {1, 1, 1, 1, 0};
  double worst = 0;
  auto probe = [&](const HitchinData& d, const Vec6& xi) {
    const SymbolReport r = symbol_spectrum(d, xi);
    for (int i = 0; i < 5; ++i) worst = std::max(worst, std::abs(r.eigenvalues[i] - ref[i]));
    worst = std::max({worst, r.max_imag, r.leakage});
  };
  const HitchinData can = build(phi_canonical(), omega_standard());
  probe(can, basis_vector<double>(0));
  probe(can, basis_vector<double>(2));
  for (int trial = 0; trial < 100; ++trial) {
    const Mat6 A = random_symplectic(omega_standard(), rng);
    Vec6 xi;
    for (auto& x : xi) x = nd(rng);
    probe(build(pullback(phi_canonical(), A), omega_standard()), xi);
  }
  v.detail << "canonical + 100 symplectic frames, worst deviation " << worst;
  v.require(worst < 1e-10, "spectrum {1,1,1,1,0}");
  return v;
}

Verdict monotonicity(const Audit& audit) {
  Verdict v;
  for (const auto& [name, run] : audit.homogeneous) {
    const MonotonicityReport m = check_monotonicity(run);
    bool e1 = true, em1 = true;
    for (std::size_t i = 1; i < run.rows.size(); ++i) {
      const auto &a = run.rows[i - 1], &b = run.rows[i];
      for (std::size_t q = 0; q < run.p_values.size(); ++q) {
        if (run.p_values[q] == 1.0 && b.E[q] < a.E[q] - 1e-12 * a.E[q]) e1 = false;
        if (run.p_values[q] == -1.0 && b.E[q] > a.E[q] + 1e-12 * a.E[q]) em1 = false;
      }
    }
    v.detail << " " << name << ": du/dt worst ratio " << m.du_dt_worst << ";";
    v.require(m.u_nondecreasing, name + " u nondecreasing");
    v.require(m.norm_N_nonincreasing, name + " |N|^2 nonincreasing");
    v.require(e1 && em1 && m.dilaton_monotone, name + " E_1 / E_-1");
    v.require(m.min_norm_bound, name + " min |phi|^2");
    v.require(m.du_dt_matches, name + " du/dt = e^u |N|^2");
  }
  if (audit.have_grid) {
    const auto& R = audit.grid.rows;
    bool u = true, e1 = true, em1 = true, mn = true;
    for (std::size_t i = 1; i < R.size(); ++i) {
      if (R[i].min_u < R[i - 1].min_u - 1e-12) u = false;
      if (R[i].E[0] < R[i - 1].E[0] - 1e-12) e1 = false;
      if (R[i].E[1] > R[i - 1].E[1] + 1e-12) em1 = false;
      if (R[i].min_norm_sq < R[0].min_norm_sq - 1e-9) mn = false;
    }
    v.detail << " torus grid: " << R.size() << " rows";
    v.require(u, "grid min u nondecreasing");
    v.require(e1 && em1, "grid E_1 / E_-1");
    v.require(mn, "grid min |phi|^2");
  } else {
    v.require(false, "torus grid run missing");
  }
  return v;
}

}  // namespace

int main() {
  Audit audit;
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
      {"nilmanifold exact solution", [&] { return nil_exact(audit); }},
      {"solvmanifold singularity", [&] { return solv_singularity(audit); }},
      {"solvmanifold self-expander", [&] { return solv_self_expander(audit); }},
      {"torus convergence", [&] { return torus_convergence(audit); }},
      {"identity suite", identity_suite_all},
      {"evaluator equivalence", rhs_equivalence},
      {"variation of phi_hat", variation_of_phi_hat},
      {"symbol spectrum", symbol_spectrum_check},
      {"monotonicity", [&] { return monotonicity(audit); }},
  };
  bool all = true;
  int index = 1;
  for (const auto& [name, fn] : criteria) {
    Verdict v;
    try {
      v = fn();
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail << " [exception: " << e.what() << "]";
    }
    all = all && v.pass;
    std::printf("%s criterion %d (%s):%s%s\n", v.pass ? "PASS" : "FAIL", index++, name.c_str(),
                v.detail.str().empty() || v.detail.str()[0] == ' ' ? "" : " ", v.detail.str().c_str());
    std::fflush(stdout);
  }
  return all ? 0 : 1;
}
