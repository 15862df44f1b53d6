#include "typeiia/torusgrid.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "typeiia/hitchin.hpp"
#include "typeiia/liegeom.hpp"

namespace typeiia {

namespace {

int wrap(int i, int n) { return ((i % n) + n) % n; }

// Moves any roundoff mean of the fluctuation into the mean; otherwise a
// ~1e-17 constant offset swamps fluctuations that have decayed below it.
void recenter(GridField& f) {
  const double m = f.fluct.mean();
  f.fluct.array() -= m;
  f.mean += m;
}

void check_positive(const GridState& s) {
  const auto a = s.f[kA].values(), b = s.f[kB].values(), c = s.f[kC].values();
  for (int i = 0; i < s.n; ++i) {
    const double det = a[i] * b[i] - c[i] * c[i];
    if (!(det > 0) || !(a[i] > 0))
      throw PositivityLoss("ab - c^2 is not positive at node " + std::to_string(i) + " (t = " + std::to_string(s.t) + ")", s.t,
                           i, det);
  }
}

// Centered first difference.
Eigen::VectorXd diff1(const Eigen::VectorXd& f, double h) {
  const int n = static_cast<int>(f.size());
  Eigen::VectorXd out(n);
  for (int i = 0; i < n; ++i) out[i] = (f[wrap(i + 1, n)] - f[wrap(i - 1, n)]) / (2 * h);
  return out;
}

// Narrow centered second difference.
Eigen::VectorXd diff2(const Eigen::VectorXd& f, double h) {
  const int n = static_cast<int>(f.size());
  Eigen::VectorXd out(n);
  for (int i = 0; i < n; ++i) out[i] = (f[wrap(i + 1, n)] - 2 * f[i] + f[wrap(i - 1, n)]) / (h * h);
  return out;
}

std::vector<Form> diff1(const std::vector<Form>& f, double h) {
  const int n = static_cast<int>(f.size());
  std::vector<Form> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) out.push_back((1.0 / (2 * h)) * (f[wrap(i + 1, n)] - f[wrap(i - 1, n)]));
  return out;
}

Mat6 node_j(const GridState& s, int i) {
  const int n = s.n;
  const int k = wrap(i, n);
  auto at = [&](int f) { return s.f[f].mean + s.f[f].fluct[k]; };
  return build(grid_phi(at(kA), at(kB), at(kC), at(kD)), omega_standard()).J;
}

}  // namespace

GridState grid_from_fourier(int n, const std::array<FieldInit, 4>& init) {
  if (n < 4) throw std::invalid_argument("grid needs at least 4 nodes");
  GridState s;
  s.n = n;
  for (int q = 0; q < 4; ++q) {
    s.f[q].mean = init[q].mean;
    s.f[q].fluct = Eigen::VectorXd::Zero(n);
    for (const auto& term : init[q].terms) {
      if (term.mode < 1) throw std::invalid_argument("Fourier modes must be positive; put constants in the mean");
      if (2 * term.mode >= n) throw std::invalid_argument("Fourier mode not resolved by the grid");
      for (int i = 0; i < n; ++i) {
        const double th = 2 * std::numbers::pi * term.mode * s.x(i);
        s.f[q].fluct[i] += term.cos_coeff * std::cos(th) + term.sin_coeff * std::sin(th);
      }
    }
  }
  for (auto& f : s.f) recenter(f);
  check_positive(s);
  return s;
}

double min_det(const GridState& s) {
  const auto a = s.f[kA].values(), b = s.f[kB].values(), c = s.f[kC].values();
  return (a.array() * b.array() - c.array().square()).minCoeff();
}

Form grid_phi(double a, double b, double c, double d) {
  const double gamma = 0.5 * (c + d), delta = 0.5 * (d - c);
  return 0.5 * a * Form::e({1, 3, 5}) - 0.5 * b * Form::e({1, 4, 6}) - Form::e({2, 4, 5}) - Form::e({2, 3, 6}) +
         gamma * Form::e({1, 3, 6}) + delta * Form::e({1, 4, 5});
}

GridRate rhs_reduced(const GridState& s) {
  check_positive(s);
  GridRate r;
  const double h = s.h();
  for (int q : {kA, kB, kC}) r.v[q] = 4.0 * diff2(s.f[q].fluct, h);
  r.v[kD] = Eigen::VectorXd::Zero(s.n);
  return r;
}

GridRate rhs_general(const GridState& s, GeneralIntermediates* out) {
  check_positive(s);
  const int n = s.n;
  const double h = s.h();
  const Form omega = omega_standard();
  const SymplecticMatrix<double> symp(omega);
  const Form dx1 = Form::e({1});
  GeneralIntermediates mid;
  const auto a = s.f[kA].values(), b = s.f[kB].values(), c = s.f[kC].values(), d = s.f[kD].values();
  for (int i = 0; i < n; ++i) {
    const HitchinData P = build(grid_phi(a[i], b[i], c[i], d[i]), omega);
    mid.flux.push_back(P.norm_sq * P.phi_hat);
  }
  for (const Form& f : diff1(mid.flux, h)) mid.d_flux.push_back(wedge(dx1, f));
  for (const Form& f : mid.d_flux) mid.lambda_d_flux.push_back(lambda_contract(f, symp));
  for (const Form& f : diff1(mid.lambda_d_flux, h)) mid.rhs.push_back(wedge(dx1, f));
  GridRate r;
  for (auto& v : r.v) v.resize(n);
  for (int i = 0; i < n; ++i) {
    const Form& f = mid.rhs[i];
    const double r135 = f({0, 2, 4}), r146 = f({0, 3, 5}), r136 = f({0, 2, 5}), r145 = f({0, 3, 4});
    r.v[kA][i] = 2 * r135;
    r.v[kB][i] = -2 * r146;
    r.v[kC][i] = r136 - r145;
    r.v[kD][i] = r136 + r145;
  }
  if (out) *out = std::move(mid);
  return r;
}

Eigen::VectorXd nijenhuis_norm(const GridState& s) {
  const double h = s.h();
  const auto a = s.f[kA].values(), b = s.f[kB].values(), c = s.f[kC].values();
  const auto da = diff1(s.f[kA].fluct, h), db = diff1(s.f[kB].fluct, h), dc = diff1(s.f[kC].fluct, h);
  Eigen::VectorXd out(s.n);
  for (int i = 0; i < s.n; ++i) {
    const double v = a[i] * b[i] - c[i] * c[i];
    const double e5u = std::pow(2 * std::sqrt(v), 5);
    const double t1 = 2 * dc[i] - c[i] * db[i] / b[i] - c[i] * da[i] / a[i];
    const double t2 = a[i] * db[i] - da[i] * b[i];
    out[i] = 16 / e5u * (a[i] * b[i] * t1 * t1 + v / (a[i] * b[i]) * t2 * t2);
  }
  return out;
}

double nijenhuis_norm_frame(const GridState& s, int node) {
  const int k = wrap(node, s.n);
  auto at = [&](int f) { return s.f[f].mean + s.f[f].fluct[k]; };
  const HitchinData P = build(grid_phi(at(kA), at(kB), at(kC), at(kD)), omega_standard());
  const Mat6& J = P.J;
  const Mat6 dJ = (node_j(s, k + 1) - node_j(s, k - 1)) / (2 * s.h());
  const Mat6 JdJ = J * dJ;
  NijTensor N;
  // Coordinate fields commute and only d/dx^1 acts, so
  // 4 N(d_j, d_k) = J^1_j dJ_k - J^1_k dJ_j + [k = 1] J dJ_j - [j = 1] J dJ_k.
  for (int m = 0; m < kDim; ++m)
    for (int j = 0; j < kDim; ++j)
      for (int q = 0; q < kDim; ++q) {
        double v = J(0, j) * dJ(m, q) - J(0, q) * dJ(m, j);
        if (q == 0) v += JdJ(m, j);
        if (j == 0) v -= JdJ(m, q);
        N.upper(m, j, q) = 0.25 * v;
      }
  for (int i = 0; i < kDim; ++i)
    for (int j = 0; j < kDim; ++j)
      for (int q = 0; q < kDim; ++q) {
        double acc = 0;
        for (int m = 0; m < kDim; ++m) acc += P.g(i, m) * N.upper(m, j, q);
        N.lower(i, j, q) = acc;
      }
  return nijenhuis_norm_sq(N, P.g_inv);
}

Eigen::VectorXd grid_u(const GridState& s) {
  const auto a = s.f[kA].values(), b = s.f[kB].values(), c = s.f[kC].values();
  return (2.0 * (a.array() * b.array() - c.array().square()).sqrt()).log().matrix();
}

std::array<double, 2> fourier_mode(const GridField& f, int k) {
  const int n = static_cast<int>(f.fluct.size());
  double re = 0, im = 0;
  for (int i = 0; i < n; ++i) {
    const double th = 2 * std::numbers::pi * k * i / static_cast<double>(n);
    re += f.fluct[i] * std::cos(th);
    im -= f.fluct[i] * std::sin(th);
  }
  return {2 * re / n, 2 * im / n};
}

GridRow grid_observe(const GridState& s, const std::vector<double>& p_values) {
  GridRow r;
  r.t = s.t;
  const Eigen::VectorXd u = grid_u(s);
  r.min_u = u.minCoeff();
  r.max_u = u.maxCoeff();
  r.sup_N_sq = nijenhuis_norm(s).maxCoeff();
  for (double p : p_values) r.E.push_back((p * u.array()).exp().mean());
  r.min_det = min_det(s);
  r.min_norm_sq = u.array().exp().minCoeff();
  for (int q = 0; q < 4; ++q) r.mean[q] = s.f[q].mean + s.f[q].fluct.mean();
  const auto m = fourier_mode(s.f[kA], 1);
  r.mode1_a = std::hypot(m[0], m[1]);
  return r;
}

GridRun run_to_equilibrium(const GridState& s0, double t_max, const GridRunConfig& cfg) {
  check_positive(s0);
  const double h = s0.h();
  const double dt_max = cfg.dt > 0 ? cfg.dt : h * h / 16;
  std::vector<double> targets;
  for (double t : cfg.snapshot_times)
    if (t > s0.t && t < t_max) targets.push_back(t);
  std::sort(targets.begin(), targets.end());
  targets.push_back(t_max);

  GridRun run;
  run.dt = dt_max;
  run.rows.push_back(grid_observe(s0, cfg.p_values));
  GridState s = s0;
  auto add = [](const GridState& x, const GridRate& k, double w) {
    GridState y = x;
    for (int q = 0; q < 4; ++q) y.f[q].fluct += w * k.v[q];
    return y;
  };
  int since = 0;
  for (std::size_t seg = 0; seg < targets.size(); ++seg) {
    const double start = s.t;
    const double len = targets[seg] - start;
    if (len <= 0) continue;
    const long steps = static_cast<long>(std::ceil(len / dt_max - 1e-9));
    const double dt = len / static_cast<double>(steps);
    for (long k = 0; k < steps; ++k) {
      const GridRate k1 = rhs_reduced(s);
      const GridRate k2 = rhs_reduced(add(s, k1, 0.5 * dt));
      const GridRate k3 = rhs_reduced(add(s, k2, 0.5 * dt));
      const GridRate k4 = rhs_reduced(add(s, k3, dt));
      // d has zero rate and is left untouched.
      for (int q : {kA, kB, kC}) {
        s.f[q].fluct += (dt / 6) * (k1.v[q] + 2 * k2.v[q] + 2 * k3.v[q] + k4.v[q]);
        recenter(s.f[q]);
      }
      s.t = start + static_cast<double>(k + 1) * dt;
      check_positive(s);
      if (++since >= cfg.record_every) {
        run.rows.push_back(grid_observe(s, cfg.p_values));
        since = 0;
      }
    }
    s.t = targets[seg];
    if (seg + 1 < targets.size()) run.snapshots.push_back(s);
  }
  if (since != 0 || run.rows.back().t != s.t) run.rows.push_back(grid_observe(s, cfg.p_values));
  run.snapshots.push_back(s);
  run.final_state = s;
  return run;
}

}  // namespace typeiia
