#include "typeiia/flow.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <limits>

namespace typeiia {

Form Ansatz::embed(const Eigen::VectorXd& p) const {
  if (p.size() != size()) throw std::invalid_argument("ansatz '" + name + "' expects " + std::to_string(size()) + " parameters");
  Form out = offset;
  for (int i = 0; i < size(); ++i) out.coeffs() += p[i] * directions[i].coeffs();
  return out;
}

Eigen::VectorXd Ansatz::project(const Form& v, double* residual) const {
  Eigen::MatrixXd D(binom6(3), size());
  for (int i = 0; i < size(); ++i) D.col(i) = directions[i].coeffs();
  const Eigen::VectorXd c = D.colPivHouseholderQr().solve(v.coeffs());
  if (residual) {
    const double scale = v.max_abs();
    *residual = scale > 0 ? (v.coeffs() - D * c).cwiseAbs().maxCoeff() / scale : 0.0;
  }
  return c;
}

std::optional<Ansatz> builtin_ansatz(const std::string& model_name) {
  Ansatz a;
  a.name = model_name;
  if (model_name == "nil") {
    a.param_names = {"a", "b"};
    a.offset = Form::e({1, 3, 5}) - Form::e({1, 4, 6}) - Form::e({2, 4, 5}) - Form::e({2, 3, 6});
    a.directions = {Form::e({1, 3, 5}), Form::e({1, 3, 4}) - Form::e({1, 5, 6})};
    a.defaults = Eigen::Vector2d(0, 0);
    return a;
  }
  if (model_name == "solv") {
    a.param_names = {"alpha", "beta", "gamma", "delta"};
    a.directions = {Form::e({1, 3, 5}) + Form::e({1, 3, 6}), Form::e({1, 4, 5}) - Form::e({1, 4, 6}),
                    Form::e({2, 3, 5}) - Form::e({2, 3, 6}), -Form::e({2, 4, 5}) - Form::e({2, 4, 6})};
    a.defaults = Eigen::Vector4d::Constant(std::sqrt(0.5));
    return a;
  }
  if (model_name == "torus") {
    // e^alpha e^135 - e^beta e^146 - e^245 - e^236 + gamma e^136 + delta e^145 with constant fields.
    a.param_names = {"a", "b", "c", "d"};
    a.offset = -Form::e({2, 4, 5}) - Form::e({2, 3, 6});
    a.directions = {0.5 * Form::e({1, 3, 5}), -0.5 * Form::e({1, 4, 6}), 0.5 * (Form::e({1, 3, 6}) - Form::e({1, 4, 5})),
                    0.5 * (Form::e({1, 3, 6}) + Form::e({1, 4, 5}))};
    a.defaults = Eigen::Vector4d(2, 2, 0, 0);
    return a;
  }
  return std::nullopt;
}

Ansatz full_ansatz() {
  Ansatz a;
  a.name = "full";
  const int n = binom6(3);
  for (int r = 0; r < n; ++r) {
    Form b(3);
    b.coeffs()[r] = 1;
    a.directions.push_back(b);
    std::string label = "phi";
    const unsigned m = mask_at(3, r);
    for (int i = 0; i < kDim; ++i)
      if (m & (1u << i)) label += std::to_string(i + 1);
    a.param_names.push_back(label);
  }
  a.defaults = phi_canonical().coeffs();
  return a;
}

FlowState::FlowState(std::shared_ptr<const LieModel> m, Eigen::VectorXd p, Form f, double time)
    : t(time), params(std::move(p)), phi(std::move(f)), cache(build(phi, m->omega)), model(std::move(m)) {}

Form rhs_primary(const HitchinData& point, const LieModel& m) {
  const Form flux = point.norm_sq * point.phi_hat;
  return d_invariant(lambda_contract(d_invariant(flux, m), point.symp), m);
}

Form rhs_primary(const FlowState& s) { return rhs_primary(s.cache, *s.model); }

Form rhs_laplacian(const HitchinData& point, const LieModel& m) {
  const Connection conn = levi_civita(point.g, m);
  const NijTensor N = nijenhuis(point.J, point.g, m);
  const Form co = codifferential(conn, point.g_inv, point.norm_sq * point.phi);
  const Form nd = point.norm_sq * ndagger(N, point.g_inv, point.phi);
  return -d_invariant(co, m) + 2.0 * d_invariant(nd, m);
}

Form rhs_laplacian(const FlowState& s) { return rhs_laplacian(s.cache, *s.model); }

FlowEngine::FlowEngine(LieModel model, Ansatz ansatz, StepControl control)
    : model_(std::make_shared<const LieModel>(std::move(model))), ansatz_(std::move(ansatz)), control_(control) {}

FlowState FlowEngine::state(const Eigen::VectorXd& params, double t) const {
  if (!params.allFinite()) throw NotStable("non-finite parameters");
  return FlowState(model_, params, ansatz_.embed(params), t);
}

Eigen::VectorXd FlowEngine::velocity(const FlowState& s) const {
  double residual = 0;
  Eigen::VectorXd v = ansatz_.project(rhs_primary(s), &residual);
  if (residual > control_.ansatz_tol) throw AnsatzLeak("rhs leaves the '" + ansatz_.name + "' ansatz");
  return v;
}

FlowState FlowEngine::rk4(const FlowState& s, double dt) const {
  const Eigen::VectorXd& p = s.params;
  const Eigen::VectorXd k1 = velocity(s);
  const Eigen::VectorXd k2 = velocity(state(p + 0.5 * dt * k1, s.t + 0.5 * dt));
  const Eigen::VectorXd k3 = velocity(state(p + 0.5 * dt * k2, s.t + 0.5 * dt));
  const Eigen::VectorXd k4 = velocity(state(p + dt * k3, s.t + dt));
  return state(p + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4), s.t + dt);
}

namespace {

double closed_residual(const Form& phi, const LieModel& m) {
  return d_invariant(phi, m).max_abs() / std::max(1.0, phi.max_abs());
}

bool gates_pass(const FlowState& s, const StepControl& c) {
  if (!s.params.allFinite() || !s.phi.coeffs().allFinite()) return false;
  if (closed_residual(s.phi, *s.model) > c.closed_tol) return false;
  if (primitivity_defect(s.phi, s.model->omega) > c.primitive_tol) return false;
  return std::isfinite(s.cache.norm_sq) && s.cache.g.allFinite();
}

}  // namespace

StepResult FlowEngine::step(const FlowState& s, double dt) const {
  if (!(dt > 0)) throw std::invalid_argument("step size must be positive");
  const double dt0 = dt;
  int halvings = 0;
  while (true) {
    if (dt < control_.dt_floor) {
      // Every step in the ladder dt0, dt0/2, ... failed.
      throw StepUnderflow("step size fell below the floor", s.t, s.t + 2.0 * dt0);
    }
    try {
      FlowState next = rk4(s, dt);
      bool ok = gates_pass(next, control_);
      if (ok && control_.accuracy_tol > 0) {
        const FlowState half = rk4(rk4(s, 0.5 * dt), 0.5 * dt);
        const double scale = std::max(1.0, half.params.cwiseAbs().maxCoeff());
        ok = (next.params - half.params).cwiseAbs().maxCoeff() <= control_.accuracy_tol * scale;
      }
      if (ok) return StepResult{std::move(next), dt, halvings};
    } catch (const std::domain_error&) {
    } catch (const AnsatzLeak&) {
    }
    dt *= 0.5;
    ++halvings;
  }
}

ObservablesRow FlowEngine::observe(const FlowState& s, const std::vector<double>& p_values) const {
  const HitchinData& P = s.cache;
  const LieModel& m = *s.model;
  ObservablesRow r;
  r.t = s.t;
  r.params = s.params;
  r.u = P.u;
  r.norm_sq = P.norm_sq;
  const NijTensor N = nijenhuis(P.J, P.g, m);
  r.norm_N_sq = nijenhuis_norm_sq(N, P.g_inv);
  for (double p : p_values) r.E.push_back(std::exp(p * P.u));
  r.positivity_margin = Eigen::SelfAdjointEigenSolver<Mat6>(P.g).eigenvalues().minCoeff();
  r.stability_margin = -P.lambda;
  r.closed_residual = closed_residual(P.phi, m);
  r.primitive_residual = primitivity_defect(P.phi, P.omega);
  const Curvature curv = curvature(levi_civita(P.g, m), P.g, m);
  const double an = bilinear_norm(anti_invariant_part(curv.ricci, P.J), P.g_inv);
  r.anti_ricci_sq = an * an;
  r.J = P.J;
  return r;
}

FlowRun FlowEngine::run(const FlowState& s0, const RunConfig& cfg) const {
  if (!(cfg.dt > 0)) throw std::invalid_argument("dt must be positive");
  if (cfg.record_every < 1) throw std::invalid_argument("record_every must be at least 1");
  FlowRun out;
  out.model = model_->name;
  out.p_values = cfg.p_values;
  out.rows.push_back(observe(s0, cfg.p_values));
  FlowState s = s0;
  double dt = cfg.dt;
  // Times are base + k dt so that a run of equal steps lands on t_max exactly.
  double base = s0.t;
  long k = 0;
  int since = 0;
  bool last_recorded = true;
  while (cfg.t_max - s.t > 1e-9 * dt) {
    const double h = std::min(dt, cfg.t_max - s.t);
    std::optional<StepResult> attempt;
    try {
      attempt.emplace(step(s, h));
    } catch (const StepUnderflow& e) {
      double ladder = 0;
      for (double x = cfg.dt; x >= control_.dt_floor; x *= 0.5) ladder += x;
      out.blowup = BlowupRecord{true, e.t_last, e.t_last + ladder, e.what()};
      break;
    }
    StepResult& r = *attempt;
    out.rejected += r.halvings;
    ++out.accepted;
    if (r.dt_used < dt) {
      dt = r.dt_used;
      base = s.t;
      k = 0;
    }
    ++k;
    r.state.t = base + static_cast<double>(k) * dt;
    s = std::move(r.state);
    last_recorded = false;
    if (++since >= cfg.record_every) {
      out.rows.push_back(observe(s, cfg.p_values));
      since = 0;
      last_recorded = true;
    }
  }
  if (!last_recorded) out.rows.push_back(observe(s, cfg.p_values));
  return out;
}

namespace {

// Centered difference checks of a recorded series against a predicted derivative.
// The O(h^2) truncation term is estimated from the third difference.
void derivative_check(const std::vector<ObservablesRow>& rows, double (*value)(const ObservablesRow&),
                      double (*rate)(const ObservablesRow&), bool* ok, double* worst) {
  *ok = true;
  *worst = 0;
  const std::size_t n = rows.size();
  for (std::size_t i = 1; i + 2 < n; ++i) {
    const double h = rows[i].t - rows[i - 1].t;
    auto same = [&](std::size_t j) { return std::abs((rows[j + 1].t - rows[j].t) - h) <= 1e-9 * h; };
    if (!(h > 0) || !same(i) || !same(i + 1)) continue;
    const double cd = (value(rows[i + 1]) - value(rows[i - 1])) / (2 * h);
    auto third = [&](std::size_t j) {
      return std::abs(value(rows[j + 2]) - 3 * value(rows[j + 1]) + 3 * value(rows[j]) - value(rows[j - 1]));
    };
    // Windows on either side of t_i bracket the third derivative there.
    double d3 = third(i);
    if (i >= 2 && same(i - 1) && same(i - 2)) d3 = std::max(d3, third(i - 1));
    // Roundoff floor: each stored value carries a few ulps, amplified by 1/h.
    const double fmax = std::max({std::abs(value(rows[i - 1])), std::abs(value(rows[i])), std::abs(value(rows[i + 1]))});
    const double noise = 16 * std::numeric_limits<double>::epsilon() * fmax / h;
    const double tol = 1e-8 + 2.0 * d3 / (6.0 * h) + noise;
    const double ratio = std::abs(cd - rate(rows[i])) / tol;
    *worst = std::max(*worst, ratio);
    if (!(ratio <= 1)) *ok = false;
  }
}

}  // namespace

MonotonicityReport check_monotonicity(const FlowRun& run, double slack) {
  MonotonicityReport rep;
  const auto& R = run.rows;
  if (R.empty()) return rep;
  for (std::size_t i = 0; i < R.size(); ++i) {
    if (R[i].norm_sq < R[0].norm_sq - 1e-9) rep.min_norm_bound = false;
    if (i == 0) continue;
    const auto& a = R[i - 1];
    const auto& b = R[i];
    if (b.u < a.u - slack * std::max(1.0, std::abs(a.u))) rep.u_nondecreasing = false;
    if (b.norm_N_sq > a.norm_N_sq + slack * std::max(1.0, a.norm_N_sq)) rep.norm_N_nonincreasing = false;
    for (std::size_t q = 0; q < run.p_values.size(); ++q) {
      const double p = run.p_values[q];
      const double tol = slack * std::max(1.0, std::abs(a.E[q]));
      if (p > 0 && p <= 1 && b.E[q] < a.E[q] - tol) rep.dilaton_monotone = false;
      if (p < 0 && b.E[q] > a.E[q] + tol) rep.dilaton_monotone = false;
    }
  }
  for (std::size_t i = 1; i + 1 < R.size(); ++i) {
    const double h0 = R[i].t - R[i - 1].t, h1 = R[i + 1].t - R[i].t;
    if (!(h0 > 0 && h1 > 0)) continue;
    const double f0 = std::exp(-R[i - 1].u), f1 = std::exp(-R[i].u), f2 = std::exp(-R[i + 1].u);
    const double s0 = (f1 - f0) / h0, s1 = (f2 - f1) / h1;
    if (s1 < s0 - 4 * slack * std::max(1.0, f1) / std::min(h0, h1)) rep.e_minus_u_convex = false;
  }
  derivative_check(
      R, [](const ObservablesRow& r) { return r.u; }, [](const ObservablesRow& r) { return std::exp(r.u) * r.norm_N_sq; },
      &rep.du_dt_matches, &rep.du_dt_worst);
  derivative_check(
      R, [](const ObservablesRow& r) { return r.norm_N_sq; },
      [](const ObservablesRow& r) { return -2.0 * std::exp(r.u) * r.anti_ricci_sq; }, &rep.dN_dt_matches,
      &rep.dN_dt_worst);
  return rep;
}

MetricFlowResidual metric_flow_check(const FlowEngine& engine, const FlowState& s, double h) {
  const LieModel& m = engine.model();
  const HitchinData& P = s.cache;
  const FlowState plus = engine.rk4(s, h);
  const FlowState minus = engine.rk4(s, -h);
  auto mabs = [](const Mat6& x) { return x.cwiseAbs().maxCoeff(); };
  MetricFlowResidual out;
  {
    const Mat6 dg = (plus.cache.g - minus.cache.g) / (2 * h);
    const Curvature curv = curvature(levi_civita(P.g, m), P.g, m);
    const Mat6 pred = -2.0 * std::exp(P.u) * anti_invariant_part(curv.ricci, P.J);
    out.g = mabs(dg - pred) / std::max({mabs(dg), mabs(pred), 1.0});
  }
  {
    const Mat6 dgt = (plus.cache.g_tilde - minus.cache.g_tilde) / (2 * h);
    const Mat6& gt = P.g_tilde;
    const Mat6 gti = gt.inverse();
    const Curvature curv = curvature(levi_civita(gt, m), gt, m);
    const NijTensor N = nijenhuis(P.J, gt, m);
    const Mat6 pred = std::exp(2 * P.u) * (-2.0 * curv.ricci - 4.0 * n_squared_minus(N, gti) + nijenhuis_norm_sq(N, gti) * gt);
    out.g_tilde = mabs(dgt - pred) / std::max({mabs(dgt), mabs(pred), 1.0});
  }
  return out;
}

Oracle make_oracle(const std::string& model, const Eigen::VectorXd& p0) {
  Oracle o;
  o.model = model;
  o.p0 = p0;
  const double inf = std::numeric_limits<double>::infinity();
  if (model == "nil" && p0.size() == 2) {
    o.blowup_time = inf;
  } else if (model == "torus" && p0.size() == 4) {
    o.blowup_time = inf;
  } else if (model == "solv" && p0.size() == 4) {
    const double l = solv_lambda();
    const double A = p0[0] * p0[3], B = p0[1] * p0[2];
    const double k = 32 * l * l;
    o.blowup_time = std::abs(A - B) <= 1e-14 * std::max(A, B) ? 1.0 / (k * A) : (std::log(A) - std::log(B)) / (k * (A - B));
  } else {
    throw UnknownOracle("no closed-form solution registered for model '" + model + "'");
  }
  return o;
}

Eigen::VectorXd Oracle::params(double t) const {
  if (model == "nil") return Eigen::Vector2d(p0[0] + 8 * t, p0[1]);
  if (model == "torus") return p0;
  const double l = solv_lambda();
  const double k = 32 * l * l;
  const double A = p0[0] * p0[3], B = p0[1] * p0[2];
  Eigen::VectorXd p(4);
  if (std::abs(A - B) <= 1e-14 * std::max(A, B)) {
    const double s = 1.0 / std::sqrt(1 - k * A * t);
    return p0 * s;
  }
  const double C = B - A;
  const double den = B * std::exp(k * A * t) - A * std::exp(k * B * t);
  const double fB = std::sqrt(C * std::exp(k * B * t) / den);
  const double fA = std::sqrt(C * std::exp(k * A * t) / den);
  p << p0[0] * fB, p0[1] * fA, p0[2] * fA, p0[3] * fB;
  return p;
}

double Oracle::norm_N_sq(double t) const {
  if (model == "nil") return std::pow(1 + p0[0] + 8 * t - p0[1] * p0[1], -1.5);
  if (model == "torus") return 0;
  const double l = solv_lambda();
  const double A = p0[0] * p0[3], B = p0[1] * p0[2];
  const double C = B - A;
  const double e = 16 * l * l * C * t;
  return 2 * l * l / std::sqrt(A * B) * (A * std::exp(e) + B * std::exp(-e));
}

OracleReport oracle_compare(const FlowRun& run, const Oracle& oracle, double horizon_fraction) {
  OracleReport rep;
  rep.predicted_T = oracle.blowup_time;
  rep.blowup_expected = std::isfinite(oracle.blowup_time);
  rep.horizon = rep.blowup_expected ? horizon_fraction * oracle.blowup_time : std::numeric_limits<double>::infinity();
  for (const auto& r : run.rows) {
    if (r.t > rep.horizon) continue;
    const Eigen::VectorXd ex = oracle.params(r.t);
    for (int i = 0; i < ex.size(); ++i)
      rep.param_deviation = std::max(rep.param_deviation, std::abs(r.params[i] - ex[i]) / std::max(std::abs(ex[i]), 1.0));
    const double n = oracle.norm_N_sq(r.t);
    rep.norm_N_deviation = std::max(rep.norm_N_deviation, std::abs(r.norm_N_sq - n) / std::max(n, 1.0));
  }
  if (rep.blowup_expected && run.blowup.detected) {
    rep.bracket_contains_T = run.blowup.t_last <= rep.predicted_T && rep.predicted_T <= run.blowup.t_upper;
    rep.bracket_width_rel = (run.blowup.t_upper - run.blowup.t_last) / rep.predicted_T;
  }
  return rep;
}

Form random_point(const LieModel& m, std::mt19937_64& rng, double scale) {
  const Eigen::MatrixXd K = closed_primitive_basis(m);
  if (K.cols() == 0) throw InvalidModel("model has no closed primitive invariant 3-forms");
  std::normal_distribution<double> nd;
  auto positive = [&](const Form& f) {
    try {
      build(f, m.omega);
      return true;
    } catch (const std::domain_error&) {
      return false;
    }
  };
  // A file model may reuse a built-in name with a different structure, so the
  // ansatz default is only trusted when it is actually closed and positive.
  auto usable = [&](const Form& f) { return closed_residual(f, m) < 1e-12 && positive(f); };
  Form base(3);
  bool found = false;
  if (auto a = builtin_ansatz(m.name)) found = usable(base = a->embed(a->defaults));
  if (!found) found = usable(base = phi_canonical());
  for (int tries = 0; tries < 1000 && !found; ++tries) {
    Eigen::VectorXd z(K.cols());
    for (int i = 0; i < z.size(); ++i) z[i] = nd(rng);
    base = Form(3, K * z);
    found = positive(base) || positive(base = -base);
  }
  if (!found) throw InvalidModel("no positive closed primitive invariant 3-form found");
  for (int tries = 0; tries < 1000; ++tries) {
    Eigen::VectorXd z(K.cols());
    for (int i = 0; i < z.size(); ++i) z[i] = scale * nd(rng);
    Form f(3, base.coeffs() + K * z);
    if (positive(f)) return f;
  }
  return base;
}

}  // namespace typeiia
