#include <gtest/gtest.h>

#include "test_support.hpp"
#include "typeiia/flow.hpp"

using namespace typeiia;
using namespace typeiia::test;

namespace {

FlowEngine engine_for(const std::string& name) { return FlowEngine(builtin_model(name), *builtin_ansatz(name)); }

double rel_diff(const Form& a, const Form& b) { return (a - b).max_abs() / std::max({a.max_abs(), b.max_abs(), 1.0}); }

double mabs(const Mat6& m) { return m.cwiseAbs().maxCoeff(); }

const double kL = solv_lambda();

TEST(RhsPrimary, NilIsEightE135) {
  const FlowEngine e = engine_for("nil");
  for (double a : {0.0, 1.0, 5.0})
    for (double b : {-0.5, 0.0, 0.3}) {
      const FlowState s = e.state(Eigen::Vector2d(a, b));
      EXPECT_LT(max_diff(rhs_primary(s), 8.0 * Form::e({1, 3, 5})), 1e-12) << a << "," << b;
      EXPECT_LT(max_diff(rhs_laplacian(s), 8.0 * Form::e({1, 3, 5})), 1e-11) << a << "," << b;
      const Eigen::VectorXd v = e.velocity(s);
      EXPECT_NEAR(v[0], 8.0, 1e-12);
      EXPECT_NEAR(v[1], 0.0, 1e-12);
    }
}

TEST(RhsPrimary, SolvClosedForm) {
  const FlowEngine e = engine_for("solv");
  std::mt19937_64 rng(71);
  std::uniform_real_distribution<double> u(0.3, 1.5);
  for (int trial = 0; trial < 20; ++trial) {
    const double al = u(rng), be = u(rng), ga = u(rng), de = u(rng);
    const FlowState s = e.state(Eigen::Vector4d(al, be, ga, de));
    const Form want = 16 * kL * kL *
                      (al * be * ga * (Form::e({1, 3, 5}) + Form::e({1, 3, 6})) +
                       al * be * de * (Form::e({1, 4, 5}) - Form::e({1, 4, 6})) +
                       al * ga * de * (Form::e({2, 3, 5}) - Form::e({2, 3, 6})) -
                       be * ga * de * (Form::e({2, 4, 5}) + Form::e({2, 4, 6})));
    EXPECT_LT(rel_diff(rhs_primary(s), want), 1e-12);
  }
}

TEST(RhsPrimary, TorusConstantDataIsStationary) {
  const LieModel m = torus_model();
  std::mt19937_64 rng(72);
  for (int trial = 0; trial < 10; ++trial) {
    const HitchinData d = build(random_point(m, rng), m.omega);
    EXPECT_EQ(rhs_primary(d, m).max_abs(), 0.0);
    EXPECT_EQ(rhs_laplacian(d, m).max_abs(), 0.0);
  }
}

TEST(RhsEvaluators, AgreeOnRandomStates) {
  std::mt19937_64 rng(73);
  for (const char* name : {"torus", "nil", "solv"}) {
    const LieModel m = builtin_model(name);
    for (int trial = 0; trial < 100; ++trial) {
      const HitchinData d = build(random_point(m, rng), m.omega);
      const Form a = rhs_primary(d, m), b = rhs_laplacian(d, m);
      EXPECT_LT(rel_diff(a, b), 1e-9) << name;
      // Output is closed and primitive.
      EXPECT_LT(d_invariant(a, m).max_abs(), 1e-10 * std::max(1.0, a.max_abs())) << name;
      EXPECT_LT(primitivity_defect(a, m.omega), 1e-10 * std::max(1.0, a.max_abs())) << name;
    }
  }
}

TEST(RandomPoint, ClosedPrimitivePositive) {
  std::mt19937_64 rng(74);
  for (const char* name : {"torus", "nil", "solv"}) {
    const LieModel m = builtin_model(name);
    for (int trial = 0; trial < 20; ++trial) {
      const Form phi = random_point(m, rng);
      EXPECT_LT(d_invariant(phi, m).max_abs(), 1e-12);
      EXPECT_NO_THROW(build(phi, m.omega));
    }
  }
}

TEST(Ansatz, EmbedProjectRoundTripAndLeak) {
  for (const char* name : {"torus", "nil", "solv"}) {
    const Ansatz a = *builtin_ansatz(name);
    Eigen::VectorXd p = a.defaults;
    p.array() += 0.1;
    double res = 1;
    const Eigen::VectorXd back = a.project(a.embed(p) - a.offset, &res);
    EXPECT_LT((back - p).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_LT(res, 1e-14);
  }
  EXPECT_FALSE(builtin_ansatz("heisenberg").has_value());
  EXPECT_EQ(full_ansatz().size(), 20);
  EXPECT_EQ(full_ansatz().param_names[0], "phi123");

  // A nil family missing the e^135 direction cannot follow the flow.
  Ansatz cut = *builtin_ansatz("nil");
  cut.directions.erase(cut.directions.begin());
  cut.defaults = Eigen::VectorXd::Zero(1);
  const FlowEngine e(nil_model(), cut);
  EXPECT_THROW(e.velocity(e.state(cut.defaults)), AnsatzLeak);
}

TEST(Integrator, NilExactSolution) {
  const FlowEngine e = engine_for("nil");
  RunConfig cfg;
  cfg.dt = 1e-3;
  cfg.t_max = 1;
  const FlowRun run = e.run(e.state(Eigen::Vector2d(0, 0)), cfg);
  ASSERT_FALSE(run.blowup.detected);
  EXPECT_EQ(run.accepted, 1000);
  EXPECT_NEAR(run.rows.back().t, 1.0, 1e-15);
  EXPECT_NEAR(run.rows.back().params[0], 8.0, 1e-8);
  EXPECT_NEAR(run.rows.back().params[1], 0.0, 1e-15);
  for (const auto& r : run.rows) EXPECT_NEAR(r.norm_N_sq, std::pow(1 + 8 * r.t, -1.5), 1e-10);
}

TEST(Integrator, NilOracleOverLongRun) {
  const FlowEngine e = engine_for("nil");
  RunConfig cfg;
  cfg.dt = 1e-2;
  cfg.t_max = 10;
  const Eigen::Vector2d p0(0.5, 0.3);
  const FlowRun run = e.run(e.state(p0), cfg);
  const OracleReport rep = oracle_compare(run, make_oracle("nil", p0));
  EXPECT_FALSE(rep.blowup_expected);
  EXPECT_LT(rep.param_deviation, 1e-8);
  EXPECT_LT(rep.norm_N_deviation, 1e-8);
  EXPECT_TRUE(check_monotonicity(run).pass());
}

// Plain RK4 endpoint error on solv; nil is useless here since its velocity is
// constant and RK4 integrates it exactly.
double solv_endpoint_error(double dt, double t_end) {
  const FlowEngine e = engine_for("solv");
  const Eigen::Vector4d p0(1, 1, 0.5, 0.4);
  FlowState s = e.state(p0);
  const int n = static_cast<int>(std::lround(t_end / dt));
  for (int i = 0; i < n; ++i) s = e.rk4(s, dt);
  return (s.params - make_oracle("solv", p0).params(t_end)).cwiseAbs().maxCoeff();
}

TEST(Integrator, FourthOrderConvergence) {
  const double t_end = 0.06;
  const double e1 = solv_endpoint_error(0.006, t_end), e2 = solv_endpoint_error(0.003, t_end),
               e3 = solv_endpoint_error(0.0015, t_end);
  EXPECT_GT(e2, 1e-12);
  EXPECT_GE(e1 / e2, 12.0);
  EXPECT_LE(e1 / e2, 20.0);
  EXPECT_GE(e2 / e3, 12.0);
  EXPECT_LE(e2 / e3, 20.0);
}

TEST(Integrator, StationaryStateUnchanged) {
  const FlowEngine e = engine_for("torus");
  const FlowState s = e.state(Eigen::Vector4d(2, 3, 0.5, 0.1));
  const StepResult r = e.step(s, 0.1);
  EXPECT_EQ(r.halvings, 0);
  EXPECT_EQ((r.state.params - s.params).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_THROW(e.step(s, 0.0), std::invalid_argument);
  EXPECT_THROW(e.step(s, -1.0), std::invalid_argument);
}

TEST(Integrator, StepUnderflowPastTheSingularity) {
  const FlowEngine e = engine_for("solv");
  const Eigen::VectorXd p0 = Eigen::Vector4d::Constant(std::sqrt(0.5));
  const double T = make_oracle("solv", p0).blowup_time;
  EXPECT_NEAR(T, 1 / (16 * kL * kL), 1e-15);
  // Start just short of T: no step of any size in the ladder survives the gates.
  const FlowState s = e.state(make_oracle("solv", p0).params(T * (1 - 1e-13)), T * (1 - 1e-13));
  EXPECT_THROW(e.step(s, 1e-3), StepUnderflow);
}

TEST(SolvFlow, NoncriticalBlowupBracketAndOracle) {
  const FlowEngine e = engine_for("solv");
  const Eigen::Vector4d p0(1, 1, 0.5, 0.4);
  const Oracle o = make_oracle("solv", p0);
  const double A = 0.4, B = 0.5;
  const double T = (std::log(A) - std::log(B)) / (32 * kL * kL * (A - B));
  EXPECT_NEAR(o.blowup_time, T, 1e-15);
  RunConfig cfg;
  cfg.dt = 1e-4;
  cfg.t_max = 2 * T;
  const FlowRun run = e.run(e.state(p0), cfg);
  ASSERT_TRUE(run.blowup.detected);
  const OracleReport rep = oracle_compare(run, o, 0.9);
  EXPECT_TRUE(rep.bracket_contains_T) << run.blowup.t_last << " " << run.blowup.t_upper << " " << T;
  EXPECT_LT(rep.bracket_width_rel, 0.01);
  EXPECT_LT(rep.param_deviation, 1e-6);
  EXPECT_LT(rep.norm_N_deviation, 1e-6);
  for (const auto& r : run.rows) EXPECT_GE(r.norm_N_sq, 4 * kL * kL - 1e-8);
  EXPECT_TRUE(check_monotonicity(run).pass());
}

TEST(SolvFlow, CriticalSelfExpander) {
  const FlowEngine e = engine_for("solv");
  const Eigen::VectorXd p0 = Eigen::Vector4d::Constant(std::sqrt(0.5));
  const double T = 1 / (16 * kL * kL);
  RunConfig cfg;
  cfg.dt = 1e-4;
  cfg.t_max = 0.9 * T;
  const FlowState s0 = e.state(p0);
  const FlowRun run = e.run(s0, cfg);
  ASSERT_FALSE(run.blowup.detected);
  for (const auto& r : run.rows) {
    EXPECT_LT(mabs(r.J - run.rows.front().J), 1e-8);
    EXPECT_NEAR(r.norm_N_sq, 4 * kL * kL, 1e-8);
    EXPECT_LT(r.anti_ricci_sq, 1e-16);
  }
  // g stays put while g_tilde scales by (1 - 32 l^2 S t)^{-1}, S = 1/2.
  const FlowState s1 = e.state(run.rows.back().params, run.rows.back().t);
  EXPECT_LT(mabs(s1.cache.g - s0.cache.g), 1e-8);
  const double t = run.rows.back().t;
  EXPECT_LT(mabs(s1.cache.g_tilde - s0.cache.g_tilde / (1 - 16 * kL * kL * t)), 1e-7 * mabs(s1.cache.g_tilde));
  const MetricFlowResidual mr = metric_flow_check(e, e.state(make_oracle("solv", p0).params(0.5 * T), 0.5 * T), 1e-5);
  EXPECT_LT(mr.g, 1e-6);
  EXPECT_LT(mr.g_tilde, 1e-6);
}

TEST(MetricFlow, NilAndTorus) {
  const FlowEngine nil = engine_for("nil");
  const FlowState s = nil.state(make_oracle("nil", Eigen::Vector2d(0, 0.3)).params(0.5), 0.5);
  const MetricFlowResidual r = metric_flow_check(nil, s, 1e-4);
  EXPECT_LT(r.g, 1e-6);
  EXPECT_LT(r.g_tilde, 1e-6);
  // The flow of g is not trivial here, so the check has teeth.
  const FlowState plus = nil.rk4(s, 1e-3);
  EXPECT_GT(mabs(plus.cache.g - s.cache.g), 1e-5);

  const FlowEngine torus = engine_for("torus");
  const MetricFlowResidual t = metric_flow_check(torus, torus.state(Eigen::Vector4d(2, 3, 0.5, 0.1)), 1e-3);
  EXPECT_EQ(t.g, 0.0);
  EXPECT_EQ(t.g_tilde, 0.0);
}

TEST(Observables, DiscreteRatesMatchPredictions) {
  const FlowEngine e = engine_for("nil");
  RunConfig cfg;
  cfg.dt = 1e-3;
  cfg.t_max = 1;
  const FlowRun run = e.run(e.state(Eigen::Vector2d(0, 0.3)), cfg);
  const MonotonicityReport m = check_monotonicity(run);
  EXPECT_TRUE(m.pass());
  EXPECT_TRUE(m.du_dt_matches);
  EXPECT_TRUE(m.dN_dt_matches);
  // Independent Richardson-extrapolated difference of u against e^u |N|^2.  The
  // O(h^4) remainder is about 1e-8 near t = 0, where u varies on a 1/8 time scale.
  const auto& R = run.rows;
  for (std::size_t i = 2; i + 2 < R.size(); i += 97) {
    const double h = R[i + 1].t - R[i].t;
    const double d1 = (R[i + 1].u - R[i - 1].u) / (2 * h), d2 = (R[i + 2].u - R[i - 2].u) / (4 * h);
    const double rate = std::exp(R[i].u) * R[i].norm_N_sq;
    EXPECT_NEAR((4 * d1 - d2) / 3, rate, 1e-7 * rate) << R[i].t;
  }
  // Observable values themselves.
  const auto& r0 = run.rows.front();
  EXPECT_NEAR(r0.stability_margin, r0.norm_sq * r0.norm_sq / 4, 1e-12 * r0.norm_sq * r0.norm_sq);
  EXPECT_EQ(r0.E.size(), 2u);
  EXPECT_NEAR(r0.E[0], std::exp(r0.u), 1e-15);
  EXPECT_NEAR(r0.E[1], std::exp(-r0.u), 1e-15);
  EXPECT_GT(r0.positivity_margin, 0);
  EXPECT_LT(r0.closed_residual, 1e-15);
}

TEST(Observables, MonotonicityCatchesABrokenSeries) {
  const FlowEngine e = engine_for("nil");
  RunConfig cfg;
  cfg.dt = 1e-2;
  cfg.t_max = 0.2;
  FlowRun run = e.run(e.state(Eigen::Vector2d(0, 0)), cfg);
  ASSERT_TRUE(check_monotonicity(run).pass());
  // Each step moves u by about 0.04 here, so the dent must be larger than that.
  run.rows[5].u -= 1.0;
  run.rows[5].norm_N_sq += 1.0;
  const MonotonicityReport m = check_monotonicity(run);
  EXPECT_FALSE(m.u_nondecreasing);
  EXPECT_FALSE(m.norm_N_nonincreasing);
  EXPECT_FALSE(m.pass());
}

TEST(Oracle, RegistryAndClosedForms) {
  EXPECT_THROW(make_oracle("full", Eigen::VectorXd::Zero(20)), UnknownOracle);
  EXPECT_THROW(make_oracle("nil", Eigen::VectorXd::Zero(3)), UnknownOracle);
  const Oracle nil = make_oracle("nil", Eigen::Vector2d(1, 0.3));
  EXPECT_TRUE(std::isinf(nil.blowup_time));
  EXPECT_NEAR(nil.norm_N_sq(0.25), std::pow(1 + 1 + 2 - 0.09, -1.5), 1e-15);
  // The solv closed form solves the parameter ODE read off the rhs.
  const Eigen::Vector4d p0(1, 1, 0.5, 0.4);
  const Oracle o = make_oracle("solv", p0);
  const double t = 0.03, h = 1e-6;
  const Eigen::VectorXd p = o.params(t), dp = (o.params(t + h) - o.params(t - h)) / (2 * h);
  const FlowEngine e = engine_for("solv");
  const Eigen::VectorXd v = e.velocity(e.state(p, t));
  EXPECT_LT((dp - v).cwiseAbs().maxCoeff(), 1e-6 * v.cwiseAbs().maxCoeff());
  // |N|^2 closed form against the tensor computation at the same point.
  const HitchinData d = e.state(p, t).cache;
  EXPECT_NEAR(o.norm_N_sq(t), nijenhuis_norm_sq(nijenhuis(d.J, d.g, e.model()), d.g_inv), 1e-10);
}

}  // namespace
