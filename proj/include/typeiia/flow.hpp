#ifndef TYPEIIA_FLOW_HPP
#define TYPEIIA_FLOW_HPP

/// The Type IIA flow d/dt phi = d Lambda d(|phi|^2 phi_hat) on invariant
/// 3-forms of a Lie model, integrated with classical RK4.

#include <memory>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "typeiia/hitchin.hpp"
#include "typeiia/liegeom.hpp"

namespace typeiia {

struct StepUnderflow : std::runtime_error {
  StepUnderflow(const std::string& what, double t_last, double t_upper)
      : std::runtime_error(what), t_last(t_last), t_upper(t_upper) {}
  double t_last;
  double t_upper;
};

struct UnknownOracle : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// The rhs left the ansatz subspace.
struct AnsatzLeak : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Affine family phi(p) = offset + sum_i p_i directions_i of closed primitive 3-forms.
struct Ansatz {
  std::string name;
  std::vector<std::string> param_names;
  Form offset{3};
  std::vector<Form> directions;
  Eigen::VectorXd defaults;

  int size() const { return static_cast<int>(directions.size()); }
  Form embed(const Eigen::VectorXd& p) const;
  /// Coordinates of a velocity; residual is |v - D c| / max|v| (0 for v = 0).
  Eigen::VectorXd project(const Form& v, double* residual) const;
};

/// nil: (a, b); solv: (alpha, beta, gamma, delta); torus: (a, b, c, d) with
/// a = 2e^alpha, b = 2e^beta, c = gamma - delta, d = gamma + delta.
std::optional<Ansatz> builtin_ansatz(const std::string& model_name);

/// All 20 coefficients of a 3-form as parameters; used for file-defined models.
Ansatz full_ansatz();

struct FlowState {
  FlowState(std::shared_ptr<const LieModel> model, Eigen::VectorXd params, Form phi, double t = 0);

  double t;
  Eigen::VectorXd params;
  Form phi;
  HitchinData cache;
  std::shared_ptr<const LieModel> model;
};

/// d Lambda d(|phi|^2 phi_hat).
Form rhs_primary(const HitchinData& point, const LieModel& m);
Form rhs_primary(const FlowState& s);

/// -d d*(|phi|^2 phi) + 2 d(|phi|^2 N+ phi).
Form rhs_laplacian(const HitchinData& point, const LieModel& m);
Form rhs_laplacian(const FlowState& s);

struct StepControl {
  /// Relative closedness and primitivity gates.
  double closed_tol = 1e-9;
  double primitive_tol = 1e-10;
  /// Step-doubling accuracy gate on the parameter vector; 0 disables it.
  double accuracy_tol = 1e-10;
  /// Ansatz-closure gate.
  double ansatz_tol = 1e-10;
  double dt_floor = 1e-12;
};

struct StepResult {
  FlowState state;
  double dt_used;
  int halvings;
};

struct ObservablesRow {
  double t = 0;
  Eigen::VectorXd params;
  double u = 0;
  double norm_sq = 0;
  double norm_N_sq = 0;
  /// e^{p u} per configured p; the invariant volume is normalised to 1.
  std::vector<double> E;
  /// Smallest eigenvalue of g.
  double positivity_margin = 0;
  /// -lambda = |phi|^4 / 4.
  double stability_margin = 0;
  double closed_residual = 0;
  double primitive_residual = 0;
  /// |R^{-J}|^2 in the metric g.
  double anti_ricci_sq = 0;
  Mat6 J;
};

struct BlowupRecord {
  bool detected = false;
  double t_last = 0;
  double t_upper = 0;
  std::string reason;
};

struct RunConfig {
  double dt = 1e-3;
  double t_max = 1;
  std::vector<double> p_values{1.0, -1.0};
  /// Keep every k-th accepted step (the last one is always kept).
  int record_every = 1;
};

struct FlowRun {
  std::string model;
  std::vector<double> p_values;
  std::vector<ObservablesRow> rows;
  BlowupRecord blowup;
  int accepted = 0;
  int rejected = 0;
};

class FlowEngine {
 public:
  FlowEngine(LieModel model, Ansatz ansatz, StepControl control = {});

  const LieModel& model() const { return *model_; }
  const Ansatz& ansatz() const { return ansatz_; }
  const StepControl& control() const { return control_; }

  FlowState state(const Eigen::VectorXd& params, double t = 0) const;
  /// Parameter velocity; throws AnsatzLeak.
  Eigen::VectorXd velocity(const FlowState& s) const;

  /// One RK4 step of size dt, halved until every gate passes.  Throws
  /// StepUnderflow once dt drops below the floor.
  StepResult step(const FlowState& s, double dt) const;
  /// Plain RK4 step with no gates; dt may be negative.
  FlowState rk4(const FlowState& s, double dt) const;

  ObservablesRow observe(const FlowState& s, const std::vector<double>& p_values) const;

  /// Runs to cfg.t_max or to blow-up; halved steps are not regrown.
  FlowRun run(const FlowState& s0, const RunConfig& cfg) const;

 private:
  std::shared_ptr<const LieModel> model_;
  Ansatz ansatz_;
  StepControl control_;
};

struct MonotonicityReport {
  bool u_nondecreasing = true;
  bool norm_N_nonincreasing = true;
  bool e_minus_u_convex = true;
  /// Per configured p: nondecreasing for 0 < p <= 1, nonincreasing for p < 0.
  bool dilaton_monotone = true;
  bool min_norm_bound = true;
  /// Centered du/dt against e^u |N|^2.
  bool du_dt_matches = true;
  double du_dt_worst = 0;
  /// Centered d|N|^2/dt against -2 e^u |R^{-J}|^2.
  bool dN_dt_matches = true;
  double dN_dt_worst = 0;

  bool pass() const {
    return u_nondecreasing && norm_N_nonincreasing && e_minus_u_convex && dilaton_monotone && min_norm_bound &&
           du_dt_matches && dN_dt_matches;
  }
};

/// slack absorbs roundoff in the differences.  The derivative checks assume
/// consecutive rows are single integrator steps (record_every = 1).
MonotonicityReport check_monotonicity(const FlowRun& run, double slack = 1e-12);

struct MetricFlowResidual {
  /// |(g(t+h) - g(t-h))/2h + 2 e^u R^{-J}| relative to max(|dg/dt|, |R^{-J}|, 1).
  double g = 0;
  /// Same for g_tilde against e^{2u}(-2 Ric(g_tilde) - 4 N2- + |N|^2_{g_tilde} g_tilde).
  double g_tilde = 0;
};

MetricFlowResidual metric_flow_check(const FlowEngine& engine, const FlowState& s, double h);

/// Closed-form solution of a built-in model.
struct Oracle {
  std::string model;
  Eigen::VectorXd p0;
  /// Infinity when the flow is immortal.
  double blowup_time = 0;
  Eigen::VectorXd params(double t) const;
  double norm_N_sq(double t) const;
};

/// Throws UnknownOracle for models without a closed form.
Oracle make_oracle(const std::string& model, const Eigen::VectorXd& p0);

struct OracleReport {
  /// max over rows with t <= horizon of |p - p_exact| / max(|p_exact|, 1).
  double param_deviation = 0;
  /// Same for |N|^2.
  double norm_N_deviation = 0;
  double horizon = 0;
  double predicted_T = 0;
  bool blowup_expected = false;
  bool bracket_contains_T = false;
  double bracket_width_rel = 0;
};

/// horizon_fraction applies to the predicted blow-up time when finite.
OracleReport oracle_compare(const FlowRun& run, const Oracle& oracle, double horizon_fraction = 0.9);

/// A random closed primitive positive invariant 3-form near the model's
/// default point: base + scale * K z with K a basis of closed primitive forms.
Form random_point(const LieModel& m, std::mt19937_64& rng, double scale = 0.3);

}  // namespace typeiia

#endif  // TYPEIIA_FLOW_HPP
