#ifndef TYPEIIA_TORUSGRID_HPP
#define TYPEIIA_TORUSGRID_HPP

/// The flow on T^6 for 3-forms depending on x^1 only,
///   phi = e^alpha dx^135 - e^beta dx^146 - dx^245 - dx^236 + gamma dx^136 + delta dx^145,
/// on a uniform periodic grid.  Fields are a = 2e^alpha, b = 2e^beta,
/// c = gamma - delta, d = gamma + delta.

#include <array>
#include <stdexcept>
#include <string>
#include <vector>

#include "typeiia/forms6.hpp"

namespace typeiia {

struct PositivityLoss : std::runtime_error {
  PositivityLoss(const std::string& what, double t, int node, double det)
      : std::runtime_error(what), t(t), node(node), det(det) {}
  double t;
  int node;
  /// ab - c^2 at the offending node.
  double det;
};

/// Spatial mean plus a zero-mean fluctuation; the split keeps decayed
/// fluctuations far below the mean's last digit.
struct GridField {
  double mean = 0;
  Eigen::VectorXd fluct;

  Eigen::VectorXd values() const { return (fluct.array() + mean).matrix(); }
};

struct FourierTerm {
  int mode = 1;
  double cos_coeff = 0;
  double sin_coeff = 0;
};

struct FieldInit {
  double mean = 0;
  std::vector<FourierTerm> terms;
};

enum FieldIndex { kA = 0, kB = 1, kC = 2, kD = 3 };

struct GridState {
  int n = 0;
  double t = 0;
  std::array<GridField, 4> f;

  double h() const { return 1.0 / n; }
  double x(int i) const { return i * h(); }
};

/// Samples the four fields at x_i = i/n.  Throws PositivityLoss if ab - c^2 <= 0 somewhere.
GridState grid_from_fourier(int n, const std::array<FieldInit, 4>& init);

/// Smallest ab - c^2 over the grid.
double min_det(const GridState& s);

/// Time derivatives of the four fields.
struct GridRate {
  std::array<Eigen::VectorXd, 4> v;
};

/// d/dt (a, b, c) = 4 (a, b, c)'' with the narrow centered second difference; d/dt d = 0.
GridRate rhs_reduced(const GridState& s);

struct GeneralIntermediates {
  /// |phi|^2 phi_hat at each node.
  std::vector<Form> flux;
  /// d(|phi|^2 phi_hat) = dx^1 ^ D(flux).
  std::vector<Form> d_flux;
  /// Lambda d(|phi|^2 phi_hat).
  std::vector<Form> lambda_d_flux;
  /// d Lambda d(|phi|^2 phi_hat).
  std::vector<Form> rhs;
};

/// 3-form of the ansatz at one node.
Form grid_phi(double a, double b, double c, double d);

/// Full flow rhs through the pointwise Hitchin construction, with d applied as
/// dx^1 ^ D where D is the centered first difference.
GridRate rhs_general(const GridState& s, GeneralIntermediates* out = nullptr);

/// |N|^2 from the closed formula in a, b, c and centered first differences.
Eigen::VectorXd nijenhuis_norm(const GridState& s);

/// |N|^2 at one node from the coordinate-frame Nijenhuis tensor of J(x),
/// with d/dx^1 J by centered differences.
double nijenhuis_norm_frame(const GridState& s, int node);

/// u = log |phi|^2 = log(2 sqrt(ab - c^2)) at each node.
Eigen::VectorXd grid_u(const GridState& s);

/// Complex amplitude of mode k of a fluctuation, (2/n) sum f_i e^{-2 pi i k x_i}, as (re, im).
std::array<double, 2> fourier_mode(const GridField& f, int k);

struct GridRow {
  double t = 0;
  double min_u = 0;
  double max_u = 0;
  double sup_N_sq = 0;
  /// Grid means of e^{p u}.
  std::vector<double> E;
  double min_det = 0;
  double min_norm_sq = 0;
  std::array<double, 4> mean{};
  double mode1_a = 0;
};

struct GridRunConfig {
  /// 0 selects h^2 / 16.
  double dt = 0;
  std::vector<double> p_values{1.0, -1.0};
  int record_every = 256;
  /// States are also returned at these times; the final state is always appended.
  std::vector<double> snapshot_times;
};

struct GridRun {
  GridState final_state;
  std::vector<GridRow> rows;
  std::vector<GridState> snapshots;
  double dt = 0;
};

GridRow grid_observe(const GridState& s, const std::vector<double>& p_values);

/// RK4 on the reduced evaluator up to t_max.  Throws PositivityLoss.
GridRun run_to_equilibrium(const GridState& s0, double t_max, const GridRunConfig& cfg = {});

}  // namespace typeiia

#endif  // TYPEIIA_TORUSGRID_HPP
