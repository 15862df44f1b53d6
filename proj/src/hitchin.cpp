#include "typeiia/hitchin.hpp"

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <complex>

namespace typeiia {

Form omega_standard() { return Form::e({1, 2}) + Form::e({3, 4}) + Form::e({5, 6}); }

Form phi_canonical() { return Form::e({1, 3, 5}) - Form::e({1, 4, 6}) - Form::e({2, 4, 5}) - Form::e({2, 3, 6}); }

Form phi_hat_canonical() {
  return Form::e({1, 3, 6}) + Form::e({1, 4, 5}) + Form::e({2, 3, 5}) - Form::e({2, 4, 6});
}

Mat6 j_standard() {
  Mat6 J = Mat6::Zero();
  for (int k = 0; k < 3; ++k) {
    J(2 * k + 1, 2 * k) = 1;
    J(2 * k, 2 * k + 1) = -1;
  }
  return J;
}

Form symplectic_volume(const Form& omega) { return wedge(wedge(omega, omega), omega) * (1.0 / 6.0); }

Mat6 k_map(const Form& phi, const Form& orientation) {
  if (phi.degree() != 3) throw DegreeError("k_map needs a 3-form");
  const double eps = top_coeff(orientation);
  if (eps == 0) throw DegreeError("orientation form is zero");
  Mat6 K;
  for (int j = 0; j < kDim; ++j) {
    const Form five = wedge(interior(basis_vector<double>(j), phi), phi);
    for (int i = 0; i < kDim; ++i) {
      // e^i ^ e^{complement of i} = (-1)^i e^{123456}
      const double c = five.at_mask(kFullMask & ~(1u << i));
      K(i, j) = -((i & 1) ? -c : c) / eps;
    }
  }
  return K;
}

double lambda_invariant(const Form& phi, const Form& orientation) {
  const Mat6 K = k_map(phi, orientation);
  return (K * K).trace() / 6.0;
}

Mat6 almost_complex(const Form& phi, const Form& orientation) {
  const Mat6 K = k_map(phi, orientation);
  const double lambda = (K * K).trace() / 6.0;
  const double scale = phi.max_abs();
  if (!(lambda < -1e-12 * std::pow(scale, 4))) throw NotStable("3-form is not stable (lambda >= 0)");
  return K / std::sqrt(-lambda);
}

Form phi_hat_of(const Form& phi, const Form& orientation) { return j_act(phi, almost_complex(phi, orientation)); }

Mat6 tilde_metric(const Form& phi, const SymplecticMatrix<double>& omega) {
  const Mat6& wi = omega.inverse();
  std::array<Mat6, kDim> slices;
  for (int i = 0; i < kDim; ++i)
    for (int a = 0; a < kDim; ++a)
      for (int b = 0; b < kDim; ++b) {
        const int idx[3] = {i, a, b};
        slices[i](a, b) = phi.component(idx);
      }
  std::array<Mat6, kDim> raised;
  for (int j = 0; j < kDim; ++j) raised[j] = wi * slices[j] * wi.transpose();
  Mat6 gt;
  for (int i = 0; i < kDim; ++i)
    for (int j = 0; j < kDim; ++j) gt(i, j) = -slices[i].cwiseProduct(raised[j]).sum();
  return gt;
}

Eigen::MatrixXd primitive_basis(const Form& omega) {
  const int n3 = binom6(3);
  Eigen::MatrixXd C(binom6(5), n3);
  for (int r = 0; r < n3; ++r) {
    Form b(3);
    b.coeffs()[r] = 1;
    C.col(r) = wedge(omega, b).coeffs();
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(C, Eigen::ComputeFullV);
  const double cutoff = 1e-10 * std::max(1.0, svd.singularValues()(0));
  int rank = 0;
  for (int i = 0; i < svd.singularValues().size(); ++i) rank += svd.singularValues()(i) > cutoff;
  return svd.matrixV().rightCols(n3 - rank);
}

Mat6 random_symplectic(const Form& omega, std::mt19937_64& rng, double scale) {
  std::normal_distribution<double> nd;
  Mat6 S;
  for (int i = 0; i < kDim; ++i)
    for (int j = 0; j <= i; ++j) S(i, j) = S(j, i) = scale * nd(rng);
  const SymplecticMatrix<double> W(omega);
  const Mat6 X = W.inverse() * S;
  return X.exp();
}

double primitivity_defect(const Form& phi, const Form& omega) {
  const double scale = std::max(1.0, phi.max_abs() * omega.max_abs());
  return wedge(omega, phi).max_abs() / scale;
}

HitchinData build(const Form& phi, const Form& omega, const BuildTolerances& tol) {
  if (phi.degree() != 3 || omega.degree() != 2) throw DegreeError("build needs a 3-form and a 2-form");
  HitchinData d{phi,       omega,        SymplecticMatrix<double>(omega), Form(6), 0, Mat6::Zero(), Form(3), 0,
                Mat6::Zero(), Mat6::Zero(), Mat6::Zero(),                     0};
  if (primitivity_defect(phi, omega) > tol.primitive) throw NotPrimitive("3-form is not primitive");
  d.orientation = symplectic_volume(omega);
  const Mat6 K = k_map(phi, d.orientation);
  d.lambda = (K * K).trace() / 6.0;
  const double scale = phi.max_abs();
  if (!(d.lambda < -tol.stable * std::pow(scale, 4))) throw NotStable("3-form is not stable (lambda >= 0)");
  const double root = std::sqrt(-d.lambda);
  d.J = K / root;
  d.norm_sq = 2.0 * root;
  d.u = std::log(d.norm_sq);
  d.g_tilde = tilde_metric(phi, d.symp);
  d.g = d.g_tilde / d.norm_sq;
  d.g = (0.5 * (d.g + d.g.transpose())).eval();
  Eigen::SelfAdjointEigenSolver<Mat6> es(d.g, Eigen::EigenvaluesOnly);
  if (!(es.eigenvalues().minCoeff() > tol.positive)) throw NotPositive("induced metric is not positive definite");
  d.g_inv = d.g.inverse();
  d.phi_hat = j_act(phi, d.J);
  return d;
}

NormalFrame normal_form(const HitchinData& data) {
  const Mat6& g = data.g;
  const Mat6& J = data.J;
  std::array<Vec6, kDim> v;
  int n = 0;
  for (int i = 0; i < kDim && n < kDim; ++i) {
    Vec6 w = basis_vector<double>(i);
    for (int p = 0; p < n; ++p) w -= v[p].dot(g * w) * v[p];
    for (int p = 0; p < n; ++p) w -= v[p].dot(g * w) * v[p];
    const double len = std::sqrt(w.dot(g * w));
    if (len < 1e-6) continue;
    w /= len;
    v[n++] = w;
    v[n++] = J * w;
  }
  if (n != kDim) throw NotPositive("could not build a J-adapted orthonormal basis");
  auto value_135 = [&](const Form& f, const Vec6& a) {
    return interior(v[4], interior(v[2], interior(a, f))).coeffs()[0];
  };
  const std::complex<double> c(value_135(data.phi, v[0]), value_135(data.phi_hat, v[0]));
  const double theta = std::arg(c);
  const Vec6 first = std::cos(theta) * v[0] - std::sin(theta) * v[1];
  v[0] = first;
  v[1] = J * first;
  NormalFrame out;
  for (int k = 0; k < kDim; ++k) out.basis.col(k) = v[k];
  out.M = std::abs(c);
  return out;
}

Form variation_hat(const HitchinData& data, const Form& dphi) {
  const double vol = top_coeff(wedge(data.phi, data.phi_hat));
  const double a = top_coeff(wedge(dphi, data.phi)) / vol;
  const double b = top_coeff(wedge(dphi, data.phi_hat)) / vol;
  return -j_act(dphi, data.J) + (2.0 * a) * data.phi + (2.0 * b) * data.phi_hat;
}

Form linearized_flux(const HitchinData& data, const Form& dphi) {
  const double with_hat = inner(dphi, data.phi_hat, data.g);
  const double with_phi = inner(dphi, data.phi, data.g);
  return (-data.norm_sq) * j_act(dphi, data.J) - (2.0 * with_hat) * data.phi + (4.0 * with_phi) * data.phi_hat;
}

SymbolReport symbol_spectrum(const HitchinData& data, const Vec6& xi) {
  if (xi.norm() == 0) throw ZeroCovector("symbol needs a nonzero covector");
  const Form x = one_form(xi);
  const int n3 = binom6(3);
  // constraints xi ^ dphi = 0 (15 rows) and Lambda dphi = 0 (6 rows)
  Eigen::MatrixXd C(binom6(4) + binom6(1), n3);
  for (int r = 0; r < n3; ++r) {
    Form b(3);
    b.coeffs()[r] = 1;
    C.col(r) << wedge(x, b).coeffs(), lambda_contract(b, data.symp).coeffs();
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(C, Eigen::ComputeFullV);
  const double cutoff = 1e-9 * svd.singularValues()(0);
  int rank = 0;
  for (int i = 0; i < svd.singularValues().size(); ++i) rank += svd.singularValues()(i) > cutoff;
  const Eigen::MatrixXd W = svd.matrixV().rightCols(n3 - rank);
  SymbolReport rep;
  rep.constrained_dim = static_cast<int>(W.cols());
  if (W.cols() != 5) return rep;
  Eigen::Matrix<double, 5, 5> A;
  for (int k = 0; k < 5; ++k) {
    const Form w(3, W.col(k));
    const Form img = wedge(x, lambda_contract(wedge(x, linearized_flux(data, w)), data.symp));
    const Eigen::VectorXd coords = W.transpose() * img.coeffs();
    rep.leakage = std::max(rep.leakage, (img.coeffs() - W * coords).cwiseAbs().maxCoeff());
    A.col(k) = coords;
  }
  const double scale = data.norm_sq * xi.dot(data.g_inv * xi);
  Eigen::EigenSolver<Eigen::Matrix<double, 5, 5>> es(A / scale, false);
  std::array<double, 5> ev{};
  for (int k = 0; k < 5; ++k) {
    ev[k] = es.eigenvalues()(k).real();
    rep.max_imag = std::max(rep.max_imag, std::abs(es.eigenvalues()(k).imag()));
  }
  std::sort(ev.begin(), ev.end(), std::greater<>());
  rep.eigenvalues = ev;
  rep.leakage /= std::max(1.0, scale);
  return rep;
}

}  // namespace typeiia
