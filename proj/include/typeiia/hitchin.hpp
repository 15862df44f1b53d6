#ifndef TYPEIIA_HITCHIN_HPP
#define TYPEIIA_HITCHIN_HPP

/// Pointwise stable 3-form construction relative to a symplectic form:
/// (omega, phi) -> lambda, J, phi_hat, |phi|^2, g, g_tilde.

#include <array>
#include <random>
#include <stdexcept>

#include "typeiia/forms6.hpp"

namespace typeiia {

struct NotPrimitive : std::domain_error {
  using std::domain_error::domain_error;
};
struct NotStable : std::domain_error {
  using std::domain_error::domain_error;
};
struct NotPositive : std::domain_error {
  using std::domain_error::domain_error;
};
struct ZeroCovector : std::domain_error {
  using std::domain_error::domain_error;
};

/// e^{12} + e^{34} + e^{56}.
Form omega_standard();
/// Re (e^1 + i e^2)(e^3 + i e^4)(e^5 + i e^6) = e^{135} - e^{146} - e^{245} - e^{236}.
Form phi_canonical();
/// Im of the same product: e^{136} + e^{145} + e^{235} - e^{246}.
Form phi_hat_canonical();
/// J e_{2k-1} = e_{2k}, J e_{2k} = -e_{2k-1}.
Mat6 j_standard();

/// omega^3 / 3!.
Form symplectic_volume(const Form& omega);

/// K(v) = -i_v phi ^ phi, read as a vector times the orientation.
Mat6 k_map(const Form& phi, const Form& orientation);

/// tr(K^2) / 6 in units of orientation^2.
double lambda_invariant(const Form& phi, const Form& orientation);

/// J = K / sqrt(-lambda); needs no symplectic form.
Mat6 almost_complex(const Form& phi, const Form& orientation);

/// J phi computed from phi and an orientation alone.
Form phi_hat_of(const Form& phi, const Form& orientation);

/// g_tilde_{ij} = -phi_{iab} phi_{jcd} w^{ac} w^{bd}.
Mat6 tilde_metric(const Form& phi, const SymplecticMatrix<double>& omega);

struct HitchinData {
  Form phi;
  Form omega;
  SymplecticMatrix<double> symp;
  Form orientation;
  double lambda = 0;
  Mat6 J;
  Form phi_hat;
  double norm_sq = 0;
  Mat6 g;
  Mat6 g_inv;
  Mat6 g_tilde;
  double u = 0;
};

struct BuildTolerances {
  double primitive = 1e-10;
  double stable = 1e-12;
  double positive = 1e-10;
};

/// Builds the derived data of a primitive positive 3-form, in the order
/// lambda -> |phi|^2 -> g_tilde -> g.  Throws NotPrimitive, NotStable, NotPositive.
HitchinData build(const Form& phi, const Form& omega, const BuildTolerances& tol = {});

/// Columns span the primitive 3-forms {omega ^ a = 0}, in coefficient space.
Eigen::MatrixXd primitive_basis(const Form& omega);

/// exp(W^{-1} S) for a random symmetric S of the given size, where W is the
/// matrix of omega; pulling back by it preserves omega.
Mat6 random_symplectic(const Form& omega, std::mt19937_64& rng, double scale = 0.3);

/// Largest primitivity defect max|omega ^ phi| relative to the data scale.
double primitivity_defect(const Form& phi, const Form& omega);

struct NormalFrame {
  /// Columns are the new basis vectors.
  Mat6 basis;
  double M = 0;
};

/// g-orthonormal basis in which omega = e^{12}+e^{34}+e^{56} and phi = M phi_can.
NormalFrame normal_form(const HitchinData& data);

/// First-order change of phi_hat under phi -> phi + dphi.
Form variation_hat(const HitchinData& data, const Form& dphi);

/// delta(|phi|^2 phi_hat) = -|phi|^2 J(dphi) - 2 (dphi, phi_hat) phi + 4 (dphi, phi) phi_hat.
Form linearized_flux(const HitchinData& data, const Form& dphi);

struct SymbolReport {
  /// Sorted descending, normalised by |phi|^2 |xi|_g^2.
  std::array<double, 5> eigenvalues{};
  double max_imag = 0;
  /// Component of the image leaving the constrained subspace.
  double leakage = 0;
  int constrained_dim = 0;
};

/// Spectrum of dphi -> xi ^ Lambda(xi ^ delta(|phi|^2 phi_hat)) on
/// W = {xi ^ dphi = 0, Lambda dphi = 0}.
SymbolReport symbol_spectrum(const HitchinData& data, const Vec6& xi);

}  // namespace typeiia

#endif  // TYPEIIA_HITCHIN_HPP
