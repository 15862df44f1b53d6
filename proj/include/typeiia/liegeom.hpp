#ifndef TYPEIIA_LIEGEOM_HPP
#define TYPEIIA_LIEGEOM_HPP

/// Left-invariant geometry on 6-dimensional Lie groups.  Everything is
/// expressed in the invariant coframe e^1..e^6, so covariant derivatives of
/// invariant tensors carry only connection terms.
///
/// Brackets and differentials are linked by (de^k)(e_i, e_j) = -e^k([e_i, e_j]),
/// i.e. (de^k)_{ij} = -c^k_{ij} with [e_i, e_j] = c^k_{ij} e_k.

#include <array>
#include <stdexcept>
#include <string>
#include <vector>

#include "typeiia/forms6.hpp"

namespace typeiia {

struct InvalidModel : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct LieModel {
  std::string name;
  /// c(k, i, j) = c^k_{ij}.
  Tensor3 c;
  /// de^k for each generator.
  std::array<Form, kDim> de;
  Form omega;
  /// d on invariant k-forms, as a C(6,k+1) x C(6,k) matrix, k = 0..5.
  std::array<Eigen::MatrixXd, kDim> dmat;
};

/// Assembles a model from its differentials; checks d^2 = 0 and d(omega) = 0.
LieModel make_model(std::string name, const std::array<Form, kDim>& de, const Form& omega);

/// log((3 + sqrt 5) / 2).
double solv_lambda();

LieModel torus_model();
/// de^4 = e^{15}, de^6 = e^{13}.
LieModel nil_model();
/// de^1 = -l e^{15}, de^2 = l e^{25}, de^3 = -l e^{36}, de^4 = l e^{46}.
LieModel solv_model();
/// "torus", "nil" or "solv".
LieModel builtin_model(const std::string& name);

Form d_invariant(const Form& a, const LieModel& m);
Vec6 bracket(const Vec6& x, const Vec6& y, const LieModel& m);

/// Gamma(k, i, j) = Gamma^k_{ij} with nabla_{e_i} e_j = Gamma^k_{ij} e_k.
using Connection = Tensor3;

struct NijTensor {
  /// upper(m, j, k) = N^m_{jk}.
  Tensor3 upper;
  /// lower(i, j, k) = N_{ijk} = g_{im} N^m_{jk}.
  Tensor3 lower;
};

/// N(X,Y) = 1/4 ([JX,JY] - J[JX,Y] - J[X,JY] - [X,Y]).
NijTensor nijenhuis(const Mat6& J, const Mat6& g, const LieModel& m);
double nijenhuis_norm_sq(const NijTensor& N, const Mat6& g_inv);

Connection levi_civita(const Mat6& g, const LieModel& m);

/// T^k_{ij} = Gamma^k_{ij} - Gamma^k_{ji} - c^k_{ij}.
Tensor3 torsion(const Connection& conn, const LieModel& m);

struct Curvature {
  /// up(i, j, m, l) = R_{ij}^m_l, R(e_i, e_j) e_l = R_{ij}^m_l e_m.
  Tensor4 up;
  /// down(i, j, k, l) = R_{ij}^p_l g_{pk}.
  Tensor4 down;
  /// R_{ik} = g^{jl} R_{ijkl}.
  Mat6 ricci;
  double scalar = 0;
};

Curvature curvature(const Connection& conn, const Mat6& g, const LieModel& m);

/// Gamma^m_{ij} - g^{mk} N_{ijk}.
Connection projected_connection(const Connection& conn, const NijTensor& N, const Mat6& g_inv);

/// (D_k J)^a_b stored as (k, a, b).
Tensor3 nabla_endomorphism(const Connection& conn, const Mat6& A);
/// (D_i h)_{ab} of a (0,2) tensor, stored as (i, a, b).
Tensor3 nabla_bilinear(const Connection& conn, const Mat6& h);
/// (D_l T)_{ijk} of a (0,3) tensor, stored as (l, i, j, k).
Tensor4 nabla_trilinear(const Connection& conn, const Tensor3& T);

/// (D_i a)_{j1..jk} of an invariant form.
double nabla_form(const Connection& conn, const Form& a, int i, const int* idx);

/// (d* a)_{I} = -g^{ci} (D_i a)_{c I}.
Form codifferential(const Connection& conn, const Mat6& g_inv, const Form& a);
/// Same operator through the Hodge star: -* d * a.
Form codifferential_hodge(const Form& a, const Mat6& g, const Form& orientation, const LieModel& m);
/// Alternation of D a; equals d a for a torsion-free connection.
Form d_via_connection(const Connection& conn, const Form& a);

/// Torsion-box product of a vector-valued 2-form with a 2- or 3-form.
Form boxtimes(const Tensor3& T, const Form& mu);

/// (N+ phi)_{kj} = N^m_j^l phi_{mkl} - N^m_k^l phi_{mjl}.
Form ndagger(const NijTensor& N, const Mat6& g_inv, const Form& phi);

/// N2+_{ij} = N^{pk}_i N_{pkj},  N2-_{ij} = N^{kp}_i N_{pkj}.
Mat6 n_squared_plus(const NijTensor& N, const Mat6& g_inv);
Mat6 n_squared_minus(const NijTensor& N, const Mat6& g_inv);

/// J-anti-invariant part 1/2 (h_{ij} - h_{Ji,Jj}).
Mat6 anti_invariant_part(const Mat6& h, const Mat6& J);

/// g-norm of a (0,2) tensor.
double bilinear_norm(const Mat6& h, const Mat6& g_inv);

/// Basis (columns, in 3-form coefficient space) of closed primitive invariant 3-forms.
Eigen::MatrixXd closed_primitive_basis(const LieModel& m);

}  // namespace typeiia

#endif  // TYPEIIA_LIEGEOM_HPP
