#include "typeiia/liegeom.hpp"

#include <cmath>

namespace typeiia {

namespace {

Form d_monomial(unsigned mask, const std::array<Form, kDim>& de) {
  const int k = std::popcount(mask);
  Form out(k + 1);
  int s = 0;
  for (int i = 0; i < kDim; ++i) {
    if (!(mask & (1u << i))) continue;
    Form left = Form::constant(1.0);
    for (int p = 0; p < i; ++p)
      if (mask & (1u << p)) left = wedge(left, one_form(basis_vector<double>(p)));
    Form right = Form::constant(1.0);
    for (int p = i + 1; p < kDim; ++p)
      if (mask & (1u << p)) right = wedge(right, one_form(basis_vector<double>(p)));
    const Form term = wedge(wedge(left, de[i]), right);
    out += (s & 1) ? -term : term;
    ++s;
  }
  return out;
}

}  // namespace

LieModel make_model(std::string name, const std::array<Form, kDim>& de, const Form& omega) {
  LieModel m;
  m.name = std::move(name);
  m.de = de;
  m.omega = omega;
  if (omega.degree() != 2) throw InvalidModel("symplectic form must be a 2-form");
  for (int k = 0; k < kDim; ++k) {
    if (de[k].degree() != 2) throw InvalidModel("differential of a generator must be a 2-form");
    for (int i = 0; i < kDim; ++i)
      for (int j = 0; j < kDim; ++j) {
        const int idx[2] = {i, j};
        m.c(k, i, j) = -de[k].component(idx);
      }
  }
  m.dmat[0] = Eigen::MatrixXd::Zero(binom6(1), 1);
  for (int k = 1; k < kDim; ++k) {
    m.dmat[k] = Eigen::MatrixXd(binom6(k + 1), binom6(k));
    for (int r = 0; r < binom6(k); ++r) m.dmat[k].col(r) = d_monomial(mask_at(k, r), de).coeffs();
  }
  double scale = 1.0;
  for (const auto& f : de) scale = std::max(scale, f.max_abs());
  for (int k = 0; k < kDim; ++k) {
    const double dd = d_invariant(de[k], m).max_abs();
    if (dd > 1e-12 * scale * scale) throw InvalidModel("Jacobi identity fails: d(de^" + std::to_string(k + 1) + ") != 0");
  }
  if (d_invariant(omega, m).max_abs() > 1e-12 * scale * std::max(1.0, omega.max_abs()))
    throw InvalidModel("symplectic form is not closed");
  SymplecticMatrix<double> check(omega);
  (void)check;
  return m;
}

double solv_lambda() { return std::log((3.0 + std::sqrt(5.0)) / 2.0); }

LieModel torus_model() {
  std::array<Form, kDim> de;
  for (auto& f : de) f = Form(2);
  return make_model("torus", de, Form::e({1, 2}) + Form::e({3, 4}) + Form::e({5, 6}));
}

LieModel nil_model() {
  std::array<Form, kDim> de;
  for (auto& f : de) f = Form(2);
  de[3] = Form::e({1, 5});
  de[5] = Form::e({1, 3});
  return make_model("nil", de, Form::e({1, 2}) + Form::e({3, 4}) + Form::e({5, 6}));
}

LieModel solv_model() {
  const double l = solv_lambda();
  std::array<Form, kDim> de;
  for (auto& f : de) f = Form(2);
  de[0] = Form::e({1, 5}, -l);
  de[1] = Form::e({2, 5}, l);
  de[2] = Form::e({3, 6}, -l);
  de[3] = Form::e({4, 6}, l);
  return make_model("solv", de, Form::e({1, 2}) + Form::e({3, 4}) + Form::e({5, 6}));
}

LieModel builtin_model(const std::string& name) {
  if (name == "torus") return torus_model();
  if (name == "nil") return nil_model();
  if (name == "solv") return solv_model();
  throw InvalidModel("unknown built-in model '" + name + "'");
}

Form d_invariant(const Form& a, const LieModel& m) {
  if (a.degree() == kDim) throw DegreeError("d of a 6-form");
  return Form(a.degree() + 1, m.dmat[a.degree()] * a.coeffs());
}

Vec6 bracket(const Vec6& x, const Vec6& y, const LieModel& m) {
  Vec6 out = Vec6::Zero();
  for (int k = 0; k < kDim; ++k)
    for (int i = 0; i < kDim; ++i)
      for (int j = 0; j < kDim; ++j) out[k] += m.c(k, i, j) * x[i] * y[j];
  return out;
}

NijTensor nijenhuis(const Mat6& J, const Mat6& g, const LieModel& m) {
  NijTensor N;
  for (int j = 0; j < kDim; ++j)
    for (int k = 0; k < kDim; ++k) {
      const Vec6 ej = basis_vector<double>(j), ek = basis_vector<double>(k);
      const Vec6 Jj = J.col(j), Jk = J.col(k);
      const Vec6 v =
          0.25 * (bracket(Jj, Jk, m) - J * bracket(Jj, ek, m) - J * bracket(ej, Jk, m) - bracket(ej, ek, m));
      for (int p = 0; p < kDim; ++p) N.upper(p, j, k) = v[p];
    }
  for (int i = 0; i < kDim; ++i)
    for (int j = 0; j < kDim; ++j)
      for (int k = 0; k < kDim; ++k) {
        double acc = 0;
        for (int p = 0; p < kDim; ++p) acc += g(i, p) * N.upper(p, j, k);
        N.lower(i, j, k) = acc;
      }
  return N;
}

Mat6 n_squared_plus(const NijTensor& N, const Mat6& g_inv) {
  Tensor3 raised;  // N^{pk}_i
  for (int p = 0; p < kDim; ++p)
    for (int k = 0; k < kDim; ++k)
      for (int i = 0; i < kDim; ++i) {
        double acc = 0;
        for (int a = 0; a < kDim; ++a)
          for (int b = 0; b < kDim; ++b) acc += g_inv(p, a) * g_inv(k, b) * N.lower(a, b, i);
        raised(p, k, i) = acc;
      }
  Mat6 out = Mat6::Zero();
  for (int i = 0; i < kDim; ++i)
    for (int j = 0; j < kDim; ++j)
      for (int p = 0; p < kDim; ++p)
        for (int k = 0; k < kDim; ++k) out(i, j) += raised(p, k, i) * N.lower(p, k, j);
  return out;
}

Mat6 n_squared_minus(const NijTensor& N, const Mat6& g_inv) {
  Tensor3 raised;
  for (int p = 0; p < kDim; ++p)
    for (int k = 0; k < kDim; ++k)
      for (int i = 0; i < kDim; ++i) {
        double acc = 0;
        for (int a = 0; a < kDim; ++a)
          for (int b = 0; b < kDim; ++b) acc += g_inv(p, a) * g_inv(k, b) * N.lower(a, b, i);
        raised(p, k, i) = acc;
      }
  Mat6 out = Mat6::Zero();
  for (int i = 0; i < kDim; ++i)
    for (int j = 0; j < kDim; ++j)
      for (int p = 0; p < kDim; ++p)
        for (int k = 0; k < kDim; ++k) out(i, j) += raised(k, p, i) * N.lower(p, k, j);
  return out;
}

double nijenhuis_norm_sq(const NijTensor& N, const Mat6& g_inv) {
  return (g_inv * n_squared_plus(N, g_inv)).trace();
}

Connection levi_civita(const Mat6& g, const LieModel& m) {
  Tensor3 low;  // low(l, i, j) = g(nabla_i e_j, e_l)
  for (int l = 0; l < kDim; ++l)
    for (int i = 0; i < kDim; ++i)
      for (int j = 0; j < kDim; ++j) {
        double acc = 0;
        for (int p = 0; p < kDim; ++p) acc += m.c(p, i, j) * g(p, l) - m.c(p, j, l) * g(p, i) + m.c(p, l, i) * g(p, j);
        low(l, i, j) = 0.5 * acc;
      }
  const Mat6 gi = g.inverse();
  Connection G;
  for (int k = 0; k < kDim; ++k)
    for (int i = 0; i < kDim; ++i)
      for (int j = 0; j < kDim; ++j) {
        double acc = 0;
        for (int l = 0; l < kDim; ++l) acc += gi(k, l) * low(l, i, j);
        G(k, i, j) = acc;
      }
  return G;
}

Tensor3 torsion(const Connection& conn, const LieModel& m) {
  Tensor3 T;
  for (int k = 0; k < kDim; ++k)
    for (int i = 0; i < kDim; ++i)
      for (int j = 0; j < kDim; ++j) T(k, i, j) = conn(k, i, j) - conn(k, j, i) - m.c(k, i, j);
  return T;
}

Curvature curvature(const Connection& G, const Mat6& g, const LieModel& m) {
  Curvature R;
  for (int i = 0; i < kDim; ++i)
    for (int j = 0; j < kDim; ++j)
      for (int a = 0; a < kDim; ++a)
        for (int l = 0; l < kDim; ++l) {
          double acc = 0;
          for (int p = 0; p < kDim; ++p)
            acc += G(p, j, l) * G(a, i, p) - G(p, i, l) * G(a, j, p) - m.c(p, i, j) * G(a, p, l);
          R.up(i, j, a, l) = acc;
        }
  for (int i = 0; i < kDim; ++i)
    for (int j = 0; j < kDim; ++j)
      for (int k = 0; k < kDim; ++k)
        for (int l = 0; l < kDim; ++l) {
          double acc = 0;
          for (int p = 0; p < kDim; ++p) acc += R.up(i, j, p, l) * g(p, k);
          R.down(i, j, k, l) = acc;
        }
  const Mat6 gi = g.inverse();
  R.ricci.setZero();
  for (int i = 0; i < kDim; ++i)
    for (int k = 0; k < kDim; ++k)
      for (int j = 0; j < kDim; ++j)
        for (int l = 0; l < kDim; ++l) R.ricci(i, k) += gi(j, l) * R.down(i, j, k, l);
  R.scalar = (gi * R.ricci).trace();
  return R;
}

Connection projected_connection(const Connection& conn, const NijTensor& N, const Mat6& g_inv) {
  Connection D = conn;
  for (int a = 0; a < kDim; ++a)
    for (int i = 0; i < kDim; ++i)
      for (int j = 0; j < kDim; ++j) {
        double acc = 0;
        for (int k = 0; k < kDim; ++k) acc += g_inv(a, k) * N.lower(i, j, k);
        D(a, i, j) -= acc;
      }
  return D;
}

Tensor3 nabla_endomorphism(const Connection& G, const Mat6& A) {
  Tensor3 out;
  for (int k = 0; k < kDim; ++k)
    for (int a = 0; a < kDim; ++a)
      for (int b = 0; b < kDim; ++b) {
        double acc = 0;
        for (int p = 0; p < kDim; ++p) acc += G(a, k, p) * A(p, b) - G(p, k, b) * A(a, p);
        out(k, a, b) = acc;
      }
  return out;
}

Tensor3 nabla_bilinear(const Connection& G, const Mat6& h) {
  Tensor3 out;
  for (int i = 0; i < kDim; ++i)
    for (int a = 0; a < kDim; ++a)
      for (int b = 0; b < kDim; ++b) {
        double acc = 0;
        for (int p = 0; p < kDim; ++p) acc -= G(p, i, a) * h(p, b) + G(p, i, b) * h(a, p);
        out(i, a, b) = acc;
      }
  return out;
}

Tensor4 nabla_trilinear(const Connection& G, const Tensor3& T) {
  Tensor4 out;
  for (int l = 0; l < kDim; ++l)
    for (int i = 0; i < kDim; ++i)
      for (int j = 0; j < kDim; ++j)
        for (int k = 0; k < kDim; ++k) {
          double acc = 0;
          for (int p = 0; p < kDim; ++p) acc -= G(p, l, i) * T(p, j, k) + G(p, l, j) * T(i, p, k) + G(p, l, k) * T(i, j, p);
          out(l, i, j, k) = acc;
        }
  return out;
}

double nabla_form(const Connection& G, const Form& a, int i, const int* idx) {
  const int k = a.degree();
  std::array<int, kDim> tmp{};
  double acc = 0;
  for (int s = 0; s < k; ++s) {
    for (int q = 0; q < k; ++q) tmp[q] = idx[q];
    for (int p = 0; p < kDim; ++p) {
      const double gam = G(p, i, idx[s]);
      if (gam == 0) continue;
      tmp[s] = p;
      acc -= gam * a.component(tmp.data());
    }
  }
  return acc;
}

Form codifferential(const Connection& G, const Mat6& g_inv, const Form& a) {
  if (a.degree() < 1) throw DegreeError("codifferential of a 0-form");
  Form out(a.degree() - 1);
  std::array<int, kDim> idx{};
  for (int r = 0; r < out.size(); ++r) {
    const unsigned m = mask_at(out.degree(), r);
    int n = 1;
    for (int q = 0; q < kDim; ++q)
      if (m & (1u << q)) idx[n++] = q;
    double acc = 0;
    for (int c = 0; c < kDim; ++c) {
      idx[0] = c;
      for (int i = 0; i < kDim; ++i) {
        if (g_inv(c, i) == 0) continue;
        acc += g_inv(c, i) * nabla_form(G, a, i, idx.data());
      }
    }
    out.coeffs()[r] = -acc;
  }
  return out;
}

Form codifferential_hodge(const Form& a, const Mat6& g, const Form& orientation, const LieModel& m) {
  return -hodge_star(d_invariant(hodge_star(a, g, orientation), m), g, orientation);
}

Form d_via_connection(const Connection& G, const Form& a) {
  Form out(a.degree() + 1);
  std::array<int, kDim> full{}, rest{};
  for (int r = 0; r < out.size(); ++r) {
    const unsigned m = mask_at(out.degree(), r);
    int n = 0;
    for (int q = 0; q < kDim; ++q)
      if (m & (1u << q)) full[n++] = q;
    double acc = 0;
    for (int s = 0; s < n; ++s) {
      int t = 0;
      for (int q = 0; q < n; ++q)
        if (q != s) rest[t++] = full[q];
      const double v = nabla_form(G, a, full[s], rest.data());
      acc += (s & 1) ? -v : v;
    }
    out.coeffs()[r] = acc;
  }
  return out;
}

Form boxtimes(const Tensor3& T, const Form& mu) {
  if (mu.degree() == 2) {
    const Mat6 M = form_to_matrix(mu);
    Form out(3);
    for (int r = 0; r < out.size(); ++r) {
      const unsigned m = mask_at(3, r);
      int id[3], n = 0;
      for (int q = 0; q < kDim; ++q)
        if (m & (1u << q)) id[n++] = q;
      const int i = id[0], j = id[1], k = id[2];
      double acc = 0;
      for (int p = 0; p < kDim; ++p) acc += T(p, i, j) * M(p, k) + T(p, j, k) * M(p, i) + T(p, k, i) * M(p, j);
      out.coeffs()[r] = acc;
    }
    return out;
  }
  if (mu.degree() == 3) {
    const Tensor3 P = to_tensor3(mu);
    Form out(4);
    for (int r = 0; r < out.size(); ++r) {
      const unsigned m = mask_at(4, r);
      int id[4], n = 0;
      for (int q = 0; q < kDim; ++q)
        if (m & (1u << q)) id[n++] = q;
      const int i = id[0], j = id[1], k = id[2], l = id[3];
      double acc = 0;
      for (int p = 0; p < kDim; ++p)
        acc += T(p, i, j) * P(p, k, l) + T(p, k, l) * P(p, i, j) - T(p, i, k) * P(p, j, l) - T(p, j, l) * P(p, i, k) +
               T(p, i, l) * P(p, j, k) + T(p, j, k) * P(p, i, l);
      out.coeffs()[r] = acc;
    }
    return out;
  }
  throw DegreeError("boxtimes is defined on 2- and 3-forms");
}

Form ndagger(const NijTensor& N, const Mat6& g_inv, const Form& phi) {
  Tensor3 Nr;  // N^m_j^l
  for (int a = 0; a < kDim; ++a)
    for (int j = 0; j < kDim; ++j)
      for (int l = 0; l < kDim; ++l) {
        double acc = 0;
        for (int q = 0; q < kDim; ++q) acc += N.upper(a, j, q) * g_inv(q, l);
        Nr(a, j, l) = acc;
      }
  const Tensor3 P = to_tensor3(phi);
  Mat6 M = Mat6::Zero();
  for (int k = 0; k < kDim; ++k)
    for (int j = 0; j < kDim; ++j)
      for (int a = 0; a < kDim; ++a)
        for (int l = 0; l < kDim; ++l) M(k, j) += Nr(a, j, l) * P(a, k, l) - Nr(a, k, l) * P(a, j, l);
  return matrix_to_form(M);
}

Mat6 anti_invariant_part(const Mat6& h, const Mat6& J) { return 0.5 * (h - J.transpose() * h * J); }

double bilinear_norm(const Mat6& h, const Mat6& g_inv) {
  return std::sqrt(std::max(0.0, (g_inv * h * g_inv * h.transpose()).trace()));
}

Eigen::MatrixXd closed_primitive_basis(const LieModel& m) {
  const int n3 = binom6(3);
  Eigen::MatrixXd C(binom6(4) + binom6(5), n3);
  for (int r = 0; r < n3; ++r) {
    Form b(3);
    b.coeffs()[r] = 1;
    C.col(r) << d_invariant(b, m).coeffs(), wedge(m.omega, b).coeffs();
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(C, Eigen::ComputeFullV);
  const double cutoff = 1e-10 * std::max(1.0, svd.singularValues()(0));
  int rank = 0;
  for (int i = 0; i < svd.singularValues().size(); ++i) rank += svd.singularValues()(i) > cutoff;
  return svd.matrixV().rightCols(n3 - rank);
}

}  // namespace typeiia
