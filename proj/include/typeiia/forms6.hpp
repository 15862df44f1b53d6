#ifndef TYPEIIA_FORMS6_HPP
#define TYPEIIA_FORMS6_HPP

/// Multilinear algebra on a fixed oriented 6-dimensional vector space.
///
/// Forms are stored on strictly increasing index tuples (encoded as 6-bit
/// masks, ordered lexicographically by tuple).  The stored coefficient at a
/// sorted tuple is the tensor component there:
///   a = (1/k!) a_{i1...ik} e^{i1} ^ ... ^ e^{ik}.
/// All indices in the API are 0-based, except KForm::e which takes the 1-based
/// labels used when writing e^{135} by hand.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <vector>

namespace typeiia {

constexpr int kDim = 6;

template <typename S> using Vec6T = Eigen::Matrix<S, 6, 1>;
template <typename S> using Mat6T = Eigen::Matrix<S, 6, 6>;
using Vec6 = Vec6T<double>;
using Mat6 = Mat6T<double>;

struct DegreeError : std::domain_error {
  using std::domain_error::domain_error;
};
struct SingularSymplectic : std::domain_error {
  using std::domain_error::domain_error;
};
struct MetricError : std::domain_error {
  using std::domain_error::domain_error;
};

namespace detail {

struct IndexTables {
  std::array<std::vector<unsigned>, kDim + 1> masks;
  std::array<int, 64> rank{};
};

inline void collect(int start, int left, unsigned acc, std::vector<unsigned>& out) {
  if (left == 0) {
    out.push_back(acc);
    return;
  }
  for (int i = start; i <= kDim - left; ++i) collect(i + 1, left - 1, acc | (1u << i), out);
}

inline const IndexTables& tables() {
  static const IndexTables t = [] {
    IndexTables r;
    for (int k = 0; k <= kDim; ++k) {
      collect(0, k, 0u, r.masks[k]);
      for (std::size_t i = 0; i < r.masks[k].size(); ++i) r.rank[r.masks[k][i]] = static_cast<int>(i);
    }
    return r;
  }();
  return t;
}

/// Sign of e^A ^ e^B relative to e^{A|B}; zero when A and B overlap.
inline int merge_sign(unsigned a, unsigned b) {
  if (a & b) return 0;
  int inv = 0;
  for (unsigned rest = b; rest; rest &= rest - 1) {
    int j = std::countr_zero(rest);
    inv += std::popcount(a >> (j + 1));
  }
  return (inv & 1) ? -1 : 1;
}

inline int popcount(unsigned m) { return std::popcount(m); }

}  // namespace detail

inline int binom6(int k) { return static_cast<int>(detail::tables().masks.at(k).size()); }
inline unsigned mask_at(int k, int r) { return detail::tables().masks[k][r]; }
inline int mask_rank(unsigned mask) { return detail::tables().rank[mask]; }
inline constexpr unsigned kFullMask = (1u << kDim) - 1;

/// Permutation sign of an index list relative to its sorted order; 0 on repeats.
inline int index_sign(const int* idx, int n, unsigned* mask_out = nullptr) {
  unsigned mask = 0;
  int inv = 0;
  for (int p = 0; p < n; ++p) {
    unsigned bit = 1u << idx[p];
    if (mask & bit) return 0;
    mask |= bit;
    for (int q = p + 1; q < n; ++q) inv += idx[p] > idx[q];
  }
  if (mask_out) *mask_out = mask;
  return (inv & 1) ? -1 : 1;
}

template <typename S>
class KForm {
 public:
  using Scalar = S;
  using Coeffs = Eigen::Matrix<S, Eigen::Dynamic, 1>;

  KForm() : KForm(0) {}
  explicit KForm(int degree) : deg_(degree) {
    if (degree < 0 || degree > kDim) throw DegreeError("form degree out of range: " + std::to_string(degree));
    c_ = Coeffs::Zero(binom6(degree));
  }
  KForm(int degree, Coeffs c) : KForm(degree) {
    if (c.size() != c_.size()) throw DegreeError("coefficient count does not match degree");
    c_ = std::move(c);
  }

  static KForm zero(int degree) { return KForm(degree); }
  static KForm constant(S v) {
    KForm f(0);
    f.c_[0] = v;
    return f;
  }
  /// Basis monomial from 1-based labels, e({1,3,5}) = e^{135}.
  static KForm e(std::initializer_list<int> labels, S value = S(1)) {
    std::vector<int> idx;
    for (int l : labels) idx.push_back(l - 1);
    KForm f(static_cast<int>(idx.size()));
    f.set_component(idx.data(), value);
    return f;
  }
  static KForm volume() { return e({1, 2, 3, 4, 5, 6}); }

  int degree() const { return deg_; }
  int size() const { return static_cast<int>(c_.size()); }
  const Coeffs& coeffs() const { return c_; }
  Coeffs& coeffs() { return c_; }

  S at_mask(unsigned mask) const { return c_[mask_rank(mask)]; }
  S& at_mask(unsigned mask) { return c_[mask_rank(mask)]; }

  /// Tensor component a_{i1..ik} for any index order (0-based).
  S component(const int* idx) const {
    unsigned m = 0;
    int s = index_sign(idx, deg_, &m);
    return s == 0 ? S(0) : S(s) * c_[mask_rank(m)];
  }
  S operator()(std::initializer_list<int> idx) const {
    if (static_cast<int>(idx.size()) != deg_) throw DegreeError("component index count does not match degree");
    return component(idx.begin());
  }
  /// Sets the component at an index list so that component(idx) == value afterwards.
  void set_component(const int* idx, S value) {
    unsigned m = 0;
    int s = index_sign(idx, deg_, &m);
    if (s == 0) throw DegreeError("repeated index in form component");
    c_[mask_rank(m)] = S(s) * value;
  }

  S max_abs() const { return c_.size() ? c_.cwiseAbs().maxCoeff() : S(0); }
  bool is_zero(S tol) const { return max_abs() <= tol; }

  KForm& operator+=(const KForm& o) {
    check_same(o);
    c_ += o.c_;
    return *this;
  }
  KForm& operator-=(const KForm& o) {
    check_same(o);
    c_ -= o.c_;
    return *this;
  }
  KForm& operator*=(S s) {
    c_ *= s;
    return *this;
  }
  friend KForm operator+(KForm a, const KForm& b) { return a += b; }
  friend KForm operator-(KForm a, const KForm& b) { return a -= b; }
  friend KForm operator-(KForm a) {
    a.c_ = -a.c_;
    return a;
  }
  friend KForm operator*(S s, KForm a) { return a *= s; }
  friend KForm operator*(KForm a, S s) { return a *= s; }

 private:
  void check_same(const KForm& o) const {
    if (o.deg_ != deg_) throw DegreeError("adding forms of different degree");
  }
  int deg_;
  Coeffs c_;
};

using Form = KForm<double>;

/// The single coefficient of a top-degree form.
template <typename S>
S top_coeff(const KForm<S>& a) {
  if (a.degree() != kDim) throw DegreeError("top_coeff needs a 6-form");
  return a.coeffs()[0];
}

template <typename S>
KForm<S> wedge(const KForm<S>& a, const KForm<S>& b) {
  const int k = a.degree() + b.degree();
  if (k > kDim) throw DegreeError("wedge degree exceeds 6");
  KForm<S> out(k);
  for (int i = 0; i < a.size(); ++i) {
    const S ai = a.coeffs()[i];
    if (ai == S(0)) continue;
    const unsigned ma = mask_at(a.degree(), i);
    for (int j = 0; j < b.size(); ++j) {
      const S bj = b.coeffs()[j];
      if (bj == S(0)) continue;
      const unsigned mb = mask_at(b.degree(), j);
      const int s = detail::merge_sign(ma, mb);
      if (s) out.at_mask(ma | mb) += S(s) * ai * bj;
    }
  }
  return out;
}

/// Contraction in the first slot, (i_v a)_{i2..ik} = v^{i1} a_{i1 i2..ik}.
template <typename S>
KForm<S> interior(const Vec6T<S>& v, const KForm<S>& a) {
  if (a.degree() < 1) throw DegreeError("interior product of a 0-form");
  KForm<S> out(a.degree() - 1);
  for (int r = 0; r < a.size(); ++r) {
    const S ar = a.coeffs()[r];
    if (ar == S(0)) continue;
    const unsigned m = mask_at(a.degree(), r);
    int pos = 0;
    for (int i = 0; i < kDim; ++i) {
      if (!(m & (1u << i))) continue;
      out.at_mask(m & ~(1u << i)) += ((pos & 1) ? S(-1) : S(1)) * v[i] * ar;
      ++pos;
    }
  }
  return out;
}

template <typename S>
Vec6T<S> basis_vector(int i) {
  Vec6T<S> v = Vec6T<S>::Zero();
  v[i] = S(1);
  return v;
}

/// Antisymmetric matrix of a 2-form, M(i,j) = w_{ij}.
template <typename S>
Mat6T<S> form_to_matrix(const KForm<S>& w) {
  if (w.degree() != 2) throw DegreeError("form_to_matrix needs a 2-form");
  Mat6T<S> m = Mat6T<S>::Zero();
  for (int r = 0; r < w.size(); ++r) {
    const unsigned mask = mask_at(2, r);
    const int i = std::countr_zero(mask);
    const int j = std::countr_zero(mask & (mask - 1));
    m(i, j) = w.coeffs()[r];
    m(j, i) = -w.coeffs()[r];
  }
  return m;
}

/// 2-form from the antisymmetric part of a matrix, w_{ij} = (M(i,j) - M(j,i)) / 2.
template <typename S>
KForm<S> matrix_to_form(const Mat6T<S>& m) {
  KForm<S> w(2);
  for (int r = 0; r < w.size(); ++r) {
    const unsigned mask = mask_at(2, r);
    const int i = std::countr_zero(mask);
    const int j = std::countr_zero(mask & (mask - 1));
    w.coeffs()[r] = (m(i, j) - m(j, i)) / S(2);
  }
  return w;
}

/// A nondegenerate 2-form together with its inverse matrix w^{jk} (w^{jk} w_{kl} = delta).
template <typename S>
class SymplecticMatrix {
 public:
  explicit SymplecticMatrix(const KForm<S>& w) : SymplecticMatrix(form_to_matrix(w)) {}
  explicit SymplecticMatrix(const Mat6T<S>& m) : m_(m) {
    using std::abs;
    Eigen::FullPivLU<Mat6T<S>> lu(m_);
    const S scale = m_.cwiseAbs().maxCoeff();
    if (!(scale > S(0)) || lu.rank() < kDim || abs(lu.determinant()) <= S(1e-24) * std::pow(scale, 6))
      throw SingularSymplectic("symplectic form is degenerate");
    inv_ = lu.inverse();
  }
  const Mat6T<S>& matrix() const { return m_; }
  const Mat6T<S>& inverse() const { return inv_; }
  KForm<S> form() const { return matrix_to_form(m_); }

 private:
  Mat6T<S> m_;
  Mat6T<S> inv_;
};

/// (Lambda a)_{i3..ik} = 1/2 w^{ji} a_{i j i3..ik}.
template <typename S>
KForm<S> lambda_contract(const KForm<S>& a, const SymplecticMatrix<S>& w) {
  if (a.degree() < 2) throw DegreeError("Lambda needs degree >= 2");
  const Mat6T<S>& wi = w.inverse();
  KForm<S> out(a.degree() - 2);
  for (int r = 0; r < out.size(); ++r) {
    const unsigned rest = mask_at(out.degree(), r);
    S acc(0);
    for (int i = 0; i < kDim; ++i) {
      if (rest & (1u << i)) continue;
      for (int j = i + 1; j < kDim; ++j) {
        if (rest & (1u << j)) continue;
        const int below = std::popcount(rest & ((1u << i) - 1)) + std::popcount(rest & ((1u << j) - 1));
        const S sgn = (below & 1) ? S(-1) : S(1);
        acc += sgn * wi(j, i) * a.at_mask(rest | (1u << i) | (1u << j));
      }
    }
    out.coeffs()[r] = acc;
  }
  return out;
}

template <typename S>
KForm<S> lambda_contract(const KForm<S>& a, const Mat6T<S>& w) {
  return lambda_contract(a, SymplecticMatrix<S>(w));
}

/// Determinant of the submatrix with rows in `rows` and columns in `cols` (equal popcount).
template <typename S>
S minor_det(const Mat6T<S>& A, unsigned rows, unsigned cols) {
  const int k = std::popcount(rows);
  std::array<int, kDim> ri{}, ci{};
  int n = 0;
  for (int i = 0; i < kDim; ++i)
    if (rows & (1u << i)) ri[n++] = i;
  n = 0;
  for (int i = 0; i < kDim; ++i)
    if (cols & (1u << i)) ci[n++] = i;
  switch (k) {
    case 0:
      return S(1);
    case 1:
      return A(ri[0], ci[0]);
    case 2:
      return A(ri[0], ci[0]) * A(ri[1], ci[1]) - A(ri[0], ci[1]) * A(ri[1], ci[0]);
    case 3:
      return A(ri[0], ci[0]) * (A(ri[1], ci[1]) * A(ri[2], ci[2]) - A(ri[1], ci[2]) * A(ri[2], ci[1])) -
             A(ri[0], ci[1]) * (A(ri[1], ci[0]) * A(ri[2], ci[2]) - A(ri[1], ci[2]) * A(ri[2], ci[0])) +
             A(ri[0], ci[2]) * (A(ri[1], ci[0]) * A(ri[2], ci[1]) - A(ri[1], ci[1]) * A(ri[2], ci[0]));
    default: {
      Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic> sub(k, k);
      for (int p = 0; p < k; ++p)
        for (int q = 0; q < k; ++q) sub(p, q) = A(ri[p], ci[q]);
      return sub.determinant();
    }
  }
}

/// Matrix of the induced action on k-forms: (A^* a)_I = sum_P a_P det A[P, I].
template <typename S>
Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic> induced_matrix(const Mat6T<S>& A, int k) {
  const int n = binom6(k);
  Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic> M(n, n);
  for (int I = 0; I < n; ++I)
    for (int P = 0; P < n; ++P) M(I, P) = minor_det(A, mask_at(k, P), mask_at(k, I));
  return M;
}

/// Slot-wise pullback, (A^* a)(X1,..,Xk) = a(A X1, .., A Xk).
///
/// With the columns of A holding new basis vectors this gives the components
/// of a in the new basis.
template <typename S>
KForm<S> pullback(const KForm<S>& a, const Mat6T<S>& A) {
  return KForm<S>(a.degree(), induced_matrix(A, a.degree()) * a.coeffs());
}

/// (J a)(X,Y,..) = a(JX, JY, ..).
template <typename S>
KForm<S> j_act(const KForm<S>& a, const Mat6T<S>& J) {
  return pullback(a, J);
}

/// Gram matrix of the metric induced by g on k-forms: <e^I, e^J> = det g^{-1}[I, J].
template <typename S>
Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic> form_gram(const Mat6T<S>& g_inv, int k) {
  return induced_matrix(g_inv, k);
}

template <typename S>
S inner(const KForm<S>& a, const KForm<S>& b, const Mat6T<S>& g) {
  if (a.degree() != b.degree()) throw DegreeError("inner product of forms of different degree");
  const Mat6T<S> gi = g.inverse();
  return a.coeffs().dot(form_gram(gi, a.degree()) * b.coeffs());
}

template <typename S>
S norm_sq(const KForm<S>& a, const Mat6T<S>& g) {
  return inner(a, a, g);
}

/// Hodge star with b ^ *a = <b, a> vol, vol = sign(orientation) sqrt(det g) e^{123456}.
template <typename S>
KForm<S> hodge_star(const KForm<S>& a, const Mat6T<S>& g, const KForm<S>& orientation) {
  using std::sqrt;
  Eigen::LLT<Mat6T<S>> llt(g);
  if (llt.info() != Eigen::Success || !g.isApprox(g.transpose())) throw MetricError("metric is not positive definite");
  const S o = top_coeff(orientation);
  if (o == S(0)) throw DegreeError("orientation form is zero");
  const S vol = (o > S(0) ? S(1) : S(-1)) * sqrt(g.determinant());
  const Mat6T<S> gi = llt.solve(Mat6T<S>::Identity());
  const auto raised = (form_gram(gi, a.degree()) * a.coeffs()).eval();
  KForm<S> out(kDim - a.degree());
  for (int r = 0; r < a.size(); ++r) {
    const unsigned m = mask_at(a.degree(), r);
    const unsigned mc = kFullMask & ~m;
    out.at_mask(mc) += S(detail::merge_sign(m, mc)) * vol * raised[r];
  }
  return out;
}

template <typename S>
Vec6T<S> flat(const Vec6T<S>& v, const Mat6T<S>& g) {
  return g * v;
}
template <typename S>
Vec6T<S> sharp(const Vec6T<S>& xi, const Mat6T<S>& g) {
  return g.ldlt().solve(xi);
}

template <typename S>
KForm<S> one_form(const Vec6T<S>& xi) {
  return KForm<S>(1, xi);
}

/// Dense rank-3 array over 6 indices.
template <typename S>
struct Tensor3T {
  std::array<S, 216> v{};
  S& operator()(int a, int b, int c) { return v[(a * 6 + b) * 6 + c]; }
  S operator()(int a, int b, int c) const { return v[(a * 6 + b) * 6 + c]; }
  static Tensor3T zero() { return Tensor3T{}; }
  Tensor3T& operator+=(const Tensor3T& o) {
    for (int i = 0; i < 216; ++i) v[i] += o.v[i];
    return *this;
  }
  Tensor3T& operator-=(const Tensor3T& o) {
    for (int i = 0; i < 216; ++i) v[i] -= o.v[i];
    return *this;
  }
  Tensor3T& operator*=(S s) {
    for (auto& x : v) x *= s;
    return *this;
  }
  friend Tensor3T operator+(Tensor3T a, const Tensor3T& b) { return a += b; }
  friend Tensor3T operator-(Tensor3T a, const Tensor3T& b) { return a -= b; }
  friend Tensor3T operator*(S s, Tensor3T a) { return a *= s; }
  S max_abs() const {
    using std::abs;
    S m(0);
    for (S x : v) m = std::max(m, S(abs(x)));
    return m;
  }
};

/// Dense rank-4 array over 6 indices.
template <typename S>
struct Tensor4T {
  std::array<S, 1296> v{};
  S& operator()(int a, int b, int c, int d) { return v[((a * 6 + b) * 6 + c) * 6 + d]; }
  S operator()(int a, int b, int c, int d) const { return v[((a * 6 + b) * 6 + c) * 6 + d]; }
  Tensor4T& operator-=(const Tensor4T& o) {
    for (int i = 0; i < 1296; ++i) v[i] -= o.v[i];
    return *this;
  }
  friend Tensor4T operator-(Tensor4T a, const Tensor4T& b) { return a -= b; }
  S max_abs() const {
    using std::abs;
    S m(0);
    for (S x : v) m = std::max(m, S(abs(x)));
    return m;
  }
};

using Tensor3 = Tensor3T<double>;
using Tensor4 = Tensor4T<double>;

/// Vector-valued 2-form T^m_{jk}, antisymmetric in (j,k).
template <typename S>
using TMValued2FormT = Tensor3T<S>;
using TMValued2Form = TMValued2FormT<double>;

/// Full tensor of a form of degree 3 or 4, returned for degree 3 as a Tensor3.
template <typename S>
Tensor3T<S> to_tensor3(const KForm<S>& a) {
  if (a.degree() != 3) throw DegreeError("to_tensor3 needs a 3-form");
  Tensor3T<S> t;
  for (int i = 0; i < kDim; ++i)
    for (int j = 0; j < kDim; ++j)
      for (int k = 0; k < kDim; ++k) {
        const int idx[3] = {i, j, k};
        t(i, j, k) = a.component(idx);
      }
  return t;
}

/// (M T)^m_{bc} = T^m_{jk} J^j_b J^k_c.
template <typename S>
TMValued2FormT<S> slot_j(const TMValued2FormT<S>& T, const Mat6T<S>& J) {
  TMValued2FormT<S> out;
  for (int m = 0; m < kDim; ++m)
    for (int b = 0; b < kDim; ++b)
      for (int c = 0; c < kDim; ++c) {
        S acc(0);
        for (int j = 0; j < kDim; ++j)
          for (int k = 0; k < kDim; ++k) acc += T(m, j, k) * J(j, b) * J(k, c);
        out(m, b, c) = acc;
      }
  return out;
}

/// (K T)(X,Y) = -J T(JX, Y).
template <typename S>
TMValued2FormT<S> value_j(const TMValued2FormT<S>& T, const Mat6T<S>& J) {
  TMValued2FormT<S> out;
  for (int m = 0; m < kDim; ++m)
    for (int b = 0; b < kDim; ++b)
      for (int c = 0; c < kDim; ++c) {
        S acc(0);
        for (int p = 0; p < kDim; ++p)
          for (int j = 0; j < kDim; ++j) acc -= J(m, p) * T(p, j, c) * J(j, b);
        out(m, b, c) = acc;
      }
  return out;
}

template <typename S>
struct TypeSplit {
  TMValued2FormT<S> t11, t20, t02;
};

/// Decomposition into J-types: (1,1) is the +1 eigenspace of T -> T(J.,J.);
/// on the -1 eigenspace, (2,0) has T(JX,Y) = J T(X,Y) and (0,2) has T(JX,Y) = -J T(X,Y).
template <typename S>
TypeSplit<S> type_split(const TMValued2FormT<S>& T, const Mat6T<S>& J) {
  const auto MT = slot_j(T, J);
  TypeSplit<S> out;
  TMValued2FormT<S> minus;
  for (int i = 0; i < 216; ++i) {
    out.t11.v[i] = (T.v[i] + MT.v[i]) / S(2);
    minus.v[i] = (T.v[i] - MT.v[i]) / S(2);
  }
  const auto KM = value_j(minus, J);
  for (int i = 0; i < 216; ++i) {
    out.t20.v[i] = (minus.v[i] + KM.v[i]) / S(2);
    out.t02.v[i] = (minus.v[i] - KM.v[i]) / S(2);
  }
  return out;
}

}  // namespace typeiia

#endif  // TYPEIIA_FORMS6_HPP
