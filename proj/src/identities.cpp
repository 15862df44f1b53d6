#include "typeiia/identities.hpp"

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <complex>
#include <random>
#include <stdexcept>
#include <sstream>

namespace typeiia {

bool IdentityReport::pass() const {
  for (const auto& c : checks)
    if (!(c.residual < tolerance)) return false;
  return true;
}

double IdentityReport::worst() const {
  double w = 0;
  for (const auto& c : checks) w = std::max(w, c.residual);
  return w;
}

double IdentityReport::residual(const std::string& name) const {
  for (const auto& c : checks)
    if (c.name == name) return c.residual;
  return -1;
}

namespace {

double rel(double defect, double scale) {
  if (scale <= 0) return defect;
  return defect / scale;
}

double mabs(const Mat6& m) { return m.cwiseAbs().maxCoeff(); }

struct Entry {
  int sign;
  int i, j, k;
};

std::vector<Entry> parse_family(const char* text) {
  std::vector<Entry> out;
  std::istringstream in(text);
  std::string tok;
  while (in >> tok) {
    Entry e{1, 0, 0, 0};
    std::size_t p = 0;
    if (tok[0] == '-' || tok[0] == '+') {
      e.sign = tok[0] == '-' ? -1 : 1;
      p = 1;
    }
    e.i = tok[p] - '1';
    e.j = tok[p + 1] - '1';
    e.k = tok[p + 2] - '1';
    out.push_back(e);
  }
  return out;
}

// Sign families of a (0,2), Bianchi-satisfying N in a phi-normal frame.
const char* const kFamilies[] = {
    "135 -153 -146 164 -236 263 -245 254", "136 -163 145 -154 235 -253 -246 264",
    "315 -351 -326 362 -416 461 -425 452", "316 -361 325 -352 415 -451 -426 462",
    "513 -531 -524 542 -614 641 -623 632", "514 -541 523 -532 613 -631 -624 642",
    "113 -131 -124 142 -214 241 -223 232", "114 -141 123 -132 213 -231 -224 242",
    "115 -151 -126 162 -216 261 -225 252", "116 -161 125 -152 215 -251 -226 262",
    "331 -313 -342 324 -432 423 -441 414", "332 -323 341 -314 431 -413 -442 424",
    "335 -353 -346 364 -436 463 -445 454", "336 -363 345 -354 435 -453 -446 464",
    "551 -515 -562 526 -652 625 -661 616", "552 -525 561 -516 651 -615 -662 626",
    "553 -535 -564 546 -654 645 -663 636", "554 -545 563 -536 653 -635 -664 646",
};

// Forced to zero by the switch identity in any normal frame.
const char* const kVanishing = "135 315 513";
const char* const kMixed = "136 316 514";
const char* const kLinked[] = {"331 -551", "113 -553", "115 -335", "114 554", "116 336", "332 552"};

}  // namespace

Tensor3 change_frame(const Tensor3& T, const Mat6& B) {
  Tensor3 a, b, c;
  for (int x = 0; x < kDim; ++x)
    for (int j = 0; j < kDim; ++j)
      for (int k = 0; k < kDim; ++k) {
        double acc = 0;
        for (int i = 0; i < kDim; ++i) acc += T(i, j, k) * B(i, x);
        a(x, j, k) = acc;
      }
  for (int x = 0; x < kDim; ++x)
    for (int y = 0; y < kDim; ++y)
      for (int k = 0; k < kDim; ++k) {
        double acc = 0;
        for (int j = 0; j < kDim; ++j) acc += a(x, j, k) * B(j, y);
        b(x, y, k) = acc;
      }
  for (int x = 0; x < kDim; ++x)
    for (int y = 0; y < kDim; ++y)
      for (int z = 0; z < kDim; ++z) {
        double acc = 0;
        for (int k = 0; k < kDim; ++k) acc += b(x, y, k) * B(k, z);
        c(x, y, z) = acc;
      }
  return c;
}

NormalFrameComponents normal_frame_components(const Tensor3& N) {
  NormalFrameComponents out;
  double defect = 0;
  for (const char* fam : kFamilies) {
    const auto e = parse_family(fam);
    const double ref = e[0].sign * N(e[0].i, e[0].j, e[0].k);
    for (const auto& x : e) defect = std::max(defect, std::abs(x.sign * N(x.i, x.j, x.k) - ref));
  }
  for (int s = 0; s < kDim; ++s)
    for (int p = 0; p < kDim; p += 2) {
      defect = std::max(defect, std::abs(N(s, p, p + 1)));
      defect = std::max(defect, std::abs(N(s, p + 1, p)));
    }
  for (const auto& x : parse_family(kVanishing)) defect = std::max(defect, std::abs(N(x.i, x.j, x.k)));
  for (const char* link : kLinked) {
    const auto e = parse_family(link);
    defect = std::max(defect, std::abs(N(e[0].i, e[0].j, e[0].k) + e[1].sign * N(e[1].i, e[1].j, e[1].k)));
  }
  const auto names = parse_family("331 332 113 114 115 116");
  for (int q = 0; q < 6; ++q) out.free[q] = N(names[q].i, names[q].j, names[q].k);
  const auto mixed = parse_family(kMixed);
  for (int q = 0; q < 3; ++q) out.mixed[q] = N(mixed[q].i, mixed[q].j, mixed[q].k);
  defect = std::max(defect, std::abs(out.mixed[0] - out.mixed[1] + out.mixed[2]));
  out.structure_defect = defect;
  double s = 0;
  for (double x : out.free) s += x * x;
  double t = 0;
  for (double x : out.mixed) t += x * x;
  // Each of the 12 paired families carries 8 entries and appears twice; the
  // three mixed families carry 8 entries each.
  out.weighted_norm_sq = 16.0 * s + 8.0 * t;
  return out;
}

namespace {

Mat6 realify(const Eigen::Matrix3cd& U) {
  Mat6 R;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      const auto u = U(i, j);
      R(2 * i, 2 * j) = u.real();
      R(2 * i, 2 * j + 1) = -u.imag();
      R(2 * i + 1, 2 * j) = u.imag();
      R(2 * i + 1, 2 * j + 1) = u.real();
    }
  return R;
}

using Su3Params = Eigen::Matrix<double, 8, 1>;

// exp(i H) for traceless Hermitian H.
Mat6 su3_rotation(const Su3Params& p) {
  using C = std::complex<double>;
  Eigen::Matrix3cd H = Eigen::Matrix3cd::Zero();
  H(0, 0) = p[0];
  H(1, 1) = p[1];
  H(2, 2) = -p[0] - p[1];
  H(0, 1) = C(p[2], p[3]);
  H(0, 2) = C(p[4], p[5]);
  H(1, 2) = C(p[6], p[7]);
  H(1, 0) = std::conj(H(0, 1));
  H(2, 0) = std::conj(H(0, 2));
  H(2, 1) = std::conj(H(1, 2));
  return realify((C(0, 1) * H).exp());
}

Eigen::Vector3d mixed_of(const Tensor3& N, const Mat6& B) {
  const auto c = normal_frame_components(change_frame(N, B));
  return {c.mixed[0], c.mixed[1], c.mixed[2]};
}

}  // namespace

NormalFrame adapted_normal_frame(const HitchinData& point, const NijTensor& N) {
  const NormalFrame F = normal_form(point);
  const double scale = std::max(N.lower.max_abs(), 1e-300);
  const double target = 1e-13 * scale;
  std::mt19937_64 rng(17);
  std::normal_distribution<double> nd;
  for (int start = 0; start < 8; ++start) {
    Su3Params p = Su3Params::Zero();
    if (start > 0)
      for (int k = 0; k < 8; ++k) p[k] = nd(rng);
    for (int it = 0; it < 60; ++it) {
      const Eigen::Vector3d r = mixed_of(N.lower, F.basis * su3_rotation(p));
      if (r.norm() <= target) return NormalFrame{F.basis * su3_rotation(p), F.M};
      Eigen::Matrix<double, 3, 8> jac;
      const double h = 1e-7;
      for (int k = 0; k < 8; ++k) {
        Su3Params q = p;
        q[k] += h;
        jac.col(k) = (mixed_of(N.lower, F.basis * su3_rotation(q)) - r) / h;
      }
      p -= jac.completeOrthogonalDecomposition().solve(r);
    }
  }
  throw std::runtime_error("adapted normal frame: rotation search did not converge");
}

IdentityReport identity_suite(const HitchinData& P, const LieModel& m, double tolerance) {
  IdentityReport rep;
  rep.tolerance = tolerance;
  auto add = [&](const char* name, double r) { rep.checks.push_back({name, r}); };

  const Mat6& g = P.g;
  const Mat6& gi = P.g_inv;
  const Mat6& J = P.J;
  const NijTensor N = nijenhuis(J, g, m);
  const double nN = N.lower.max_abs();
  const double nsq = nijenhuis_norm_sq(N, gi);
  const Connection G = levi_civita(g, m);
  const Connection D = projected_connection(G, N, gi);
  const Curvature R = curvature(G, g, m);

  {
    double d = 0;
    for (int i = 0; i < kDim; ++i)
      for (int j = 0; j < kDim; ++j)
        for (int k = 0; k < kDim; ++k) d = std::max(d, std::abs(N.lower(i, j, k) + N.lower(j, k, i) + N.lower(k, i, j)));
    add("bianchi", rel(d, nN));
  }
  {
    double d = 0;
    for (int i = 0; i < kDim; ++i)
      for (int j = 0; j < kDim; ++j)
        for (int k = 0; k < kDim; ++k) {
          double a = 0, b = 0, c = 0;
          for (int p = 0; p < kDim; ++p) {
            a += J(p, i) * N.lower(p, j, k);
            b += J(p, j) * N.lower(i, p, k);
            c += J(p, k) * N.lower(i, j, p);
          }
          d = std::max({d, std::abs(a - b), std::abs(b - c)});
        }
    const auto split = type_split(N.upper, J);
    const double off = std::max(split.t11.max_abs(), split.t20.max_abs());
    add("type_02", rel(std::max(d, off), nN));
  }
  const Tensor3 phi = to_tensor3(P.phi);
  const Tensor3 hat = to_tensor3(P.phi_hat);
  {
    double d = 0, s = 0, d2 = 0, s2 = 0;
    for (int i = 0; i < kDim; ++i)
      for (int j = 0; j < kDim; ++j)
        for (int k = 0; k < kDim; ++k)
          for (int l = 0; l < kDim; ++l) {
            double a = 0, b = 0, a2 = 0, b2 = 0;
            for (int p = 0; p < kDim; ++p) {
              a += N.upper(p, i, j) * phi(p, k, l);
              b += N.upper(p, k, l) * phi(p, i, j);
              a2 += N.upper(p, i, j) * hat(p, k, l);
              b2 += N.upper(p, k, l) * hat(p, i, j);
            }
            d = std::max(d, std::abs(a + b));
            s = std::max({s, std::abs(a), std::abs(b)});
            d2 = std::max(d2, std::abs(a2 - b2));
            s2 = std::max({s2, std::abs(a2), std::abs(b2)});
          }
    add("switch", rel(d, s));
    add("switch_hat", rel(d2, s2));
  }
  {
    const double scale = N.upper.max_abs() * std::max(P.phi.max_abs(), P.phi_hat.max_abs());
    add("boxtimes_phi_vanishes", rel(boxtimes(N.upper, P.phi).max_abs(), scale));
    const Form box = boxtimes(N.upper, P.phi_hat);
    const Form dhat = d_invariant(P.phi_hat, m);
    add("dphihat_is_boxtimes", rel((dhat - box).max_abs(), std::max(scale, dhat.max_abs())));
    add("boxtimes_type_22", rel((j_act(box, J) - box).max_abs(), std::max(scale, box.max_abs())));
  }
  const Mat6 Np = n_squared_plus(N, gi);
  const Mat6 Nm = n_squared_minus(N, gi);
  {
    const Mat6 rhs = 2.0 * Np - 0.25 * nsq * g;
    add("n2_minus_relation", rel(mabs(Nm - rhs), std::max({mabs(Nm), mabs(Np), nsq * mabs(g)})));
    add("n2_plus_trace", rel(std::abs((gi * Np).trace() - nsq), nsq));
    add("n2_minus_trace", rel(std::abs(2.0 * (gi * Nm).trace() - nsq), nsq));
    const double np2 = std::pow(bilinear_norm(Np, gi), 2);
    add("n2_plus_norm", rel(std::abs(np2 - 3.0 / 16.0 * nsq * nsq), nsq * nsq));
    Eigen::GeneralizedSelfAdjointEigenSolver<Mat6> es(0.5 * (Np + Np.transpose()), g, Eigen::EigenvaluesOnly);
    const double lo = es.eigenvalues().minCoeff(), hi = es.eigenvalues().maxCoeff();
    add("n2_plus_bounds", rel(std::max({0.0, -lo, hi - 0.25 * nsq}), nsq));
  }
  {
    const Tensor3 DJ = nabla_endomorphism(D, J);
    const Tensor3 LJ = nabla_endomorphism(G, J);
    add("projected_preserves_J", rel(DJ.max_abs(), std::max(LJ.max_abs(), nN)));
    double d = 0;
    for (int k = 0; k < kDim; ++k)
      for (int a = 0; a < kDim; ++a)
        for (int b = 0; b < kDim; ++b) {
          double acc = 0;
          for (int p = 0; p < kDim; ++p)
            for (int q = 0; q < kDim; ++q) acc += J(p, k) * gi(a, q) * N.lower(p, q, b);
          d = std::max(d, std::abs(LJ(k, a, b) + 2.0 * acc));
        }
    add("levi_civita_J", rel(d, std::max(LJ.max_abs(), nN)));
    const Tensor3 T = torsion(D, m);
    add("projected_torsion", rel((T - N.upper).max_abs(), std::max(N.upper.max_abs(), T.max_abs())));
    const Tensor3 T0 = torsion(G, m);
    add("levi_civita_torsion_free", rel(T0.max_abs(), std::max(1.0, G.max_abs())));
    const Tensor3 Dg = nabla_bilinear(G, g);
    add("levi_civita_metric", rel(Dg.max_abs(), std::max(1.0, G.max_abs() * mabs(g))));
  }
  {
    const Tensor4 DN = nabla_trilinear(D, N.lower);
    const Tensor4 LN = nabla_trilinear(G, N.lower);
    Mat6 rhs = Mat6::Zero(), divD = Mat6::Zero(), divL = Mat6::Zero();
    for (int i = 0; i < kDim; ++i)
      for (int j = 0; j < kDim; ++j)
        for (int k = 0; k < kDim; ++k)
          for (int l = 0; l < kDim; ++l) {
            rhs(i, j) += gi(k, l) * (DN(l, i, j, k) + DN(l, j, i, k));
            divD(i, j) += gi(k, l) * DN(l, k, i, j);
            divL(i, j) += gi(k, l) * LN(l, k, i, j);
          }
    const Mat6 anti = anti_invariant_part(R.ricci, J);
    add("ricci_anti_invariant", rel(mabs(anti - rhs), std::max({mabs(R.ricci), mabs(rhs), 1e-300})));
    const Mat6 inv = R.ricci - anti;
    add("ricci_invariant", rel(mabs(inv + 2.0 * Nm), std::max(mabs(R.ricci), mabs(Nm))));
    add("scalar_curvature", rel(std::abs(R.scalar + nsq), std::max(std::abs(R.scalar), nsq)));
    const double dscale = std::max(DN.max_abs(), LN.max_abs());
    add("divergence_projected", rel(mabs(divD), dscale));
    add("divergence_levi_civita", rel(mabs(divL), dscale));
  }
  {
    const Form dd = codifferential(G, gi, P.phi);
    const Form dh = codifferential_hodge(P.phi, g, P.orientation, m);
    add("codifferential_two_routes", rel((dd - dh).max_abs(), std::max(dd.max_abs(), dh.max_abs())));
    const Form nd = ndagger(N, gi, P.phi);
    const Form lhs = j_act(dd, J);
    const Form rhs = -dd + 2.0 * nd;
    add("j_codifferential", rel((lhs - rhs).max_abs(), std::max(dd.max_abs(), nd.max_abs())));
    const Form d1 = d_via_connection(G, P.phi_hat);
    const Form d2 = d_invariant(P.phi_hat, m);
    add("d_via_levi_civita", rel((d1 - d2).max_abs(), std::max(d2.max_abs(), G.max_abs() * P.phi_hat.max_abs())));
    add("closed", rel(d_invariant(P.phi, m).max_abs(), std::max(1.0, P.phi.max_abs())));
    add("primitive", rel(lambda_contract(P.phi, P.symp).max_abs(), std::max(1.0, P.phi.max_abs())));
  }
  {
    const double direct = norm_sq(P.phi, g);
    add("norm_consistency", rel(std::abs(direct - P.norm_sq), P.norm_sq));
    add("compatibility", rel(mabs(g - P.symp.matrix() * J), mabs(g)));
  }
  {
    const NormalFrame F = normal_form(P);
    const Tensor3 Nf = change_frame(N.lower, F.basis);
    const auto comps = normal_frame_components(Nf);
    add("normal_frame_structure", rel(comps.structure_defect, Nf.max_abs()));
    add("normal_frame_weighted_norm", rel(std::abs(comps.weighted_norm_sq - nsq), nsq));
    double shape = 1, norm = 1;
    try {
      const NormalFrame A = adapted_normal_frame(P, N);
      const Tensor3 Na = change_frame(N.lower, A.basis);
      const auto a = normal_frame_components(Na);
      double d = a.structure_defect;
      for (double x : a.mixed) d = std::max(d, std::abs(x));
      shape = rel(d, Na.max_abs());
      double s = 0;
      for (double x : a.free) s += x * x;
      norm = rel(std::abs(16.0 * s - nsq), nsq);
    } catch (const std::runtime_error&) {
    }
    add("normal_frame_shape", shape);
    add("normal_frame_norm", norm);
  }
  return rep;
}

}  // namespace typeiia
