#ifndef TYPEIIA_IDENTITIES_HPP
#define TYPEIIA_IDENTITIES_HPP

/// Identity suite for left-invariant Type IIA points.

#include <string>
#include <vector>

#include "typeiia/hitchin.hpp"
#include "typeiia/liegeom.hpp"

namespace typeiia {

struct IdentityCheck {
  std::string name;
  /// Max absolute defect divided by the largest tensor norm entering the identity.
  double residual = 0;
};

struct IdentityReport {
  std::vector<IdentityCheck> checks;
  double tolerance = 1e-9;

  bool pass() const;
  double worst() const;
  /// Residual of a named check, or -1 when absent.
  double residual(const std::string& name) const;
};

/// Evaluates every identity at a closed primitive positive invariant point.
IdentityReport identity_suite(const HitchinData& point, const LieModel& m, double tolerance = 1e-9);

/// N in a basis given by the columns of B: N'_{abc} = N_{ijk} B_{ia} B_{jb} B_{kc}.
Tensor3 change_frame(const Tensor3& lower, const Mat6& B);

struct NormalFrameComponents {
  /// a = N331, b = N332, c = N113, d = N114, e = N115, f = N116 (1-based labels).
  std::array<double, 6> free{};
  /// N136, N316, N514.  Tied by N136 = N316 - N514 but not forced to vanish in
  /// an arbitrary normal frame.
  std::array<double, 3> mixed{};
  /// Largest violation of the sign families, the vanishing of N135, N315,
  /// N513, the six linked pairs and the relation among the mixed components.
  double structure_defect = 0;
  /// Sum of squares weighted so that it equals |N|^2 whenever structure_defect = 0.
  double weighted_norm_sq = 0;
};

/// Reads the components of a lowered Nijenhuis tensor given in a phi-normal frame.
NormalFrameComponents normal_frame_components(const Tensor3& lower_in_frame);

/// Normal frame, rotated inside the SU(3) stabiliser of (omega, phi), in which
/// the mixed components vanish and N has only the six free components.
/// Throws std::runtime_error when the rotation search does not converge.
NormalFrame adapted_normal_frame(const HitchinData& point, const NijTensor& N);

}  // namespace typeiia

#endif  // TYPEIIA_IDENTITIES_HPP
