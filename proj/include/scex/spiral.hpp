#pragma once

namespace scex {

struct Pose2 {
  double x = 0.0;
  double y = 0.0;
  double hdg = 0.0;
};

Pose2 advance_line(Pose2 start, double length);

/// Constant curvature; exact closed form.
Pose2 advance_arc(Pose2 start, double kappa, double length);

/// Curvature varying linearly from k0 to k1 over `length`. Position by
/// adaptive Gauss-Kronrod quadrature of the Fresnel-type integrals.
Pose2 advance_spiral(Pose2 start, double k0, double k1, double length);

}  // namespace scex
