#include "scex/spiral.hpp"

#include <cmath>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace scex {

Pose2 advance_line(Pose2 p, double length) {
  return {p.x + length * std::cos(p.hdg), p.y + length * std::sin(p.hdg), p.hdg};
}

Pose2 advance_arc(Pose2 p, double kappa, double length) {
  if (std::abs(kappa) < 1e-12) return advance_line(p, length);
  const double h1 = p.hdg + kappa * length;
  return {p.x + (std::sin(h1) - std::sin(p.hdg)) / kappa, p.y - (std::cos(h1) - std::cos(p.hdg)) / kappa, h1};
}

Pose2 advance_spiral(Pose2 p, double k0, double k1, double length) {
  using boost::math::quadrature::gauss_kronrod;
  const double rate = (k1 - k0) / length;
  auto theta = [&](double s) { return p.hdg + k0 * s + 0.5 * rate * s * s; };
  constexpr double tol = 1e-14;
  const double dx = gauss_kronrod<double, 31>::integrate([&](double s) { return std::cos(theta(s)); }, 0.0, length, 20, tol);
  const double dy = gauss_kronrod<double, 31>::integrate([&](double s) { return std::sin(theta(s)); }, 0.0, length, 20, tol);
  return {p.x + dx, p.y + dy, theta(length)};
}

}  // namespace scex
