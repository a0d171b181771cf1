#include "scex/reference_line.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "scex/error.hpp"
#include "scex/io.hpp"

namespace scex {

ReferenceLine::ReferenceLine(std::vector<Vec2> vertices, double spacing)
    : vertices_(std::move(vertices)), spacing_(spacing) {
  if (vertices_.size() < 2) throw InputError("reference line needs at least 2 vertices");
  if (!(spacing_ > 0.0)) throw InputError("reference line spacing must be positive");
  cumulative_s_.resize(vertices_.size());
  headings_.resize(vertices_.size());
  for (std::size_t i = 0; i < vertices_.size(); ++i) {
    cumulative_s_[i] = static_cast<double>(i) * spacing_;
  }
  for (std::size_t i = 0; i + 1 < vertices_.size(); ++i) {
    const Vec2 d = vertices_[i + 1] - vertices_[i];
    headings_[i] = std::atan2(d.y, d.x);
  }
  headings_.back() = headings_[headings_.size() - 2];
}

std::size_t ReferenceLine::segment_for(double s) const {
  const auto last = vertices_.size() - 2;
  if (s <= 0.0) return 0;
  const auto i = static_cast<std::size_t>(std::floor(s / spacing_));
  return std::min(i, last);
}

std::optional<Projection> ReferenceLine::try_project(Vec2 p, double lateral_bound) const {
  double best_d2 = std::numeric_limits<double>::infinity();
  std::size_t best_i = 0;
  double best_u = 0.0;
  double best_raw = 0.0;
  for (std::size_t i = 0; i + 1 < vertices_.size(); ++i) {
    const Vec2 a = vertices_[i];
    const Vec2 d = vertices_[i + 1] - a;
    const double raw = dot(p - a, d) / dot(d, d);
    const double u = std::clamp(raw, 0.0, 1.0);
    const Vec2 q = a + d * u;
    const Vec2 r = p - q;
    const double d2 = dot(r, r);
    if (d2 < best_d2) {
      best_d2 = d2;
      best_i = i;
      best_u = u;
      best_raw = raw;
    }
  }

  const Vec2 a = vertices_[best_i];
  const Vec2 d = vertices_[best_i + 1] - a;
  const double seg_len = norm(d);
  Projection out;
  const bool before_start = best_i == 0 && best_raw < 0.0;
  const bool after_end = best_i + 2 == vertices_.size() && best_raw > 1.0;
  if (before_start || after_end) {
    out.clamped = true;
    out.pose.s = before_start ? 0.0 : length();
    out.pose.t = cross(d, p - a) / seg_len;
  } else {
    out.pose.s = cumulative_s_[best_i] + best_u * seg_len;
    const double side = cross(d, p - a);
    out.pose.t = side >= 0.0 ? std::sqrt(best_d2) : -std::sqrt(best_d2);
  }
  if (std::abs(out.pose.t) > lateral_bound) return std::nullopt;
  return out;
}

Projection ReferenceLine::project(Vec2 p, double lateral_bound) const {
  auto r = try_project(p, lateral_bound);
  if (!r) {
    throw InputError("point (" + format_double(p.x) + ", " + format_double(p.y) +
                     ") is beyond the lateral bound of the reference line");
  }
  return *r;
}

Vec2 ReferenceLine::point_at(double s) const {
  const std::size_t i = segment_for(s);
  const Vec2 a = vertices_[i];
  const Vec2 d = vertices_[i + 1] - a;
  const double u = (s - cumulative_s_[i]) / norm(d);
  return a + d * u;
}

double ReferenceLine::heading_at(double s) const { return headings_[segment_for(s)]; }

Vec2 ReferenceLine::from_frenet(FrenetPose f) const {
  const std::size_t i = segment_for(f.s);
  const Vec2 a = vertices_[i];
  const Vec2 d = vertices_[i + 1] - a;
  const double len = norm(d);
  const double u = (f.s - cumulative_s_[i]) / len;
  const Vec2 n{-d.y / len, d.x / len};
  return a + d * u + n * f.t;
}

ReferenceLine build_reference_line(std::span<const Vec2> raw_path, double spacing, double min_length) {
  std::vector<Vec2> path;
  path.reserve(raw_path.size());
  for (const Vec2& p : raw_path) {
    if (path.empty() || distance(path.back(), p) > 1e-12) path.push_back(p);
  }
  double total = 0.0;
  for (std::size_t i = 1; i < path.size(); ++i) total += distance(path[i - 1], path[i]);
  if (path.size() < 2 || total < min_length) {
    throw InputError("stationary log: ego path length " + format_double(total) +
                     " m is below the minimum of " + format_double(min_length) + " m");
  }

  // Walk the path, each time finding the first point at exactly `spacing`
  // chord distance from the current vertex.
  std::vector<Vec2> out{path.front()};
  Vec2 cur = path.front();
  std::size_t seg = 0;
  double lambda0 = 0.0;
  const double r2 = spacing * spacing;
  while (true) {
    bool found = false;
    for (std::size_t k = seg; k + 1 < path.size(); ++k) {
      const Vec2 a = path[k];
      const Vec2 e = path[k + 1] - a;
      const Vec2 w = a - cur;
      const double qa = dot(e, e);
      const double qb = 2.0 * dot(e, w);
      const double qc = dot(w, w) - r2;
      const double disc = qb * qb - 4.0 * qa * qc;
      if (disc < 0.0) continue;
      const double lam = (-qb + std::sqrt(disc)) / (2.0 * qa);
      const double start = k == seg ? lambda0 : 0.0;
      if (lam >= start - 1e-12 && lam <= 1.0) {
        cur = a + e * lam;
        out.push_back(cur);
        seg = k;
        lambda0 = lam;
        found = true;
        break;
      }
    }
    if (!found) break;
  }
  if (out.size() < 2) throw InputError("ego path too short for the reference line spacing");
  return ReferenceLine(std::move(out), spacing);
}

ReferenceLine build_reference_line(std::span<const EgoPose> poses, double spacing, double min_length) {
  if (poses.size() < 2) throw InputError("reference line needs at least 2 poses");
  std::vector<Vec2> path;
  path.reserve(poses.size());
  for (const auto& p : poses) path.push_back(p.position());
  return build_reference_line(std::span<const Vec2>(path), spacing, min_length);
}

std::vector<double> heading_gradient(const ReferenceLine& line) {
  const auto& h = line.headings();
  const std::size_t n = h.size();
  std::vector<double> unwrapped(n);
  unwrapped[0] = h[0];
  for (std::size_t i = 1; i < n; ++i) {
    unwrapped[i] = unwrapped[i - 1] + normalize_angle(h[i] - h[i - 1]);
  }
  const double ds = line.spacing();
  std::vector<double> k(n, 0.0);
  if (n < 2) return k;
  k[0] = (unwrapped[1] - unwrapped[0]) / ds;
  k[n - 1] = (unwrapped[n - 1] - unwrapped[n - 2]) / ds;
  for (std::size_t i = 1; i + 1 < n; ++i) k[i] = (unwrapped[i + 1] - unwrapped[i - 1]) / (2.0 * ds);
  return k;
}

}  // namespace scex
