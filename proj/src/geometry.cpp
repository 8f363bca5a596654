// SPDX-License-Identifier: Apache-2.0
#include "pwe/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace pwe {

RayHit ray_hit(const Vec3& origin, const Vec3& dir,
               const std::vector<Surface>& surfaces, double min_t) {
    RayHit best;
    for (const Surface& s : surfaces) {
        const double denom = dir.dot(s.normal);
        if (std::abs(denom) < 1e-12) continue;
        const double t = (s.origin - origin).dot(s.normal) / denom;
        if (t <= min_t) continue;
        const Vec3 p = origin + dir * t;
        double u, v;
        s.local_coords(p, u, v);
        const double tol = 1e-9;
        if (u < -tol || u > s.eu + tol || v < -tol || v > s.ev + tol) continue;
        if (t < best.t - 1e-12) {
            best = {s.id, t, p};
        } else if (std::abs(t - best.t) <= 1e-12 && best.valid()) {
            // Coincident rectangles: keep the face the ray runs into.
            const bool cur_front = denom < 0.0;
            const bool old_front = dir.dot(surfaces[best.surface].normal) < 0.0;
            if ((cur_front && !old_front) || (cur_front == old_front && s.id < best.surface))
                best = {s.id, t, p};
        }
    }
    return best;
}

std::optional<double> ray_hit_sphere(const Vec3& origin, const Vec3& dir,
                                     const Sphere& sphere, double min_t) {
    // Solve |origin + t*dir - c|^2 = r^2 for the smallest admissible t.
    const Vec3 oc = origin - sphere.center;
    const double a = dir.dot(dir);
    if (a == 0.0) return std::nullopt;
    const double b = 2.0 * oc.dot(dir);
    const double c = oc.dot(oc) - sphere.radius * sphere.radius;
    // Same boundary as segment_intersects_sphere: the ray must pass
    // strictly inside, a grazing pass stays clear.
    const double t_near = -b / (2.0 * a);
    const double d2_min = oc.norm2() + t_near * (b + t_near * a);
    const double r_in = sphere.radius - 1e-12;
    if (d2_min >= r_in * r_in) return std::nullopt;
    const double sq = std::sqrt(std::max(b * b - 4.0 * a * c, 0.0));
    const double t0 = (-b - sq) / (2.0 * a);
    const double t1 = (-b + sq) / (2.0 * a);
    if (t0 > min_t) return t0;
    if (t1 > min_t) return t1;
    return std::nullopt;
}

bool segment_intersects_sphere(const Vec3& a, const Vec3& b, const Sphere& sphere) {
    const Vec3 ab = b - a;
    const double len2 = ab.norm2();
    double t = 0.0;
    if (len2 > 0.0) t = std::clamp((sphere.center - a).dot(ab) / len2, 0.0, 1.0);
    const Vec3 closest = a + ab * t;
    return distance(closest, sphere.center) < sphere.radius - 1e-12;
}

bool segment_hits_surfaces(const Vec3& a, const Vec3& b,
                           const std::vector<Surface>& surfaces, double eps) {
    const Vec3 d = b - a;
    const double len = d.norm();
    if (len <= 2.0 * eps) return false;
    const Vec3 dir = d / len;
    const RayHit hit = ray_hit(a + dir * eps, dir, surfaces, 1e-12);
    return hit.valid() && hit.t < len - 2.0 * eps;
}

Floorplan Floorplan::make_room(const Vec3& origin, const Vec3& size) {
    Floorplan fp;
    fp.origin = origin;
    fp.size = size;
    const Vec3 o = origin;
    const double dx = size.x, dy = size.y, dz = size.z;

    auto add = [&fp](Vec3 org, Vec3 au, Vec3 av, double eu, double ev, Vec3 n) {
        Surface s;
        s.id = static_cast<int>(fp.surfaces.size());
        s.origin = org;
        s.au = au;
        s.av = av;
        s.eu = eu;
        s.ev = ev;
        s.normal = n;
        fp.surfaces.push_back(s);
        fp.room_faces.push_back(s.id);
    };

    add(o, {1, 0, 0}, {0, 1, 0}, dx, dy, {0, 0, 1});                       // floor
    add({o.x, o.y, o.z + dz}, {1, 0, 0}, {0, 1, 0}, dx, dy, {0, 0, -1});   // ceiling
    add(o, {1, 0, 0}, {0, 0, 1}, dx, dz, {0, 1, 0});                       // wall y=0
    add({o.x, o.y + dy, o.z}, {1, 0, 0}, {0, 0, 1}, dx, dz, {0, -1, 0});   // wall y=max
    add(o, {0, 1, 0}, {0, 0, 1}, dy, dz, {1, 0, 0});                       // wall x=0
    add({o.x + dx, o.y, o.z}, {0, 1, 0}, {0, 0, 1}, dy, dz, {-1, 0, 0});   // wall x=max
    return fp;
}

std::pair<int, int> Floorplan::add_interior_wall(double x0, double y0, double x1, double y1,
                                                 double z0, double z1, bool coated) {
    const Vec3 a{x0, y0, z0};
    const Vec3 b{x1, y1, z0};
    const Vec3 run = b - a;
    const double len = run.norm();
    if (len <= 0.0 || z1 <= z0)
        throw std::invalid_argument("interior wall has zero extent");
    const Vec3 au = run / len;
    const Vec3 av{0, 0, 1};
    const Vec3 n = au.cross(av);

    Surface front;
    front.id = static_cast<int>(surfaces.size());
    front.origin = a;
    front.au = au;
    front.av = av;
    front.eu = len;
    front.ev = z1 - z0;
    front.normal = n;
    front.coated = coated;
    surfaces.push_back(front);

    Surface back = front;
    back.id = static_cast<int>(surfaces.size());
    back.origin = b;
    back.au = au * -1.0;
    back.normal = n * -1.0;
    surfaces.push_back(back);
    return {front.id, back.id};
}

Trajectory::Trajectory(std::vector<Vec3> waypoints) : points_(std::move(waypoints)) {
    if (points_.size() < 2)
        throw std::invalid_argument("trajectory needs at least two waypoints");
    cumulative_.resize(points_.size(), 0.0);
    for (std::size_t i = 1; i < points_.size(); ++i) {
        const double seg = distance(points_[i - 1], points_[i]);
        if (seg <= 0.0)
            throw std::invalid_argument("trajectory has coincident consecutive waypoints");
        cumulative_[i] = cumulative_[i - 1] + seg;
    }
}

std::size_t Trajectory::segment_index(double s) const {
    // Index of the segment [i, i+1] containing arc length s.
    const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), s);
    std::size_t i = static_cast<std::size_t>(it - cumulative_.begin());
    if (i == 0) return 0;
    if (i >= points_.size()) return points_.size() - 2;
    return i - 1;
}

Vec3 Trajectory::position_at(double s) const {
    if (points_.empty()) return {};
    if (s <= 0.0) return points_.front();
    if (s >= total_length()) return points_.back();
    const std::size_t i = segment_index(s);
    const double local = s - cumulative_[i];
    const Vec3 dir = (points_[i + 1] - points_[i]).normalized();
    return points_[i] + dir * local;
}

Vec3 Trajectory::tangent_at(double s) const {
    if (points_.size() < 2) return {};
    double clamped = std::clamp(s, 0.0, total_length());
    std::size_t i = segment_index(clamped);
    if (clamped >= total_length()) i = points_.size() - 2;
    return (points_[i + 1] - points_[i]).normalized();
}

double deviation_from_perpendicular(const Vec3& dir, const Vec3& tangent) {
    const double ang = rad_to_deg(angle_between(dir, tangent));
    return std::abs(90.0 - ang);
}

}  // namespace pwe
