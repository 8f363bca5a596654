// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "pwe/vec3.hpp"

namespace pwe {

inline constexpr double SPEED_OF_LIGHT = 299792458.0;
inline constexpr double PI = 3.14159265358979323846;

inline constexpr double deg_to_rad(double d) { return d * PI / 180.0; }
inline constexpr double rad_to_deg(double r) { return r * 180.0 / PI; }

/// Mirror reflection of direction d about unit plane normal n.
inline Vec3 specular_reflect(const Vec3& d, const Vec3& n) {
    return d - n * (2.0 * d.dot(n));
}

struct Sphere {
    Vec3 center;
    double radius = 0.0;
};

/// Planar rectangle with an orthonormal in-plane frame (au, av) and
/// outward normal. Extents eu, ev are in meters along au and av.
struct Surface {
    int id = -1;
    Vec3 origin;
    Vec3 au, av;
    double eu = 0.0, ev = 0.0;
    Vec3 normal;
    bool coated = false;

    Vec3 point_at(double s, double t) const { return origin + au * s + av * t; }

    /// In-plane coordinates of an arbitrary point (projection).
    void local_coords(const Vec3& p, double& s, double& t) const {
        const Vec3 d = p - origin;
        s = d.dot(au);
        t = d.dot(av);
    }

    bool contains(const Vec3& p, double tol = 1e-9) const {
        if (std::abs((p - origin).dot(normal)) > tol) return false;
        double s, t;
        local_coords(p, s, t);
        return s >= -tol && s <= eu + tol && t >= -tol && t <= ev + tol;
    }

    Vec3 center() const { return point_at(eu * 0.5, ev * 0.5); }
};

struct RayHit {
    int surface = -1;
    double t = std::numeric_limits<double>::infinity();
    Vec3 point;

    bool valid() const { return surface >= 0; }
};

/// Nearest intersection of a ray with a set of rectangles. Hits with
/// parameter <= min_t are ignored so a ray can leave its own surface.
/// Coincident hits prefer the surface facing the ray, then lower id.
RayHit ray_hit(const Vec3& origin, const Vec3& dir,
               const std::vector<Surface>& surfaces, double min_t = 1e-9);

/// Smallest positive ray parameter at which the ray enters the sphere,
/// or nullopt when the ray misses it.
std::optional<double> ray_hit_sphere(const Vec3& origin, const Vec3& dir,
                                     const Sphere& sphere, double min_t = 1e-9);

/// True when the open segment (a, b) passes through the sphere interior.
bool segment_intersects_sphere(const Vec3& a, const Vec3& b, const Sphere& sphere);

/// True when the segment from a to b, shrunk by eps at both ends, crosses
/// any of the given rectangles.
bool segment_hits_surfaces(const Vec3& a, const Vec3& b,
                           const std::vector<Surface>& surfaces, double eps = 1e-6);

/// Axis-aligned room with optional interior walls. Surfaces face into
/// the interior; an interior wall contributes two coincident rectangles
/// with opposite normals.
struct Floorplan {
    Vec3 origin;
    Vec3 size;
    std::vector<Surface> surfaces;

    /// Indices into `surfaces` for the room faces, in the order
    /// floor, ceiling, y=0 wall, y=max wall, x=0 wall, x=max wall.
    std::vector<int> room_faces;

    static Floorplan make_room(const Vec3& origin, const Vec3& size);

    /// Adds a vertical interior wall spanning (x0,y0)..(x1,y1) between
    /// heights z0 and z1. Returns the indices of the two new surfaces.
    std::pair<int, int> add_interior_wall(double x0, double y0, double x1, double y1,
                                          double z0, double z1, bool coated);

    bool inside(const Vec3& p, double tol = 1e-9) const {
        return p.x >= origin.x - tol && p.x <= origin.x + size.x + tol &&
               p.y >= origin.y - tol && p.y <= origin.y + size.y + tol &&
               p.z >= origin.z - tol && p.z <= origin.z + size.z + tol;
    }
};

/// Piecewise linear path through space, parameterized by arc length.
class Trajectory {
public:
    Trajectory() = default;
    explicit Trajectory(std::vector<Vec3> waypoints);

    bool empty() const { return points_.size() < 2; }
    double total_length() const { return cumulative_.empty() ? 0.0 : cumulative_.back(); }
    const std::vector<Vec3>& waypoints() const { return points_; }

    /// Position at arc length s, clamped to the path ends.
    Vec3 position_at(double s) const;

    /// Unit tangent of the segment containing arc length s.
    Vec3 tangent_at(double s) const;

private:
    std::vector<Vec3> points_;
    std::vector<double> cumulative_;
    std::size_t segment_index(double s) const;
};

/// Absolute deviation of a direction from the plane perpendicular to a
/// tangent, in degrees. Zero means the direction is exactly broadside.
double deviation_from_perpendicular(const Vec3& dir, const Vec3& tangent);

}  // namespace pwe
