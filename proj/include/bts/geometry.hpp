#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <span>
#include <vector>

namespace bts {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double k) const { return {x * k, y * k}; }
    double dot(Vec2 o) const { return x * o.x + y * o.y; }
    double cross(Vec2 o) const { return x * o.y - y * o.x; }
    double norm() const { return std::hypot(x, y); }
    bool operator==(const Vec2&) const = default;
};

struct Pose {
    double x = 0.0;
    double y = 0.0;
    double heading = 0.0; // radians, counter-clockwise from +x

    Vec2 position() const { return {x, y}; }
    bool operator==(const Pose&) const = default;
};

// Wraps to (-pi, pi].
inline double normalize_angle(double a) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    a = std::fmod(a, two_pi);
    if (a <= -std::numbers::pi) a += two_pi;
    if (a > std::numbers::pi) a -= two_pi;
    return a;
}

struct OrientedBox {
    Vec2 center;
    double heading = 0.0;
    double length = 4.5;
    double width = 2.0;

    std::array<Vec2, 4> corners() const;
    bool contains(Vec2 p) const;
};

// Separating-axis test over the two boxes' four edge normals. Touching counts as overlap.
bool boxes_overlap(const OrientedBox& a, const OrientedBox& b);

// Euclidean distance between the two rectangles; 0 when they overlap.
double box_distance(const OrientedBox& a, const OrientedBox& b);

double point_segment_distance(Vec2 p, Vec2 a, Vec2 b);

struct PolylineProjection {
    std::size_t segment = 0; // index of the first point of the nearest segment
    double t = 0.0;          // fraction along the segment
    double s = 0.0;          // arc length from the first point
    Vec2 point;
    double heading = 0.0;    // segment direction
    double lateral = 0.0;    // signed offset of the query point, left of the direction positive
    double distance = 0.0;
};

// Nearest point on a polyline with at least two points.
PolylineProjection project_onto_polyline(std::span<const Vec2> line, Vec2 p);

double polyline_length(std::span<const Vec2> line);

// Point and segment heading at arc length s, clamped to the polyline's ends.
Pose polyline_pose(std::span<const Vec2> line, double s);

} // namespace bts
