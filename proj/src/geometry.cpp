#include "bts/geometry.hpp"

#include <algorithm>
#include <limits>

namespace bts {

std::array<Vec2, 4> OrientedBox::corners() const {
    Vec2 f{std::cos(heading), std::sin(heading)};
    Vec2 l{-f.y, f.x};
    Vec2 hf = f * (length / 2.0);
    Vec2 hl = l * (width / 2.0);
    return {center + hf + hl, center - hf + hl, center - hf - hl, center + hf - hl};
}

bool OrientedBox::contains(Vec2 p) const {
    Vec2 d = p - center;
    Vec2 f{std::cos(heading), std::sin(heading)};
    Vec2 l{-f.y, f.x};
    return std::abs(d.dot(f)) <= length / 2.0 && std::abs(d.dot(l)) <= width / 2.0;
}

bool boxes_overlap(const OrientedBox& a, const OrientedBox& b) {
    const auto ca = a.corners();
    const auto cb = b.corners();
    const std::array<Vec2, 4> axes = {
        Vec2{std::cos(a.heading), std::sin(a.heading)},
        Vec2{-std::sin(a.heading), std::cos(a.heading)},
        Vec2{std::cos(b.heading), std::sin(b.heading)},
        Vec2{-std::sin(b.heading), std::cos(b.heading)},
    };
    for (const Vec2& axis : axes) {
        double amin = std::numeric_limits<double>::infinity(), amax = -amin;
        double bmin = amin, bmax = -amin;
        for (const Vec2& c : ca) {
            double p = c.dot(axis);
            amin = std::min(amin, p);
            amax = std::max(amax, p);
        }
        for (const Vec2& c : cb) {
            double p = c.dot(axis);
            bmin = std::min(bmin, p);
            bmax = std::max(bmax, p);
        }
        if (amax < bmin || bmax < amin) return false;
    }
    return true;
}

double point_segment_distance(Vec2 p, Vec2 a, Vec2 b) {
    Vec2 ab = b - a;
    double len2 = ab.dot(ab);
    double t = len2 > 0.0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
    return (p - (a + ab * t)).norm();
}

double box_distance(const OrientedBox& a, const OrientedBox& b) {
    if (boxes_overlap(a, b)) return 0.0;
    // Separated convex polygons: the minimum is attained between a vertex and an edge.
    const auto ca = a.corners();
    const auto cb = b.corners();
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < 4; ++i) {
        for (std::size_t j = 0; j < 4; ++j) {
            best = std::min(best, point_segment_distance(ca[i], cb[j], cb[(j + 1) % 4]));
            best = std::min(best, point_segment_distance(cb[i], ca[j], ca[(j + 1) % 4]));
        }
    }
    return best;
}

PolylineProjection project_onto_polyline(std::span<const Vec2> line, Vec2 p) {
    PolylineProjection best;
    best.distance = std::numeric_limits<double>::infinity();
    double s_acc = 0.0;
    for (std::size_t i = 0; i + 1 < line.size(); ++i) {
        Vec2 a = line[i];
        Vec2 ab = line[i + 1] - a;
        double len = ab.norm();
        double t = len > 0.0 ? std::clamp((p - a).dot(ab) / (len * len), 0.0, 1.0) : 0.0;
        Vec2 q = a + ab * t;
        double d = (p - q).norm();
        if (d < best.distance) {
            best.segment = i;
            best.t = t;
            best.s = s_acc + t * len;
            best.point = q;
            best.heading = std::atan2(ab.y, ab.x);
            best.distance = d;
            Vec2 dir = len > 0.0 ? ab * (1.0 / len) : Vec2{1.0, 0.0};
            best.lateral = dir.cross(p - a);
        }
        s_acc += len;
    }
    return best;
}

double polyline_length(std::span<const Vec2> line) {
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < line.size(); ++i) total += (line[i + 1] - line[i]).norm();
    return total;
}

Pose polyline_pose(std::span<const Vec2> line, double s) {
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < line.size(); ++i) {
        Vec2 d = line[i + 1] - line[i];
        double len = d.norm();
        if (s <= acc + len || i + 2 == line.size()) {
            double t = len > 0.0 ? std::clamp((s - acc) / len, 0.0, 1.0) : 0.0;
            Vec2 p = line[i] + d * t;
            return {p.x, p.y, std::atan2(d.y, d.x)};
        }
        acc += len;
    }
    return {line.front().x, line.front().y, 0.0};
}

} // namespace bts
