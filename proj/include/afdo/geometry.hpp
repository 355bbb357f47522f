#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <unordered_map>
#include <vector>

#include "afdo/types.hpp"

namespace afdo {

using Polyline = std::vector<PhaseState>;

/// Shoelace area of a closed polygon (last vertex joins the first); positive when counter-clockwise.
inline double signed_area(const Polyline& poly)
{
    double a = 0;
    for (std::size_t i = 0, n = poly.size(); i < n; ++i) {
        const auto& p = poly[i];
        const auto& q = poly[(i + 1) % n];
        a += p.x * q.y - q.x * p.y;
    }
    return 0.5 * a;
}

inline double polygon_area(const Polyline& poly) { return std::abs(signed_area(poly)); }

inline std::vector<double> cumulative_length(const Polyline& pts)
{
    std::vector<double> s(pts.size(), 0.0);
    for (std::size_t i = 1; i < pts.size(); ++i) s[i] = s[i - 1] + distance(pts[i - 1], pts[i]);
    return s;
}

/// Turning angle at b between segments a->b and b->c, in [0, pi].
inline double turning_angle(PhaseState a, PhaseState b, PhaseState c)
{
    const PhaseState u = b - a;
    const PhaseState v = c - b;
    return std::atan2(std::abs(cross(u, v)), dot(u, v));
}

struct SegmentHit {
    double t; ///< parameter on the first segment, in [0, 1)
    double u; ///< parameter on the second segment, in [0, 1)
    PhaseState point;
    double angle; ///< crossing angle in [0, pi/2]
};

/// Proper crossing of [a0, a1) and [b0, b1); the half-open convention counts a
/// crossing at a shared polyline vertex exactly once.
inline std::optional<SegmentHit> intersect_segments(PhaseState a0, PhaseState a1, PhaseState b0, PhaseState b1)
{
    const PhaseState r = a1 - a0;
    const PhaseState s = b1 - b0;
    const double den = cross(r, s);
    if (den == 0.0) return std::nullopt;
    const PhaseState w = b0 - a0;
    const double t = cross(w, s) / den;
    const double u = cross(w, r) / den;
    if (t < 0.0 || t >= 1.0 || u < 0.0 || u >= 1.0) return std::nullopt;
    const double ang = std::atan2(std::abs(den), std::abs(dot(r, s)));
    return SegmentHit{t, u, a0 + t * r, ang};
}

/// Uniform-grid index of the segments of a polyline for fast crossing queries.
class SegmentGrid {
public:
    SegmentGrid(const Polyline& pts, double cell) : pts_(pts), cell_(cell)
    {
        for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
            for_cells(pts[i], pts[i + 1], [&](std::int64_t key) { cells_[key].push_back(static_cast<std::uint32_t>(i)); });
        }
    }

    /// Segment indices whose cells overlap the bounding box of [a, b], sorted and unique.
    std::vector<std::uint32_t> candidates(PhaseState a, PhaseState b) const
    {
        std::vector<std::uint32_t> out;
        for_cells(a, b, [&](std::int64_t key) {
            const auto it = cells_.find(key);
            if (it != cells_.end()) out.insert(out.end(), it->second.begin(), it->second.end());
        });
        std::sort(out.begin(), out.end());
        out.erase(std::unique(out.begin(), out.end()), out.end());
        return out;
    }

    const Polyline& points() const { return pts_; }

private:
    template <class F>
    void for_cells(PhaseState a, PhaseState b, F&& f) const
    {
        const auto i0 = static_cast<std::int64_t>(std::floor(std::min(a.x, b.x) / cell_));
        const auto i1 = static_cast<std::int64_t>(std::floor(std::max(a.x, b.x) / cell_));
        const auto j0 = static_cast<std::int64_t>(std::floor(std::min(a.y, b.y) / cell_));
        const auto j1 = static_cast<std::int64_t>(std::floor(std::max(a.y, b.y) / cell_));
        for (auto i = i0; i <= i1; ++i) {
            for (auto j = j0; j <= j1; ++j) f(i * 2654435761LL + j);
        }
    }

    const Polyline& pts_;
    double cell_;
    std::unordered_map<std::int64_t, std::vector<std::uint32_t>> cells_;
};

struct PolylineHit {
    std::size_t seg_a; ///< segment index on the first polyline
    std::size_t seg_b;
    SegmentHit hit;
};

/// All proper crossings between two polylines, ordered along the first one.
inline std::vector<PolylineHit> polyline_crossings(const Polyline& a, const Polyline& b, double cell = 0.0)
{
    std::vector<PolylineHit> out;
    if (a.size() < 2 || b.size() < 2) return out;
    if (!(cell > 0)) {
        double total = 0;
        for (std::size_t i = 0; i + 1 < b.size(); ++i) total += distance(b[i], b[i + 1]);
        cell = std::max(4.0 * total / static_cast<double>(b.size() - 1), 1e-9);
    }
    const SegmentGrid grid(b, cell);
    for (std::size_t i = 0; i + 1 < a.size(); ++i) {
        std::vector<PolylineHit> local;
        for (auto j : grid.candidates(a[i], a[i + 1])) {
            if (auto h = intersect_segments(a[i], a[i + 1], b[j], b[j + 1])) local.push_back({i, j, *h});
        }
        std::sort(local.begin(), local.end(), [](const auto& x, const auto& y) { return x.hit.t < y.hit.t; });
        out.insert(out.end(), local.begin(), local.end());
    }
    return out;
}

} // namespace afdo
