#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string_view>
#include <vector>

#include <boost/math/tools/roots.hpp>

#include "afdo/dynamics.hpp"
#include "afdo/geometry.hpp"
#include "afdo/integrator.hpp"
#include "afdo/melnikov.hpp"
#include "afdo/parallel.hpp"
#include "afdo/smf.hpp"
#include "afdo/types.hpp"

namespace afdo {

enum class ManifoldKind { unstable, stable };

inline constexpr std::string_view to_string(ManifoldKind k) { return k == ManifoldKind::unstable ? "unstable" : "stable"; }

/// Growth controls for one branch of a saddle manifold of the stroboscopic map.
struct ManifoldConfig {
    double theta = 0.0;          ///< section phase omega t
    double seed_distance = 1e-7; ///< distance of the fundamental segment from the saddle
    double max_gap = 1e-3;       ///< largest allowed distance between neighbouring nodes
    double saddle_scale = 0.1;   ///< within this distance of the saddle the gap limit shrinks proportionally
    double max_angle = 0.2;      ///< largest turning angle (rad) between neighbouring segments
    double min_segment = 1e-9;   ///< segments shorter than this are never split for curvature
    double max_length = 20.0;    ///< arclength budget
    double max_sigma = 8.0;      ///< budget in map iterates of the fundamental segment
    std::size_t max_points = 2'000'000;
    int max_passes = 60; ///< refinement passes per level
    unsigned workers = 0;
    IntegratorConfig integrator{};

    void validate() const
    {
        if (!(seed_distance > 0 && max_gap > 0 && saddle_scale > 0 && max_angle > 0 && min_segment >= 0 && max_length > 0 &&
              max_sigma > 0 && max_points >= 16 && max_passes > 0)) {
            throw std::invalid_argument("ManifoldConfig: budgets and tolerances must be positive");
        }
        integrator.validate();
    }
};

/// A computed manifold branch as a polyline from the saddle outward.
///
/// Node k is F^n(seed(s)) with sigma[k] = n + s, seed(s) = d0 lambda^s v and F
/// the forward map (unstable) or inverse map (stable). sigma is strictly
/// increasing, so sigma + j labels the j-th image of a point.
struct ManifoldCurve {
    ManifoldKind kind = ManifoldKind::unstable;
    Side branch = Side::right;
    double theta = 0.0;
    double multiplier = 0.0;  ///< expansion factor per step of F (> 1)
    PhaseState direction{};  ///< signed eigendirection pointing into the branch
    std::vector<double> sigma;
    Polyline points;
    std::vector<double> arclength;
    bool escaped = false;   ///< growth stopped because a node left the escape radius
    bool truncated = false; ///< growth stopped by the length or point budget

    std::size_t size() const { return points.size(); }
    double sigma_max() const { return sigma.empty() ? 0.0 : sigma.back(); }
    double length() const { return arclength.empty() ? 0.0 : arclength.back(); }

    /// Index k with sigma[k] <= s < sigma[k + 1].
    std::size_t segment_of(double s) const
    {
        const auto it = std::upper_bound(sigma.begin(), sigma.end(), s);
        const auto k = static_cast<std::size_t>(std::max<std::ptrdiff_t>(it - sigma.begin() - 1, 0));
        return std::min(k, sigma.size() - 2);
    }

    /// Linear interpolation on the polyline; nullopt outside [0, sigma_max].
    std::optional<PhaseState> at(double s) const
    {
        if (points.size() < 2 || s < sigma.front() || s > sigma.back()) return std::nullopt;
        const auto k = segment_of(s);
        const double w = (s - sigma[k]) / (sigma[k + 1] - sigma[k]);
        return points[k] + w * (points[k + 1] - points[k]);
    }

    /// Sub-polyline for parameters in [s0, s1]; the lower end is clipped at the
    /// first node. Nullopt when s1 exceeds the computed range.
    std::optional<Polyline> arc(double s0, double s1) const
    {
        if (points.size() < 2 || s1 > sigma.back() || s1 < s0) return std::nullopt;
        Polyline out;
        if (s1 <= sigma.front()) return out;
        s0 = std::max(s0, sigma.front());
        out.push_back(*at(s0));
        for (std::size_t k = segment_of(s0) + 1; k < sigma.size() && sigma[k] < s1; ++k) out.push_back(points[k]);
        out.push_back(*at(s1));
        return out;
    }

    /// Parameter of the point a fraction w along segment k.
    double sigma_on_segment(std::size_t k, double w) const { return sigma[k] + w * (sigma[k + 1] - sigma[k]); }
    double arclength_on_segment(std::size_t k, double w) const
    {
        return arclength[k] + w * (arclength[k + 1] - arclength[k]);
    }
};

namespace detail {

struct ManifoldSeed {
    double multiplier;
    PhaseState direction;
    double t_section;
    double direction_sign; ///< +1 forward map, -1 inverse map
};

inline ManifoldSeed manifold_seed(ManifoldKind kind, Side branch, const Params& p, const ManifoldConfig& cfg)
{
    const auto m = linearize_at_origin(p, cfg.integrator, cfg.theta);
    const double lam = kind == ManifoldKind::unstable ? m.unstable_multiplier : 1.0 / m.stable_multiplier;
    if (lam <= 0) throw DomainError("grow_manifold: negative saddle multiplier (orientation-reversing branch) is unsupported");
    const PhaseState v = kind == ManifoldKind::unstable ? m.unstable_direction : m.stable_direction;
    return {lam, sign_of(branch) * v, section_time(cfg.theta, p), kind == ManifoldKind::unstable ? 1.0 : -1.0};
}

} // namespace detail

/// Grows one branch of the unstable or stable manifold of the saddle at the
/// origin, level by level, refining by parameter bisection until node gaps and
/// turning angles are within tolerance. Growth stops at the sigma or length
/// budget, the point budget, or the first escaping node.
inline ManifoldCurve grow_manifold(ManifoldKind kind, Side branch, const Params& p, const ManifoldConfig& cfg = {})
{
    p.validate();
    cfg.validate();
    const auto seed = detail::manifold_seed(kind, branch, p, cfg);
    const double T = p.period();

    ManifoldCurve c;
    c.kind = kind;
    c.branch = branch;
    c.theta = cfg.theta;
    c.multiplier = seed.multiplier;
    c.direction = seed.direction;

    auto node_at = [&](double s) -> std::optional<PhaseState> {
        const double n = std::floor(s);
        const PhaseState x0 = (cfg.seed_distance * std::pow(seed.multiplier, s - n)) * seed.direction;
        try {
            return flow(x0, seed.t_section, seed.t_section + seed.direction_sign * n * T, p, cfg.integrator);
        } catch (const EscapeError&) {
            return std::nullopt;
        }
    };
    auto map_once = [&](PhaseState x) -> std::optional<PhaseState> {
        try {
            return flow(x, seed.t_section, seed.t_section + seed.direction_sign * T, p, cfg.integrator);
        } catch (const EscapeError&) {
            return std::nullopt;
        }
    };

    // Refines sg/pt in place; only segments starting at or after `first` may be split.
    // Returns false when a new node escaped (the level is then cut there).
    auto refine = [&](std::vector<double>& sg, Polyline& pt, std::size_t first) {
        for (int pass = 0; pass < cfg.max_passes; ++pass) {
            std::vector<char> split(pt.size(), 0);
            for (std::size_t i = first; i + 1 < pt.size(); ++i) {
                const double r = std::min(norm(pt[i]), norm(pt[i + 1]));
                const double gap = cfg.max_gap * std::clamp(r / cfg.saddle_scale, 1e-3, 1.0);
                if (distance(pt[i], pt[i + 1]) > gap) split[i] = 1;
            }
            for (std::size_t i = std::max<std::size_t>(first, 1); i + 1 < pt.size(); ++i) {
                const double l0 = distance(pt[i - 1], pt[i]);
                const double l1 = distance(pt[i], pt[i + 1]);
                if (std::max(l0, l1) > cfg.min_segment && turning_angle(pt[i - 1], pt[i], pt[i + 1]) > cfg.max_angle) {
                    if (i - 1 >= first) split[i - 1] = 1;
                    split[i] = 1;
                }
            }
            std::vector<double> mids;
            for (std::size_t i = 0; i + 1 < pt.size(); ++i) {
                const double m = 0.5 * (sg[i] + sg[i + 1]);
                if (split[i] && m > sg[i] && m < sg[i + 1]) mids.push_back(m);
            }
            if (mids.empty()) return true;
            if (pt.size() + mids.size() > cfg.max_points) {
                c.truncated = true;
                return true;
            }
            const auto fresh = parallel_map(mids.size(), [&](std::size_t k) { return node_at(mids[k]); }, cfg.workers);

            std::vector<double> sg2;
            Polyline pt2;
            sg2.reserve(sg.size() + mids.size());
            pt2.reserve(sg.size() + mids.size());
            std::size_t k = 0;
            for (std::size_t i = 0; i < pt.size(); ++i) {
                sg2.push_back(sg[i]);
                pt2.push_back(pt[i]);
                if (k < mids.size() && i + 1 < pt.size() && mids[k] > sg[i] && mids[k] < sg[i + 1]) {
                    if (!fresh[k]) {
                        sg = std::move(sg2);
                        pt = std::move(pt2);
                        c.escaped = true;
                        return false;
                    }
                    sg2.push_back(mids[k]);
                    pt2.push_back(*fresh[k]);
                    ++k;
                }
            }
            sg = std::move(sg2);
            pt = std::move(pt2);
        }
        return true;
    };

    // Fundamental segment.
    constexpr int n_seed = 16;
    for (int k = 0; k <= n_seed; ++k) {
        const double s = static_cast<double>(k) / n_seed;
        c.sigma.push_back(std::min(s, cfg.max_sigma));
        c.points.push_back((cfg.seed_distance * std::pow(seed.multiplier, c.sigma.back())) * seed.direction);
        if (s >= cfg.max_sigma) break;
    }
    refine(c.sigma, c.points, 0);
    double total = cumulative_length(c.points).back();

    for (int level = 1; !c.escaped && !c.truncated && level < cfg.max_sigma; ++level) {
        // Previous level: nodes with sigma in [level-1, level]; its image is the new level.
        const auto first_prev = static_cast<std::size_t>(
            std::lower_bound(c.sigma.begin(), c.sigma.end(), level - 1.0) - c.sigma.begin());
        std::vector<double> src_sigma;
        for (std::size_t i = first_prev + 1; i < c.sigma.size(); ++i) {
            if (c.sigma[i] + 1.0 > cfg.max_sigma) break;
            src_sigma.push_back(c.sigma[i]);
        }
        if (src_sigma.empty()) break;
        const auto mapped = parallel_map(
            src_sigma.size(), [&](std::size_t k) { return map_once(c.points[first_prev + 1 + k]); }, cfg.workers);

        // Context: the last two committed nodes; new nodes follow.
        std::vector<double> sg(c.sigma.end() - std::min<std::size_t>(2, c.sigma.size()), c.sigma.end());
        Polyline pt(c.points.end() - static_cast<std::ptrdiff_t>(sg.size()), c.points.end());
        const std::size_t context = sg.size();
        double run = 0;
        for (std::size_t k = 0; k < mapped.size(); ++k) {
            if (!mapped[k]) {
                c.escaped = true;
                break;
            }
            run += distance(pt.back(), *mapped[k]);
            sg.push_back(src_sigma[k] + 1.0);
            pt.push_back(*mapped[k]);
            if (total + run > cfg.max_length) break;
        }
        refine(sg, pt, context - 1);

        for (std::size_t i = context; i < pt.size(); ++i) {
            const double d = distance(c.points.back(), pt[i]);
            c.sigma.push_back(sg[i]);
            c.points.push_back(pt[i]);
            total += d;
            if (total > cfg.max_length || c.points.size() >= cfg.max_points) {
                c.truncated = true;
                break;
            }
        }
    }
    c.arclength = cumulative_length(c.points);
    return c;
}

/// A crossing between an unstable and a stable branch.
struct ManifoldCrossing {
    PhaseState point;
    double sigma_u;
    double sigma_s;
    double arc_u;
    double arc_s;
    double angle; ///< crossing angle in [0, pi/2]
};

inline std::vector<ManifoldCrossing> manifold_crossings(const ManifoldCurve& u, const ManifoldCurve& s)
{
    std::vector<ManifoldCrossing> out;
    for (const auto& h : polyline_crossings(u.points, s.points)) {
        out.push_back({h.hit.point, u.sigma_on_segment(h.seg_a, h.hit.t), s.sigma_on_segment(h.seg_b, h.hit.u),
                       u.arclength_on_segment(h.seg_a, h.hit.t), s.arclength_on_segment(h.seg_b, h.hit.u), h.hit.angle});
    }
    return out;
}

enum class PipLabel { p, q };

inline constexpr std::string_view to_string(PipLabel l) { return l == PipLabel::p ? "p" : "q"; }

/// Primary intersection point: the arcs of both branches between the saddle and
/// the point meet nowhere else. Label p starts a D lobe (the unstable branch
/// leaves the stable branch towards higher energy), q starts an E lobe.
struct Pip {
    ManifoldCrossing crossing;
    PipLabel label;
    bool near_tangent; ///< crossing angle below the tangency tolerance
};

inline constexpr double tangency_angle = 1e-3;

/// Primary intersection points of u and s ordered along u.
inline std::vector<Pip> find_pips(const ManifoldCurve& u, const ManifoldCurve& s)
{
    if (u.branch != s.branch || u.kind != ManifoldKind::unstable || s.kind != ManifoldKind::stable) {
        throw std::invalid_argument("find_pips: expects the unstable and stable branch of the same side");
    }
    auto all = manifold_crossings(u, s);
    std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) { return a.arc_u < b.arc_u; });
    std::vector<Pip> out;
    double best_s = std::numeric_limits<double>::infinity();
    for (const auto& c : all) {
        if (!(c.arc_s < best_s)) continue;
        best_s = c.arc_s;
        const auto ku = u.segment_of(c.sigma_u);
        const auto ks = s.segment_of(c.sigma_s);
        const PhaseState tu = u.points[ku + 1] - u.points[ku];
        const PhaseState ts = s.points[ks + 1] - s.points[ks];
        // Oriented away from the saddle, the stable branch keeps the loop interior on its left.
        const bool outward = cross(ts, tu) < 0;
        out.push_back({c, outward ? PipLabel::p : PipLabel::q, c.angle < tangency_angle});
    }
    return out;
}

enum class LobeKind { D, E };

inline constexpr std::string_view to_string(LobeKind k) { return k == LobeKind::D ? "D" : "E"; }

/// Region bounded by the unstable arc [u0, u1] and the stable arc [s0, s1]
/// between two successive PIPs. D lobes lie outside the stable branch (energy
/// gained), E lobes inside.
struct Lobe {
    LobeKind kind;
    Side side;
    int index;
    double u0, u1; ///< unstable-branch parameters of the bounding PIPs
    double s0, s1; ///< stable-branch parameters (s0 < s1)
    double area;
};

/// Apex time of the unperturbed loop point closest in shape to s, for section time t_s.
inline double apex_time_estimate(PhaseState s, double t_section)
{
    const double ax = std::min(std::abs(s.x), sqrt2);
    if (ax == 0.0) return t_section;
    const double u = -std::copysign(1.0, s.x) * std::copysign(1.0, s.y) * std::acosh(sqrt2 / ax);
    return t_section - u;
}

/// Bounds (a, b) of an interval, with a in [0, T), on which M_side > 0; nullopt
/// without simple zeros.
inline std::optional<std::pair<double, double>> positive_melnikov_interval(Side side, const Params& p)
{
    const auto z = melnikov_zeros(side, p);
    if (z.size() != 2) return std::nullopt;
    if (melnikov_derivative(z[0].t0, side, p) > 0) return std::pair{z[0].t0, z[1].t0};
    return std::pair{z[1].t0, z[0].t0 + p.period()};
}

/// Transition number of a secondary orbit that leaves the c loop at apex time
/// t0 and returns on the d loop at apex time t1, counted in lobe indices: the j
/// in E_j ∩ D_0 for c = d, or k in D^c_{k+1} ∩ E^d_0 for c != d.
inline std::optional<int> lobe_transition_number(double t0, double t1_value, PairCD q, const Params& p)
{
    const auto ic = positive_melnikov_interval(q.c, p);
    const auto id = positive_melnikov_interval(q.d, p);
    if (!ic || !id) return std::nullopt;
    const double T = p.period();
    if (q.same()) {
        const int i = static_cast<int>(std::floor((ic->first - t0) / T));
        const int n = static_cast<int>(std::floor((ic->second - t1_value) / T));
        return i - n;
    }
    const int i = static_cast<int>(std::floor((ic->second - t0) / T));
    const int n = static_cast<int>(std::floor((id->first - t1_value) / T));
    return i - n - 1;
}

/// Both branches of one side with their PIPs and lobes.
struct Tangle {
    Side side;
    ManifoldCurve unstable;
    ManifoldCurve stable;
    std::vector<Pip> pips;
    std::vector<Lobe> lobes;
    bool alternating = true; ///< PIP labels alternate p, q, p, ...
    std::optional<std::size_t> d0; ///< position of D_0 in lobes
    std::optional<std::size_t> e0; ///< position of E_0 in lobes

    /// Closed boundary of lobe L shifted by j map iterates: the unstable arc by +j,
    /// the stable arc by -j. Nullopt when an arc leaves the computed range.
    std::optional<std::pair<Polyline, Polyline>> lobe_arcs(const Lobe& L, int j = 0) const
    {
        auto ua = unstable.arc(L.u0 + j, L.u1 + j);
        auto sa = stable.arc(L.s0 - j, L.s1 - j);
        if (!ua || !sa) return std::nullopt;
        return std::pair{std::move(*ua), std::move(*sa)};
    }

    std::optional<Polyline> lobe_boundary(const Lobe& L, int j = 0) const
    {
        auto arcs = lobe_arcs(L, j);
        if (!arcs) return std::nullopt;
        Polyline poly = std::move(arcs->first);
        const auto& sa = arcs->second;
        poly.insert(poly.end(), sa.begin(), sa.end());
        return poly;
    }

    const Lobe* find(LobeKind kind, int index) const
    {
        for (const auto& L : lobes) {
            if (L.kind == kind && L.index == index) return &L;
        }
        return nullptr;
    }
};

/// Builds the lobe structure from the PIPs of u and s. D_0 is the D lobe whose
/// opening PIP has unperturbed apex time closest to the upper end of the
/// positive-Melnikov interval; indices grow by one per map iterate along u.
inline Tangle build_tangle(ManifoldCurve u, ManifoldCurve s, const Params& p)
{
    Tangle tg;
    tg.side = u.branch;
    tg.pips = find_pips(u, s);
    for (std::size_t k = 1; k < tg.pips.size(); ++k) {
        if (tg.pips[k].label == tg.pips[k - 1].label) tg.alternating = false;
    }
    const double t_section = section_time(u.theta, p);
    std::vector<Lobe> lobes;
    for (std::size_t k = 0; k + 1 < tg.pips.size(); ++k) {
        const auto& a = tg.pips[k];
        const auto& b = tg.pips[k + 1];
        Lobe L{a.label == PipLabel::p ? LobeKind::D : LobeKind::E, tg.side, 0, a.crossing.sigma_u,
               b.crossing.sigma_u, b.crossing.sigma_s, a.crossing.sigma_s, 0.0};
        lobes.push_back(L);
    }
    tg.unstable = std::move(u);
    tg.stable = std::move(s);
    for (auto& L : lobes) {
        if (auto poly = tg.lobe_boundary(L)) L.area = polygon_area(*poly);
    }

    const auto interval = positive_melnikov_interval(tg.side, p);
    if (interval && tg.alternating) {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < lobes.size(); ++k) {
            if (lobes[k].kind != LobeKind::D) continue;
            const double d = std::abs(apex_time_estimate(tg.pips[k].crossing.point, t_section) - interval->second);
            if (d < best) {
                best = d;
                tg.d0 = k;
            }
        }
    }
    if (tg.d0) {
        const auto k0 = static_cast<std::ptrdiff_t>(*tg.d0);
        for (std::size_t k = 0; k < lobes.size(); ++k) {
            const auto dk = static_cast<std::ptrdiff_t>(k) - k0;
            // D lobes sit at even offsets; E_i follows D_i.
            lobes[k].index = static_cast<int>(dk >= 0 ? dk / 2 : -((-dk + 1) / 2));
        }
        if (*tg.d0 + 1 < lobes.size()) tg.e0 = *tg.d0 + 1;
    }
    tg.lobes = std::move(lobes);
    return tg;
}

inline Tangle compute_tangle(Side side, const Params& p, const ManifoldConfig& cfg = {})
{
    auto u = grow_manifold(ManifoldKind::unstable, side, p, cfg);
    auto s = grow_manifold(ManifoldKind::stable, side, p, cfg);
    return build_tangle(std::move(u), std::move(s), p);
}

struct LobeIntersection {
    int count;         ///< boundary crossings away from shared corners
    bool near_tangent; ///< some crossing is below the tangency angle
};

/// Crossings between the boundaries of F^ja(A) (from tangle ta) and F^jb(B)
/// (from tangle tb). Only unstable-versus-stable arc pairs can cross; crossings
/// within corner_tol of an arc end are shared corners and are not counted.
inline std::optional<LobeIntersection> lobe_intersection(const Tangle& ta, const Lobe& A, int ja, const Tangle& tb,
                                                         const Lobe& B, int jb, double corner_tol = 1e-8)
{
    const auto a = ta.lobe_arcs(A, ja);
    const auto b = tb.lobe_arcs(B, jb);
    if (!a || !b) return std::nullopt;
    std::vector<PhaseState> corners;
    for (const Polyline* arc : {&a->first, &a->second, &b->first, &b->second}) {
        if (!arc->empty()) {
            corners.push_back(arc->front());
            corners.push_back(arc->back());
        }
    }
    LobeIntersection r{0, false};
    auto scan = [&](const Polyline& x, const Polyline& y) {
        for (const auto& h : polyline_crossings(x, y)) {
            const bool corner = std::any_of(corners.begin(), corners.end(),
                                            [&](PhaseState c) { return distance(c, h.hit.point) < corner_tol; });
            if (corner) continue;
            ++r.count;
            if (h.hit.angle < tangency_angle) r.near_tangent = true;
        }
    };
    scan(a->first, b->second);
    scan(a->second, b->first);
    return r;
}

/// Whether the lobes E^c_j and D^c_0 (c = d) or D^c_{k+1} and E^d_0 (c != d)
/// intersect, with the map iterates split between both lobes to keep arcs short.
/// Nullopt when the needed lobes or arcs are not available.
inline std::optional<LobeIntersection> structural_pair_intersection(const Tangle& tc, const Tangle& td, PairCD q, int j)
{
    if (!tc.d0 || !td.d0) return std::nullopt;
    const Lobe* A = nullptr;
    const Lobe* B = nullptr;
    int shift = 0;
    if (q.same()) {
        A = tc.find(LobeKind::E, 0);
        B = tc.find(LobeKind::D, 0);
        shift = j;
    } else {
        A = tc.find(LobeKind::D, 0);
        B = td.find(LobeKind::E, 0);
        shift = j + 1;
    }
    if (!A || !B) return std::nullopt;
    // F^shift(A) ∩ B  ~  F^(shift - m)(A) ∩ F^(-m)(B)
    const int m = shift / 2;
    return lobe_intersection(tc, *A, shift - m, td, *B, -m);
}

struct MeasuredIndex {
    std::optional<int> value; ///< nullopt: undecided within the cap or budget
    bool near_tangent = false;
};

/// Smallest transition number whose lobes intersect, searched up to cap.
inline MeasuredIndex measure_structural_index(const Tangle& tc, const Tangle& td, PairCD q, int cap)
{
    MeasuredIndex out;
    for (int j = 0; j <= cap; ++j) {
        const auto r = structural_pair_intersection(tc, td, q, j);
        if (!r) return out;
        if (r->count > 0) {
            out.value = j;
            out.near_tangent = r->near_tangent;
            return out;
        }
    }
    return out;
}

/// Manifold points on the apex line y = 0 at section time t0, reached by shooting
/// from the linearized branches n_periods forcing periods away.
struct Splitting {
    PhaseState unstable_point;
    PhaseState stable_point;
    double energy_gap; ///< H(unstable) - H(stable)
};

inline Splitting measure_splitting(Side side, double t0, const Params& p, const IntegratorConfig& cfg = {},
                                   double approach_time = 20.0)
{
    p.validate();
    const double T = p.period();
    const int n = std::max(1, static_cast<int>(std::ceil(approach_time / T)));
    const auto mono = linearize_at_origin(p, cfg, std::fmod(p.omega * t0, 2.0 * pi));
    const double sgn = sign_of(side);

    auto shoot = [&](PhaseState v, double t_start, double guess) {
        auto g = [&](double log_sigma) {
            const PhaseState x0 = (sgn * std::exp(log_sigma)) * v;
            return flow(x0, t_start, t0, p, cfg).y;
        };
        double lo = std::log(guess) - 1.5;
        double hi = std::log(guess) + 1.5;
        double glo = g(lo);
        double ghi = g(hi);
        for (int k = 0; k < 8 && glo * ghi > 0; ++k) {
            lo -= 0.5;
            hi += 0.5;
            glo = g(lo);
            ghi = g(hi);
        }
        if (glo * ghi > 0) throw ConvergenceError("measure_splitting: could not bracket the apex crossing", t0, p.epsilon);
        std::uintmax_t iters = 200;
        const auto r = boost::math::tools::toms748_solve(g, lo, hi, glo, ghi,
                                                         boost::math::tools::eps_tolerance<double>(50), iters);
        const double ls = 0.5 * (r.first + r.second);
        return flow((sgn * std::exp(ls)) * v, t_start, t0, p, cfg);
    };
    const PhaseState xu = shoot(mono.unstable_direction, t0 - n * T, 4.0 * std::exp(-n * T));
    const PhaseState xs = shoot(mono.stable_direction, t0 + n * T, 4.0 * std::exp(-n * T));
    return {xu, xs, hamiltonian(xu) - hamiltonian(xs)};
}

} // namespace afdo
