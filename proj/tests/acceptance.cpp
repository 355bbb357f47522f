// Acceptance checks: one PASS/FAIL line per criterion. Usage: acceptance [k ...]

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "afdo/afdo.hpp"

using namespace afdo;

namespace {

struct Outcome {
    bool pass;
    std::string detail;
};

std::string fmt(const char* f, auto... args)
{
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

// 1. Splitting of the left loop divided by epsilon converges to M_l at first order.
Outcome melnikov_vs_geometry()
{
    const std::vector<double> eps{0.04, 0.02, 0.01};
    std::vector<double> err;
    for (double e : eps) {
        const Params p{e, 0.3, 1.0, 1.0, 0.1};
        double worst = 0;
        for (int k = 0; k < 16; ++k) {
            const double t0 = k * p.period() / 16;
            const auto sp = measure_splitting(Side::left, t0, p);
            worst = std::max(worst, std::abs(sp.energy_gap / e - melnikov(t0, Side::left, p)));
        }
        err.push_back(worst);
    }
    const double r1 = err[0] / err[1];
    const double r2 = err[1] / err[2];
    return {r1 >= 1.7 && r2 >= 1.7,
            fmt("sup errors %.3e, %.3e, %.3e; halving ratios %.3f, %.3f (need >= 1.7)", err[0], err[1], err[2], r1, r2)};
}

// 2. Onset of primary intersections located by bisection on gamma/delta.
Outcome primary_tangency()
{
    const auto th = primary_thresholds(1.0, 0.1);
    ManifoldConfig cfg;
    cfg.max_length = 7;
    cfg.max_sigma = 5;
    bool ok = true;
    std::string detail;
    for (Side side : {Side::left, Side::right}) {
        const double r0 = side == Side::left ? th.r0_minus : th.r0_plus;
        auto has_pips = [&](double ratio) {
            const Params p{0.05, 1.0, ratio, 1.0, 0.1};
            return !compute_tangle(side, p, cfg).pips.empty();
        };
        double lo = 0.7 * r0, hi = 1.3 * r0;
        const bool bracketed = !has_pips(lo) && has_pips(hi);
        for (int k = 0; k < 10 && bracketed; ++k) {
            const double mid = 0.5 * (lo + hi);
            (has_pips(mid) ? hi : lo) = mid;
        }
        const double found = 0.5 * (lo + hi);
        const double rel = found / r0 - 1;
        ok = ok && bracketed && std::abs(rel) <= 0.1;
        detail += fmt("%s: gamma/delta %.5f vs threshold %.5f (rel %+.4f)%s; ", std::string(to_string(side)).c_str(), found,
                      r0, rel, bracketed ? "" : " NOT BRACKETED");
    }
    return {ok, detail};
}

// 3. Lobe intersection D^l_2 ∩ E^r_0 appears between 0.9 and 1.1 times the SMF value.
Outcome secondary_agreement()
{
    const PairCD q{Side::left, Side::right};
    ManifoldConfig cfg;
    cfg.max_length = 8;
    cfg.max_sigma = 12;
    bool ok = true;
    std::string detail;
    for (double w : {1.8, 2.0, 2.2}) {
        const Params shape{0.0, 0.05, 1.0, w, 0.0};
        const auto bs = secondary_bifurcations(q, 1, shape);
        if (bs.empty() || bs[0].epsilon > 0.3) {
            ok = false;
            detail += fmt("omega %.2f: no SMF point with eps <= 0.3; ", w);
            continue;
        }
        const double es = bs[0].epsilon;
        auto state = [&](double e) -> std::optional<bool> {
            const Params p = shape.with_epsilon(e);
            const auto tl = compute_tangle(Side::left, p, cfg);
            const auto tr = compute_tangle(Side::right, p, cfg);
            const auto r = structural_pair_intersection(tl, tr, q, 1);
            if (!r) return std::nullopt;
            return r->count > 0;
        };
        const auto below = state(0.9 * es);
        const auto above = state(1.1 * es);
        const bool bracket = below && above && !*below && *above;
        double geo = std::nan("");
        if (bracket) {
            double lo = 0.9 * es, hi = 1.1 * es;
            for (int k = 0; k < 6; ++k) {
                const double mid = 0.5 * (lo + hi);
                const auto s = state(mid);
                if (!s) break;
                (*s ? hi : lo) = mid;
            }
            geo = 0.5 * (lo + hi);
        }
        ok = ok && bracket;
        detail += fmt("omega %.2f: SMF eps %.5f, geometric onset %.5f (%+.2f%%)%s; ", w, es, geo, 100 * (geo / es - 1),
                      bracket ? "" : " NOT BRACKETED");
    }
    return {ok, detail};
}

// 4. Liouville identities for the monodromy, the Poincare Jacobian and the exponent sum.
Outcome liouville()
{
    const Params p{0.3, 0.5, 1.0, 1.2, 0.1};
    const double expected = std::exp(-p.epsilon * p.delta * p.period());
    IntegratorConfig tight;
    tight.rel_tol = 1e-13;
    tight.abs_tol = 1e-15;
    const double det_err = std::abs(linearize_at_origin(p, tight).determinant() - expected);

    std::mt19937_64 rng(20240601);
    std::uniform_real_distribution<double> u(-1.5, 1.5);
    double fd_err = 0;
    const double h = 1e-6;
    for (int k = 0; k < 50; ++k) {
        const PhaseState s{u(rng), u(rng)};
        auto F = [&](PhaseState x) { return poincare_step(x, 0.0, p, tight); };
        const PhaseState dx = (1 / (2 * h)) * (F({s.x + h, s.y}) - F({s.x - h, s.y}));
        const PhaseState dy = (1 / (2 * h)) * (F({s.x, s.y + h}) - F({s.x, s.y - h}));
        fd_err = std::max(fd_err, std::abs(dx.x * dy.y - dy.x * dx.y - expected));
    }

    const Params pl{0.3, 0.05, 1.0, 1.2, 0.0};
    const auto rep = lyapunov_run({0.1, 0.1}, pl, {}, {});
    const double sum_err = std::abs(rep.exponent_sum() - expected_exponent_sum(pl));
    const bool ok = det_err <= 1e-10 && fd_err <= 1e-5 && sum_err <= 1e-2;
    return {ok, fmt("|det M - e^(-eps delta T)| = %.2e (<= 1e-10); max FD det error over 50 states %.2e (<= 1e-5); "
                    "exponent-sum error %.2e (<= 1e-2, verdict %s)",
                    det_err, fd_err, sum_err, std::string(to_string(rep.verdict)).c_str())};
}

// 5. Period asymptotics near the separatrix.
Outcome period_asymptotics()
{
    const double H = 1e-4;
    const double pin = period(-H, EnergyBranch::inner_right);
    const double pout = period(H, EnergyBranch::outer);
    const double ein = std::abs(pin / std::log(16 / H) - 1);
    const double eout = std::abs(pout / (2 * std::log(16 / H)) - 1);
    const double ratio = pout / pin;
    const bool ok = ein <= 0.01 && eout <= 0.01 && std::abs(ratio / 2 - 1) <= 0.02;
    return {ok, fmt("inner P=%.6f rel err %.2e; outer P=%.6f rel err %.2e; ratio %.5f", pin, ein, pout, eout, ratio)};
}

// 6. Every converged secondary bifurcation lies strictly above the lower bound.
Outcome lower_bound_dominance()
{
    int converged = 0, violations = 0, combos = 0;
    for (auto q : all_pairs) {
        for (int ell : {0, 1}) {
            for (double w : {0.8, 1.2, 1.6, 2.0, 2.4}) {
                ++combos;
                const Params p{0.0, 0.05, 1.0, w, 0.1};
                const double lb = lower_bound_epsilon(q, ell, p);
                for (const auto& b : secondary_bifurcations(q, ell, p)) {
                    ++converged;
                    if (!(b.epsilon > lb)) ++violations;
                }
            }
        }
    }
    return {violations == 0 && converged > 0,
            fmt("%d sweep points, %d converged bifurcations, %d at or below the bound", combos, converged, violations)};
}

// 7. Geometric lobe area against the flux formula.
Outcome flux()
{
    const Params p{0.01, 0.3, 1.0, 1.0, 0.1};
    const auto region = classify_region(p).region;
    ManifoldConfig cfg;
    cfg.max_length = 8;
    cfg.max_sigma = 5;
    bool ok = region == Region::III;
    std::string detail = fmt("region %s; ", to_string(region));
    for (Side side : {Side::left, Side::right}) {
        const auto tg = compute_tangle(side, p, cfg);
        const Lobe* d0 = tg.find(LobeKind::D, 0);
        const double predicted = p.epsilon * flux_out(side, p);
        if (!d0) {
            ok = false;
            detail += fmt("%s: D_0 not found; ", std::string(to_string(side)).c_str());
            continue;
        }
        const double rel = d0->area / predicted - 1;
        ok = ok && std::abs(rel) <= 0.05;
        detail += fmt("%s: area %.6f vs eps*flux %.6f (%+.2f%%); ", std::string(to_string(side)).c_str(), d0->area,
                      predicted, 100 * rel);
    }
    return {ok, detail};
}

// 8. Strange attractors along the first lr (l = 0) curve.
Outcome sa_window()
{
    const Params shape{0.0, 0.05, 1.0, 1.0, 0.0};
    const auto omegas = linspace(0.8, 1.7, 91);
    const auto curve = bifurcation_curve({Side::left, Side::right}, 0, 1, omegas, shape);
    const auto ref = bifurcation_curve({Side::left, Side::left}, 1, 2, omegas, shape);
    struct Task {
        double w, e;
        PhaseState s0;
    };
    std::vector<Task> tasks;
    for (const auto& pt : curve.points) {
        for (PhaseState s0 : {PhaseState{0.1, 0.1}, PhaseState{-0.5, 0.3}}) tasks.push_back({pt.omega, pt.point.epsilon, s0});
    }
    const auto reps = parallel_map(tasks.size(), [&](std::size_t k) {
        Params p = shape;
        p.omega = tasks[k].w;
        p.epsilon = tasks[k].e;
        return lyapunov_run(tasks[k].s0, p);
    });
    int n_sa = 0, in_window = 0, below_ref = 0, no_ref = 0;
    double lmin = INFINITY, lmax = -INFINITY, dmin = INFINITY, dmax = -INFINITY;
    for (std::size_t k = 0; k < tasks.size(); ++k) {
        const auto& r = reps[k];
        if (r.verdict != Verdict::strange_attractor) continue;
        ++n_sa;
        const double l1 = r.exponents[0];
        const double d = r.dimension.value_or(NAN);
        lmin = std::min(lmin, l1);
        lmax = std::max(lmax, l1);
        dmin = std::min(dmin, d);
        dmax = std::max(dmax, d);
        if (l1 >= 0.15 && l1 <= 0.25 && d > 1.7 && d < 2.0) ++in_window;
        std::optional<double> re;
        for (const auto& q : ref.points) {
            if (q.omega == tasks[k].w) re = q.point.epsilon;
        }
        if (!re) ++no_ref;
        else if (!(tasks[k].e > *re)) ++below_ref;
    }
    const bool ok = in_window > 0 && below_ref == 0;
    return {ok, fmt("%zu runs on %zu curve points; %d strange attractors, lambda1 in [%.3f, %.3f] log2/iterate, "
                    "D_L in [%.3f, %.3f]; %d inside the lambda1/D_L window; %d below the reference curve, %d without reference",
                    tasks.size(), curve.points.size(), n_sa, lmin, lmax, dmin, dmax, in_window, below_ref, no_ref)};
}

// 9. Basin symmetry, region-I asymmetry and grid-offset reproducibility.
Outcome basins()
{
    GridSpec g;
    const auto sym = basin_map(g, Params{0.5, 0.3, 0.0, 1.0, 0.1}).fractions();
    const double n = static_cast<double>(g.nx) * g.ny;
    const bool sym_ok = std::abs(sym.left - sym.right) <= 2 / std::sqrt(n);
    std::string detail = fmt("gamma=0: left %.4f right %.4f; ", sym.left, sym.right);

    GridSpec g2 = g;
    g2.offset_x = 0.37;
    g2.offset_y = -0.29;
    bool trend_ok = true, repro_ok = true;
    for (double e : {0.1, 0.3, 0.5}) {
        const Params p{e, 1.5, 1.0, 1.0, 0.1};
        const auto a = basin_map(g, p).fractions();
        const auto b = basin_map(g2, p).fractions();
        trend_ok = trend_ok && a.right > a.left && b.right > b.left;
        repro_ok = repro_ok && std::abs(a.left - b.left) <= 0.03 && std::abs(a.right - b.right) <= 0.03;
        detail += fmt("eps %.1f: L/R %.4f/%.4f, offset grid %.4f/%.4f; ", e, a.left, a.right, b.left, b.right);
    }
    detail += fmt("symmetric %s, right>left %s, offsets within 0.03 %s", sym_ok ? "yes" : "no", trend_ok ? "yes" : "no",
                  repro_ok ? "yes" : "no");
    return {sym_ok && trend_ok && repro_ok, detail};
}

// 10. Kaplan-Yorke spot check.
Outcome kaplan_yorke()
{
    const double d = lyapunov_dimension({0.1987, -0.2199});
    return {std::abs(d - 1.9036) <= 1e-3, fmt("D_L = %.6f", d)};
}

} // namespace

int main(int argc, char** argv)
{
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
        {"Melnikov-vs-geometry convergence", melnikov_vs_geometry},
        {"Primary tangency location", primary_tangency},
        {"Secondary bifurcation agreement", secondary_agreement},
        {"Liouville identities", liouville},
        {"Period asymptotics", period_asymptotics},
        {"Lower-bound dominance", lower_bound_dominance},
        {"Flux formula", flux},
        {"SA window reproduction", sa_window},
        {"Basin symmetry and trend", basins},
        {"Kaplan-Yorke spot check", kaplan_yorke},
    };
    std::vector<int> which;
    for (int i = 1; i < argc; ++i) which.push_back(std::atoi(argv[i]));
    if (which.empty()) {
        for (int k = 1; k <= 10; ++k) which.push_back(k);
    }
    bool all = true;
    for (int k : which) {
        if (k < 1 || k > 10) {
            std::fprintf(stderr, "criterion must be 1..10\n");
            return 2;
        }
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o{false, ""};
        try {
            o = criteria[k - 1].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("CRITERION %d %s: %s (%.1f s) %s\n", k, o.pass ? "PASS" : "FAIL", criteria[k - 1].first, dt,
                    o.detail.c_str());
        std::fflush(stdout);
        all = all && o.pass;
    }
    return all ? 0 : 1;
}
