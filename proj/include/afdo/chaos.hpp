#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <deque>
#include <limits>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "afdo/integrator.hpp"
#include "afdo/parallel.hpp"
#include "afdo/types.hpp"

namespace afdo {

/// Stopping protocol for the Lyapunov computation.
struct LyapunovConfig {
    int n_transient = 200;
    int n_fit = 100;
    double slope_tol = 1e-6;
    int max_iters = 10000;
    double x_band = 0.05;   ///< sidedness tolerance
    int n_samples = 1000;   ///< post-transient iterates kept for sidedness

    void validate() const
    {
        if (n_transient < 0 || n_fit < 2 || !(slope_tol > 0) || max_iters < 1 || n_samples < 1) {
            throw std::invalid_argument("LyapunovConfig: invalid protocol settings");
        }
    }
};

enum class Verdict { strange_attractor, sink, undecided, escaped };
enum class Sidedness { left, right, two_sided };

inline constexpr std::string_view to_string(Verdict v)
{
    switch (v) {
    case Verdict::strange_attractor: return "strange_attractor";
    case Verdict::sink: return "sink";
    case Verdict::undecided: return "undecided";
    case Verdict::escaped: return "escaped";
    }
    return "?";
}

inline constexpr std::string_view to_string(Sidedness s)
{
    switch (s) {
    case Sidedness::left: return "left";
    case Sidedness::right: return "right";
    case Sidedness::two_sided: return "two_sided";
    }
    return "?";
}

struct LyapunovReport {
    /// Map exponents in log2 per Poincare iterate, descending. The running
    /// estimate of the largest one is reported for a sink.
    std::vector<double> exponents;
    /// The same exponents in natural log per unit time (lambda ln 2 / T).
    std::vector<double> exponents_per_time;
    double time_exponent = 0;  ///< exponent along the time direction of the extended system
    Verdict verdict = Verdict::undecided;
    int iterations_used = 0;   ///< post-transient iterates
    std::optional<double> dimension;
    std::optional<Sidedness> sidedness;
    double last_slope = 0;     ///< slope of the last fitted line
    PhaseState final_state;

    /// Sum of the map exponents and its expected value -eps delta T / ln 2.
    double exponent_sum() const { return std::accumulate(exponents.begin(), exponents.end(), 0.0); }
};

inline double expected_exponent_sum(const Params& p) { return -p.epsilon * p.delta * p.period() / std::log(2.0); }

/// Kaplan-Yorke dimension of a descending spectrum.
inline double lyapunov_dimension(std::vector<double> exponents)
{
    if (exponents.empty()) throw std::invalid_argument("lyapunov_dimension: empty spectrum");
    std::sort(exponents.rbegin(), exponents.rend());
    double sum = 0;
    for (std::size_t k = 0; k < exponents.size(); ++k) {
        if (sum + exponents[k] < 0) {
            if (k == 0) return 0.0;
            return static_cast<double>(k) + sum / std::abs(exponents[k]);
        }
        sum += exponents[k];
    }
    return static_cast<double>(exponents.size());
}

inline Sidedness classify_sidedness(const std::vector<PhaseState>& orbit, double x_band = 0.05)
{
    bool left = true, right = true;
    for (const auto& s : orbit) {
        left = left && s.x <= x_band;
        right = right && s.x >= -x_band;
    }
    if (left && !right) return Sidedness::left;
    if (right && !left) return Sidedness::right;
    return Sidedness::two_sided;
}

namespace detail {

// Least-squares slope of y against 0..n-1.
inline double fitted_slope(const std::vector<double>& y)
{
    const double n = static_cast<double>(y.size());
    const double xm = (n - 1) / 2;
    const double ym = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double dx = static_cast<double>(i) - xm;
        sxy += dx * (y[i] - ym);
        sxx += dx * dx;
    }
    return sxy / sxx;
}

} // namespace detail

/// Lyapunov protocol: discard n_transient iterates, then every n_fit iterates fit a
/// line to log|lambda_1(n)| over the last n_fit running estimates and stop when
///  1. lambda_1 < 0 (sink),
///  2. lambda_1 > 0 and |slope| < slope_tol (strange attractor),
///  3. max_iters iterates were spent (undecided).
inline LyapunovReport lyapunov_run(PhaseState s0, const Params& p, const LyapunovConfig& lcfg = {},
                                   const IntegratorConfig& icfg = {})
{
    lcfg.validate();
    const double T = p.period();
    const double ln2 = std::log(2.0);
    LyapunovReport rep;
    double t = 0;
    PhaseState s = s0;

    try {
        const auto tr = poincare_map(s, 0.0, lcfg.n_transient, p, icfg);
        if (!tr.empty()) s = tr.back();
        t = lcfg.n_transient * T;
    } catch (const EscapeError&) {
        rep.verdict = Verdict::escaped;
        return rep;
    }

    TangentFrame frame = TangentFrame::extended();
    std::vector<double> growth(3, 0.0);
    std::vector<double> history; // log|lambda_1(n)|
    std::deque<PhaseState> samples;
    int n = 0;
    while (true) {
        TangentResult r;
        try {
            r = integrate_with_tangents(s, frame, t, t + T, p, icfg, T);
        } catch (const EscapeError&) {
            rep.verdict = Verdict::escaped;
            rep.iterations_used = n;
            return rep;
        }
        s = r.state;
        frame = r.frame;
        t += T;
        ++n;
        for (int k = 0; k < 3; ++k) growth[k] += r.log_growth[k];
        samples.push_back(s);
        if (static_cast<int>(samples.size()) > lcfg.n_samples) samples.pop_front();

        const double lam1 = growth[0] / (n * ln2);
        history.push_back(std::log(std::abs(lam1)));

        const bool check = n % lcfg.n_fit == 0;
        const bool out_of_budget = lcfg.n_transient + n >= lcfg.max_iters;
        if (!check && !out_of_budget) continue;

        std::vector<double> window(history.end() - std::min<std::size_t>(history.size(), lcfg.n_fit), history.end());
        rep.last_slope = window.size() >= 2 ? detail::fitted_slope(window) : 0.0;
        std::optional<Verdict> v;
        if (check && lam1 < 0) v = Verdict::sink;
        else if (check && lam1 > 0 && std::abs(rep.last_slope) < lcfg.slope_tol) v = Verdict::strange_attractor;
        else if (out_of_budget) v = Verdict::undecided;
        if (!v) continue;

        rep.verdict = *v;
        rep.iterations_used = n;
        const double l1 = growth[0] / (n * ln2);
        const double l2 = growth[1] / (n * ln2);
        rep.exponents = {std::max(l1, l2), std::min(l1, l2)};
        rep.exponents_per_time = {rep.exponents[0] * ln2 / T, rep.exponents[1] * ln2 / T};
        rep.time_exponent = growth[2] / (n * ln2);
        rep.final_state = s;
        rep.sidedness = classify_sidedness({samples.begin(), samples.end()}, lcfg.x_band);
        if (rep.verdict == Verdict::strange_attractor) rep.dimension = lyapunov_dimension(rep.exponents);
        return rep;
    }
}

/// Post-transient Poincare samples of the attractor reached from s0.
inline std::vector<PhaseState> attractor_cloud(PhaseState s0, const Params& p, int n_transient, int n_points,
                                               double theta = 0.0, const IntegratorConfig& icfg = {})
{
    auto all = poincare_map(s0, theta, n_transient + n_points, p, icfg);
    return {all.begin() + n_transient, all.end()};
}

// ---------------------------------------------------------------------------
// Basins of attraction

enum class BasinLabel { left_attractor, right_attractor, two_sided_attractor, escaped, unresolved };

inline constexpr std::string_view to_string(BasinLabel b)
{
    switch (b) {
    case BasinLabel::left_attractor: return "left";
    case BasinLabel::right_attractor: return "right";
    case BasinLabel::two_sided_attractor: return "two_sided";
    case BasinLabel::escaped: return "escaped";
    case BasinLabel::unresolved: return "unresolved";
    }
    return "?";
}

struct GridSpec {
    double x_min = -2, x_max = 2, y_min = -2, y_max = 2;
    int nx = 33, ny = 33;
    /// Cell-center offset in units of a cell (0 = centered); used for reproducibility checks.
    double offset_x = 0, offset_y = 0;

    void validate() const
    {
        if (nx < 16 || ny < 16) throw std::invalid_argument("GridSpec: resolution must be at least 16x16");
        if (!(x_max > x_min && y_max > y_min)) throw std::invalid_argument("GridSpec: empty domain");
    }
    PhaseState center(int i, int j) const
    {
        return {x_min + (i + 0.5 + offset_x) * (x_max - x_min) / nx, y_min + (j + 0.5 + offset_y) * (y_max - y_min) / ny};
    }
};

struct BasinOptions {
    int min_iters = 20;        ///< iterates before periodicity is tested
    int max_period = 8;        ///< longest cycle recognized as a sink
    double cycle_tol = 1e-6;
    unsigned workers = 0;
};

struct BasinFractions {
    double left = 0, right = 0, two_sided = 0, escaped = 0, unresolved = 0;
};

struct BasinGrid {
    GridSpec spec;
    std::vector<BasinLabel> labels; ///< row-major: index j * nx + i

    BasinLabel at(int i, int j) const { return labels[static_cast<std::size_t>(j) * spec.nx + i]; }

    BasinFractions fractions() const
    {
        BasinFractions f;
        for (auto l : labels) {
            switch (l) {
            case BasinLabel::left_attractor: f.left += 1; break;
            case BasinLabel::right_attractor: f.right += 1; break;
            case BasinLabel::two_sided_attractor: f.two_sided += 1; break;
            case BasinLabel::escaped: f.escaped += 1; break;
            case BasinLabel::unresolved: f.unresolved += 1; break;
            }
        }
        const double n = static_cast<double>(labels.size());
        f.left /= n;
        f.right /= n;
        f.two_sided /= n;
        f.escaped /= n;
        // The remainder rather than a fifth quotient keeps the sum at 1 to rounding.
        f.unresolved = std::max(0.0, 1.0 - f.left - f.right - f.two_sided - f.escaped);
        return f;
    }
};

/// Follows one initial condition to its attractor and labels the side it lives on.
/// Periodic sinks are recognized early; otherwise the label comes from
/// n_samples post-transient iterates.
inline BasinLabel classify_initial_condition(PhaseState s0, const Params& p, const LyapunovConfig& lcfg,
                                             const IntegratorConfig& icfg, const BasinOptions& opt = {})
{
    const double T = p.period();
    std::deque<PhaseState> recent;
    std::vector<PhaseState> samples;
    PhaseState s = s0;
    const int total = std::min(lcfg.max_iters, lcfg.n_transient + lcfg.n_samples);
    auto side_of = [&](const std::vector<PhaseState>& pts) {
        switch (classify_sidedness(pts, lcfg.x_band)) {
        case Sidedness::left: return BasinLabel::left_attractor;
        case Sidedness::right: return BasinLabel::right_attractor;
        case Sidedness::two_sided: return BasinLabel::two_sided_attractor;
        }
        return BasinLabel::unresolved;
    };
    try {
        detail::Trajectory<0> traj({s.x, s.y}, 0.0, 1.0, p, icfg);
        for (int k = 1; k <= total; ++k) {
            const auto u = traj.advance_to(k * T);
            s = {u[0], u[1]};
            if (!std::isfinite(s.x) || !std::isfinite(s.y)) return BasinLabel::unresolved;
            recent.push_back(s);
            if (static_cast<int>(recent.size()) > opt.max_period + 1) recent.pop_front();
            if (k >= opt.min_iters) {
                for (int m = 1; m <= opt.max_period && m < static_cast<int>(recent.size()); ++m) {
                    if (distance(recent.back(), recent[recent.size() - 1 - m]) < opt.cycle_tol) {
                        return side_of({recent.end() - m, recent.end()});
                    }
                }
            }
            if (k > lcfg.n_transient) samples.push_back(s);
        }
    } catch (const EscapeError&) {
        return BasinLabel::escaped;
    }
    if (samples.empty()) return BasinLabel::unresolved;
    return side_of(samples);
}

inline BasinGrid basin_map(const GridSpec& spec, const Params& p, const LyapunovConfig& lcfg = {},
                           const IntegratorConfig& icfg = {}, const BasinOptions& opt = {})
{
    spec.validate();
    BasinGrid g{spec, {}};
    const std::size_t n = static_cast<std::size_t>(spec.nx) * spec.ny;
    g.labels = parallel_map(
        n,
        [&](std::size_t idx) {
            const int i = static_cast<int>(idx % spec.nx);
            const int j = static_cast<int>(idx / spec.nx);
            return classify_initial_condition(spec.center(i, j), p, lcfg, icfg, opt);
        },
        opt.workers);
    return g;
}

struct BasinSweepRow {
    double epsilon;
    BasinFractions fractions;
    std::vector<double> nearby_bifurcations; ///< annotation values closest to this sample
};

/// Basin fractions along a list of epsilon values; annotation values (for example
/// secondary bifurcation epsilons) are attached to the nearest sample.
inline std::vector<BasinSweepRow> basin_fraction_sweep(const std::vector<double>& epsilons, const Params& p_shape,
                                                       const GridSpec& spec, const std::vector<double>& annotations = {},
                                                       const LyapunovConfig& lcfg = {},
                                                       const IntegratorConfig& icfg = {}, const BasinOptions& opt = {})
{
    std::vector<BasinSweepRow> rows;
    for (double e : epsilons) {
        rows.push_back({e, basin_map(spec, p_shape.with_epsilon(e), lcfg, icfg, opt).fractions(), {}});
    }
    for (double a : annotations) {
        std::size_t best = rows.size();
        double bd = std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < rows.size(); ++k) {
            if (std::abs(rows[k].epsilon - a) < bd) {
                bd = std::abs(rows[k].epsilon - a);
                best = k;
            }
        }
        if (best < rows.size()) rows[best].nearby_bifurcations.push_back(a);
    }
    return rows;
}

} // namespace afdo
