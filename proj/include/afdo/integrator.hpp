#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <vector>

#include <boost/numeric/odeint.hpp>

#include "afdo/dynamics.hpp"
#include "afdo/types.hpp"

namespace afdo {

/// Tolerances for the Dormand-Prince 5(4) pair used everywhere in the library.
struct IntegratorConfig {
    double rel_tol = 1e-10;
    double abs_tol = 1e-12;
    double max_step = 0.25;
    double escape_radius = 1e3;

    void validate() const
    {
        if (!(rel_tol > 0 && abs_tol > 0 && max_step > 0 && escape_radius > 0)) {
            throw std::invalid_argument("IntegratorConfig: tolerances, max_step and escape radius must be positive");
        }
    }
};

using Vec3 = std::array<double, 3>;

/// Orthonormal tangent directions attached to a phase point.
///
/// Columns are (dx, dy, dt) triples. A plane frame has two columns with dt = 0;
/// an extended frame has three columns and spans the time direction too.
struct TangentFrame {
    std::vector<Vec3> columns;

    static TangentFrame plane() { return {{{1, 0, 0}, {0, 1, 0}}}; }
    static TangentFrame extended() { return {{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}}; }

    std::size_t size() const { return columns.size(); }
};

struct Monodromy {
    std::array<std::array<double, 2>, 2> matrix; ///< row-major
    double unstable_multiplier;
    double stable_multiplier;
    PhaseState unstable_direction; ///< unit vector, x component >= 0
    PhaseState stable_direction;   ///< unit vector, x component >= 0

    double determinant() const { return matrix[0][0] * matrix[1][1] - matrix[0][1] * matrix[1][0]; }
};

struct TangentResult {
    PhaseState state;
    TangentFrame frame;
    std::vector<double> log_growth; ///< accumulated natural-log stretch per column
};

namespace detail {

namespace odeint = boost::numeric::odeint;

template <std::size_t N>
using State = std::array<double, N>;

template <std::size_t N>
using Stepper = odeint::dense_output_runge_kutta<
    odeint::controlled_runge_kutta<odeint::runge_kutta_dopri5<State<N>>>>;

template <std::size_t N>
Stepper<N> make_stepper(const IntegratorConfig& cfg, double direction)
{
    return odeint::make_dense_output(cfg.abs_tol, cfg.rel_tol, direction * cfg.max_step,
                                     odeint::runge_kutta_dopri5<State<N>>());
}

// Flow plus variational equations for K tangent columns of dimension 3.
// Layout: x, y, then (vx, vy, vt) per column.
template <std::size_t K>
struct AugmentedSystem {
    Params p;

    void operator()(const State<2 + 3 * K>& u, State<2 + 3 * K>& du, double t) const
    {
        const double x = u[0];
        const double y = u[1];
        const double c = std::cos(p.omega * t);
        const double eg = p.epsilon * p.gamma;
        const double ed = p.epsilon * p.delta;
        du[0] = y;
        du[1] = x - x * x * x + (x - p.beta * x * x) * eg * c - ed * y;
        if constexpr (K > 0) {
            const double jx = 1.0 - 3.0 * x * x + eg * c * (1.0 - 2.0 * p.beta * x);
            const double jt = -(x - p.beta * x * x) * eg * p.omega * std::sin(p.omega * t);
            for (std::size_t k = 0; k < K; ++k) {
                const std::size_t o = 2 + 3 * k;
                du[o] = u[o + 1];
                du[o + 1] = jx * u[o] - ed * u[o + 1] + jt * u[o + 2];
                du[o + 2] = 0.0;
            }
        }
    }
};

inline void check_escape(double x, double y, double t, const IntegratorConfig& cfg)
{
    if (!(std::abs(x) <= cfg.escape_radius && std::abs(y) <= cfg.escape_radius)) {
        throw EscapeError(t, {x, y});
    }
}

/// Continuous trajectory with dense output; advance_to() may be called with
/// increasing (or, for a backward trajectory, decreasing) target times.
template <std::size_t K>
class Trajectory {
public:
    static constexpr std::size_t N = 2 + 3 * K;

    Trajectory(const State<N>& u0, double t0, double direction, const Params& p, const IntegratorConfig& cfg)
        : sys_{p}, cfg_(cfg), dir_(direction), stepper_(make_stepper<N>(cfg, direction))
    {
        stepper_.initialize(u0, t0, direction * std::min(1e-2, cfg.max_step));
    }

    State<N> advance_to(double t)
    {
        while (dir_ * (stepper_.current_time() - t) < 0.0) {
            stepper_.do_step(sys_);
            const auto& u = stepper_.current_state();
            check_escape(u[0], u[1], stepper_.current_time(), cfg_);
        }
        State<N> out;
        stepper_.calc_state(t, out);
        return out;
    }

    /// Restart from a modified state (used after renormalizing tangents).
    void reset(const State<N>& u, double t)
    {
        stepper_.initialize(u, t, stepper_.current_time_step());
    }

private:
    AugmentedSystem<K> sys_;
    IntegratorConfig cfg_;
    double dir_;
    Stepper<N> stepper_;
};

// Modified Gram-Schmidt on the columns; returns the norms removed.
template <std::size_t K>
std::array<double, K> orthonormalize(std::array<Vec3, K>& cols)
{
    std::array<double, K> r{};
    for (std::size_t k = 0; k < K; ++k) {
        for (std::size_t j = 0; j < k; ++j) {
            const double d = cols[k][0] * cols[j][0] + cols[k][1] * cols[j][1] + cols[k][2] * cols[j][2];
            for (int i = 0; i < 3; ++i) cols[k][i] -= d * cols[j][i];
        }
        const double n = std::sqrt(cols[k][0] * cols[k][0] + cols[k][1] * cols[k][1] + cols[k][2] * cols[k][2]);
        r[k] = n;
        if (n > 0) {
            for (int i = 0; i < 3; ++i) cols[k][i] /= n;
        }
    }
    return r;
}

} // namespace detail

/// Flow map from t_from to t_to in either time direction.
inline PhaseState flow(PhaseState s, double t_from, double t_to, const Params& p, const IntegratorConfig& cfg = {})
{
    if (t_to == t_from) return s;
    detail::Trajectory<0> traj({s.x, s.y}, t_from, t_to > t_from ? 1.0 : -1.0, p, cfg);
    const auto u = traj.advance_to(t_to);
    return {u[0], u[1]};
}

/// Forward integration of the AFDO; throws EscapeError once |x| or |y| exceeds the escape radius.
inline PhaseState integrate(PhaseState s, double t_from, double t_to, const Params& p, const IntegratorConfig& cfg = {})
{
    if (t_to < t_from) throw std::invalid_argument("integrate: t_to must not precede t_from");
    return flow(s, t_from, t_to, p, cfg);
}

/// Section time for phase theta: omega t = theta.
inline double section_time(double theta, const Params& p) { return theta / p.omega; }

/// One application of the stroboscopic map at section time t_section (forward or inverse).
inline PhaseState poincare_step(PhaseState s, double t_section, const Params& p, const IntegratorConfig& cfg = {},
                                int iterations = 1)
{
    return flow(s, t_section, t_section + iterations * p.period(), p, cfg);
}

/// States at theta/omega + k T for k = 1..n, starting from s at theta/omega.
inline std::vector<PhaseState> poincare_map(PhaseState s, double theta, int n, const Params& p,
                                            const IntegratorConfig& cfg = {})
{
    std::vector<PhaseState> out;
    out.reserve(static_cast<std::size_t>(std::max(n, 0)));
    const double t0 = section_time(theta, p);
    const double T = p.period();
    detail::Trajectory<0> traj({s.x, s.y}, t0, 1.0, p, cfg);
    for (int k = 1; k <= n; ++k) {
        try {
            const auto u = traj.advance_to(t0 + k * T);
            out.push_back({u[0], u[1]});
        } catch (const EscapeError& e) {
            throw e.with_iterate(k);
        }
    }
    return out;
}

/// Monodromy of the stroboscopic map at the saddle (0, 0) for section phase theta.
inline Monodromy linearize_at_origin(const Params& p, const IntegratorConfig& cfg = {}, double theta = 0.0)
{
    const double t0 = section_time(theta, p);
    detail::Trajectory<2> traj({0, 0, 1, 0, 0, 0, 1, 0}, t0, 1.0, p, cfg);
    const auto u = traj.advance_to(t0 + p.period());

    Monodromy m{};
    m.matrix = {{{u[2], u[5]}, {u[3], u[6]}}};
    const double a = u[2], b = u[5], c = u[3], d = u[6];
    const double tr = a + d;
    const double det = a * d - b * c;
    const double disc = tr * tr - 4.0 * det;
    if (disc <= 0.0) throw DomainError("linearize_at_origin: complex multipliers, origin is not a saddle");
    const double big = 0.5 * (tr + std::copysign(std::sqrt(disc), tr));
    const double small = det / big;
    if (!(std::abs(big) > 1.0 && std::abs(small) < 1.0)) {
        throw DomainError("linearize_at_origin: multipliers do not straddle 1, origin is not a saddle");
    }
    m.unstable_multiplier = big;
    m.stable_multiplier = small;

    auto eigvec = [&](double lam) {
        // Rows of (M - lam I) are orthogonal to v; use the larger one.
        const PhaseState r1{a - lam, b};
        const PhaseState r2{c, d - lam};
        const PhaseState r = norm(r1) >= norm(r2) ? r1 : r2;
        PhaseState v{-r.y, r.x};
        v = (1.0 / norm(v)) * v;
        if (v.x < 0) v = -1.0 * v;
        return v;
    };
    m.unstable_direction = eigvec(big);
    m.stable_direction = eigvec(small);
    return m;
}

/// Joint integration of the state and a tangent frame, re-orthonormalized every
/// reorth_interval time units.
inline TangentResult integrate_with_tangents(PhaseState s, const TangentFrame& frame, double t_from, double t_to,
                                             const Params& p, const IntegratorConfig& cfg, double reorth_interval)
{
    if (frame.size() != 2 && frame.size() != 3) throw std::invalid_argument("TangentFrame must have 2 or 3 columns");
    if (!(reorth_interval > 0)) throw std::invalid_argument("reorth_interval must be positive");
    if (t_to < t_from) throw std::invalid_argument("integrate_with_tangents: t_to must not precede t_from");

    constexpr std::size_t K = 3;
    using U = detail::State<2 + 3 * K>;
    const std::size_t used = frame.size();

    U u{};
    u[0] = s.x;
    u[1] = s.y;
    for (std::size_t k = 0; k < used; ++k) {
        for (int i = 0; i < 3; ++i) u[2 + 3 * k + i] = frame.columns[k][i];
    }

    std::vector<double> growth(used, 0.0);
    double t = t_from;
    double interval = reorth_interval;
    bool retried = false;
    detail::Trajectory<K> traj(u, t, 1.0, p, cfg);

    while (t < t_to) {
        const double t_next = std::min(t + interval, t_to);
        U v = traj.advance_to(t_next);
        std::array<Vec3, K> cols{};
        for (std::size_t k = 0; k < used; ++k) {
            for (int i = 0; i < 3; ++i) cols[k][i] = v[2 + 3 * k + i];
        }
        auto trial = cols;
        const auto r = detail::orthonormalize(trial);
        double rmax = 0, rmin = std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < used; ++k) {
            rmax = std::max(rmax, r[k]);
            rmin = std::min(rmin, r[k]);
        }
        if (!(rmin > 0) || !std::isfinite(rmax) || rmin < 1e-13 * rmax) {
            if (retried) throw std::runtime_error("integrate_with_tangents: tangent frame degenerated");
            retried = true;
            interval *= 0.5;
            traj.reset(u, t);
            continue;
        }
        for (std::size_t k = 0; k < used; ++k) {
            growth[k] += std::log(r[k]);
            for (int i = 0; i < 3; ++i) v[2 + 3 * k + i] = trial[k][i];
        }
        u = v;
        t = t_next;
        traj.reset(u, t);
    }

    TangentResult out{{u[0], u[1]}, {}, growth};
    for (std::size_t k = 0; k < used; ++k) out.frame.columns.push_back({u[2 + 3 * k], u[3 + 3 * k], u[4 + 3 * k]});
    return out;
}

/// Jacobian of n iterates of the stroboscopic map (variational equations, not finite differences).
inline std::array<std::array<double, 2>, 2> poincare_jacobian(PhaseState s, double t_section, const Params& p,
                                                              const IntegratorConfig& cfg = {}, int iterations = 1)
{
    detail::Trajectory<2> traj({s.x, s.y, 1, 0, 0, 0, 1, 0}, t_section, 1.0, p, cfg);
    const auto u = traj.advance_to(t_section + iterations * p.period());
    return {{{u[2], u[5]}, {u[3], u[6]}}};
}

} // namespace afdo
