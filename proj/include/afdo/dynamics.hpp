#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/tools/roots.hpp>

#include "afdo/types.hpp"

namespace afdo {

/// Right-hand side of the AFDO at (s, t).
inline PhaseState vector_field(PhaseState s, double t, const Params& p)
{
    const double forcing = (s.x - p.beta * s.x * s.x) * p.epsilon * p.gamma * std::cos(p.omega * t);
    return {s.y, s.x - s.x * s.x * s.x + forcing - p.epsilon * p.delta * s.y};
}

/// Energy of the unperturbed twin-well oscillator, V(x) = -x^2/2 + x^4/4.
inline double hamiltonian(PhaseState s)
{
    const double x2 = s.x * s.x;
    return 0.5 * s.y * s.y - 0.5 * x2 + 0.25 * x2 * x2;
}

inline double potential(double x)
{
    const double x2 = x * x;
    return -0.5 * x2 + 0.25 * x2 * x2;
}

/// Unperturbed homoclinic loop through (+-sqrt2, 0) at t = 0.
inline PhaseState homoclinic_orbit(double t, Side side)
{
    const double sech = 1.0 / std::cosh(t);
    const double sgn = sign_of(side);
    return {sgn * sqrt2 * sech, -sgn * sqrt2 * sech * std::tanh(t)};
}

enum class EnergyBranch { inner_left, inner_right, outer };

inline bool is_inner(EnergyBranch b) { return b != EnergyBranch::outer; }

namespace detail {

// integrate() is non-const in Boost 1.74; one rule per thread keeps callers reentrant.
inline boost::math::quadrature::tanh_sinh<double>& quadrature()
{
    thread_local boost::math::quadrature::tanh_sinh<double> q(15);
    return q;
}

inline constexpr double quad_tol = 1e-14;

// Both branches reduce to integrals over theta in [0, pi/2] whose integrand is
// smooth; the turning points are absorbed by the change of variables
//   inner: x^2 = x_min^2 + (x_max^2 - x_min^2) sin^2(theta)
//   outer: x = x_max sin(theta)
// The only difficulty left is a peak of width ~sqrt|H| at theta = 0, which the
// double-exponential rule resolves.
struct BranchRoots {
    double s;     // sqrt(1 + 4H)
    double small; // inner: x_min^2 = 1 - s; outer: s - 1; both computed without cancellation
    double large; // 1 + s
};

inline BranchRoots roots_for(double H)
{
    const double s = std::sqrt(1.0 + 4.0 * H);
    return {s, std::abs(4.0 * H) / (1.0 + s), 1.0 + s};
}

inline void check_range(double H, EnergyBranch b)
{
    if (std::isnan(H)) throw DomainError("period: energy is NaN");
    if (is_inner(b)) {
        if (!(H >= -0.25 && H < 0.0)) throw DomainError("period: inner branch needs H in [-1/4, 0)");
    } else {
        if (!(H > 0.0) || !std::isfinite(H)) throw DomainError("period: outer branch needs H > 0");
    }
}

} // namespace detail

/// Period of the unperturbed orbit with energy H.
///
/// The inner branches (the two wells share one period by symmetry) are valid on
/// [-1/4, 0); the outer branch, the orbit encircling all three equilibria, on
/// (0, inf). Near the separatrix P ~ ln(16/|H|) inside and 2 ln(16/H) outside.
inline double period(double H, EnergyBranch b)
{
    detail::check_range(H, b);
    const auto r = detail::roots_for(H);
    auto& q = detail::quadrature();
    if (is_inner(b)) {
        // b + (a - b) sin^2 = x_min^2 + 2 s sin^2
        auto f = [&](double th) {
            const double sn = std::sin(th);
            return 1.0 / std::sqrt(r.small + 2.0 * r.s * sn * sn);
        };
        return 2.0 * sqrt2 * q.integrate(f, 0.0, pi / 2, detail::quad_tol);
    }
    auto f = [&](double th) {
        const double sn = std::sin(th);
        return 1.0 / std::sqrt(r.small + r.large * sn * sn);
    };
    return 4.0 * sqrt2 * q.integrate(f, 0.0, pi / 2, detail::quad_tol);
}

/// dP/dH, by differentiating the regularized integrand under the integral sign.
inline double period_derivative(double H, EnergyBranch b)
{
    detail::check_range(H, b);
    const auto r = detail::roots_for(H);
    auto& q = detail::quadrature();
    if (is_inner(b)) {
        if (r.s == 0.0) throw DomainError("period_derivative: undefined at the center");
        auto f = [&](double th) {
            const double sn = std::sin(th);
            const double u = r.small + 2.0 * r.s * sn * sn;
            return std::cos(2.0 * th) / (u * std::sqrt(u));
        };
        return 2.0 * sqrt2 / r.s * q.integrate(f, 0.0, pi / 2, detail::quad_tol);
    }
    auto f = [&](double th) {
        const double sn = std::sin(th);
        const double u = r.small + r.large * sn * sn;
        return (1.0 + sn * sn) / (u * std::sqrt(u));
    };
    return -4.0 * sqrt2 / r.s * q.integrate(f, 0.0, pi / 2, detail::quad_tol);
}

/// Smallest period attained on a branch (the inner limit at the centers is pi sqrt2).
inline double minimum_period(EnergyBranch b) { return is_inner(b) ? pi * sqrt2 : 0.0; }

/// Energy H on branch b with period(H, b) == tau.
inline double period_inverse(double tau, EnergyBranch b)
{
    if (std::isnan(tau)) throw DomainError("period_inverse: tau is NaN");
    if (std::isinf(tau) && tau > 0) return is_inner(b) ? -0.0 : 0.0;
    const double tmin = minimum_period(b);
    if (is_inner(b)) {
        if (tau < tmin) throw DomainError("period_inverse: tau below the inner-branch minimum pi*sqrt2");
        if (tau == tmin) return -0.25;
    } else if (!(tau > 0.0)) {
        throw DomainError("period_inverse: tau must be positive on the outer branch");
    }

    auto residual = [&](double H) { return period(H, b) - tau; };

    // Bracket around the leading-order inverse and widen geometrically.
    double lo, hi;
    if (is_inner(b)) {
        double h0 = std::clamp(-16.0 * std::exp(-tau), -0.25 + 1e-12, -1e-300);
        if (residual(h0) < 0.0) {
            lo = h0;
            hi = h0 / 2;
            while (residual(hi) < 0.0) {
                lo = hi;
                hi /= 2;
            }
        } else {
            hi = h0;
            lo = 0.5 * (h0 - 0.25);
            while (residual(lo) > 0.0) {
                hi = lo;
                lo = 0.5 * (lo - 0.25);
                if (lo + 0.25 < 1e-15) {
                    lo = -0.25;
                    break;
                }
            }
        }
    } else {
        double h0 = std::max(16.0 * std::exp(-tau / 2), 1e-300);
        if (residual(h0) > 0.0) {
            lo = h0;
            hi = 2 * h0;
            while (residual(hi) > 0.0) {
                lo = hi;
                hi *= 2;
            }
        } else {
            hi = h0;
            lo = h0 / 2;
            while (residual(lo) < 0.0) {
                hi = lo;
                lo /= 2;
            }
        }
    }
    if (lo > hi) std::swap(lo, hi);

    std::uintmax_t max_iter = 200;
    auto tol = [](double a, double c) { return std::abs(c - a) <= 4 * std::numeric_limits<double>::epsilon() * std::min(std::abs(a), std::abs(c)); };
    const auto [a, c] = boost::math::tools::toms748_solve(residual, lo, hi, tol, max_iter);
    const double ra = std::abs(residual(a));
    const double rc = std::abs(residual(c));
    return ra <= rc ? a : c;
}

enum class Stability { saddle, center };

struct Equilibrium {
    PhaseState state;
    Stability stability;
};

/// Fixed points of the unperturbed system.
inline std::vector<Equilibrium> equilibria()
{
    return {{{0.0, 0.0}, Stability::saddle}, {{1.0, 0.0}, Stability::center}, {{-1.0, 0.0}, Stability::center}};
}

} // namespace afdo
