#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "afdo/types.hpp"

namespace afdo {

// Closed-form Melnikov machinery for the two homoclinic loops.
//
// Sign convention: M_side(t0) = gamma sin(omega t0) F_side - 4 delta / 3 is the
// first-order energy difference H(unstable) - H(stable) at the apex of the loop
// on the Poincare section taken at time t0. F_right = F1 - beta F2 turns
// negative past omega*(beta); zeros and fluxes then depend on |F_right| while
// the sinusoid's phase flips by pi.

namespace detail {

// csch(z) and sech(z) without overflow for large z.
inline double csch(double z)
{
    if (z > 20.0) {
        const double e = std::exp(-z);
        return 2.0 * e / (1.0 - e * e);
    }
    return 1.0 / std::sinh(z);
}

inline double sech(double z)
{
    if (z > 20.0) {
        const double e = std::exp(-z);
        return 2.0 * e / (1.0 + e * e);
    }
    return 1.0 / std::cosh(z);
}

} // namespace detail

/// F1(omega) = pi omega^2 csch(pi omega / 2)
inline double f1(double omega)
{
    const double z = pi * omega / 2;
    return pi * omega * omega * detail::csch(z);
}

/// F2(omega) = (sqrt2 / 3) pi omega (1 + omega^2) sech(pi omega / 2)
inline double f2(double omega)
{
    const double z = pi * omega / 2;
    return sqrt2 / 3.0 * pi * omega * (1.0 + omega * omega) * detail::sech(z);
}

/// F2/F1 = (sqrt2/3)(1 + w^2) tanh(pi w / 2) / w, evaluated without the 0/0 at w -> 0.
inline double f_ratio(double omega)
{
    const double z = pi * omega / 2;
    const double tanh_over_w = omega < 1e-4 ? pi / 2 * (1.0 - z * z / 3.0) : std::tanh(z) / omega;
    return sqrt2 / 3.0 * (1.0 + omega * omega) * tanh_over_w;
}

/// Limit of F2/F1 as omega -> 0+; the ratio never drops below it.
inline constexpr double ratio_lower_limit = sqrt2 * pi / 6.0;

struct MelnikovCoeffs {
    double f1;
    double f2;
    double f_left;
    double f_right;

    double side(Side s) const { return s == Side::left ? f_left : f_right; }
};

inline MelnikovCoeffs melnikov_coeffs(double omega, double beta)
{
    const double a = f1(omega);
    const double b = f2(omega);
    return {a, b, a + beta * b, a - beta * b};
}

inline double f_side(double omega, double beta, Side side)
{
    return side == Side::left ? f1(omega) + beta * f2(omega) : f1(omega) - beta * f2(omega);
}

inline double melnikov(double t0, Side side, const Params& p)
{
    return p.gamma * std::sin(p.omega * t0) * f_side(p.omega, p.beta, side) - 4.0 / 3.0 * p.delta;
}

/// dM/dt0
inline double melnikov_derivative(double t0, Side side, const Params& p)
{
    return p.gamma * p.omega * std::cos(p.omega * t0) * f_side(p.omega, p.beta, side);
}

/// Largest value of |M_side| over one forcing period.
inline double melnikov_max_abs(Side side, const Params& p)
{
    return p.gamma * std::abs(f_side(p.omega, p.beta, side)) + 4.0 / 3.0 * p.delta;
}

enum class ZeroKind { simple, degenerate };

struct MelnikovZero {
    double t0;
    ZeroKind kind;
};

/// Zeros of M_side in [0, T), in increasing t0.
inline std::vector<MelnikovZero> melnikov_zeros(Side side, const Params& p)
{
    const double F = f_side(p.omega, p.beta, side);
    const double T = p.period();
    std::vector<MelnikovZero> out;
    if (p.gamma * F == 0.0) return out;

    const double r = 4.0 * p.delta / (3.0 * p.gamma * F); // sin(omega t0) = r
    const double ar = std::abs(r);
    auto wrap = [&](double phase) {
        double t = std::fmod(phase, 2.0 * pi);
        if (t < 0) t += 2.0 * pi;
        t /= p.omega;
        return t >= T ? 0.0 : t;
    };
    constexpr double tangency_tol = 64 * std::numeric_limits<double>::epsilon();
    if (ar > 1.0 + tangency_tol) return out;
    if (std::abs(ar - 1.0) <= tangency_tol) {
        out.push_back({wrap(r > 0 ? pi / 2 : 3 * pi / 2), ZeroKind::degenerate});
        return out;
    }
    const double a = std::asin(r);
    out.push_back({wrap(a), ZeroKind::simple});
    out.push_back({wrap(pi - a), ZeroKind::simple});
    std::sort(out.begin(), out.end(), [](const auto& u, const auto& v) { return u.t0 < v.t0; });
    return out;
}

struct PrimaryThresholds {
    double r0_minus;
    double r0_plus; ///< +inf when F1 = beta F2
};

inline PrimaryThresholds primary_thresholds(double omega, double beta)
{
    const auto c = melnikov_coeffs(omega, beta);
    const double right = std::abs(c.f_right);
    return {4.0 / (3.0 * c.f_left),
            right == 0.0 ? std::numeric_limits<double>::infinity() : 4.0 / (3.0 * right)};
}

/// r(x) = |1 - x| / |1 + x|, the ratio R0-/R0+ as a function of x = beta F2/F1.
inline double threshold_ratio(double x) { return std::abs((1.0 - x) / (1.0 + x)); }

enum class Region { I, II, III };

inline constexpr const char* to_string(Region r)
{
    switch (r) {
    case Region::I: return "I";
    case Region::II: return "II";
    case Region::III: return "III";
    }
    return "?";
}

struct RegionInfo {
    Region region;
    bool tangency; ///< gamma/delta sits exactly on a threshold; resolved to the higher region
};

inline RegionInfo classify_region(const Params& p)
{
    const auto th = primary_thresholds(p.omega, p.beta);
    const double ratio = p.gamma / p.delta;
    if (ratio < th.r0_minus) return {Region::I, false};
    if (ratio == th.r0_minus && ratio < th.r0_plus) return {Region::II, true};
    if (ratio < th.r0_plus) return {Region::II, false};
    return {Region::III, ratio == th.r0_plus};
}

/// omega with F2/F1 = 1/beta, or nullopt when 1/beta lies outside the ratio's range on the bracket.
inline std::optional<double> omega_star(double beta)
{
    if (!(beta > 0.0)) return std::nullopt;
    const double target = 1.0 / beta;
    double lo = 1e-3;
    double hi = 1e3;
    if (f_ratio(hi) < target || f_ratio(lo) > target) return std::nullopt;
    // Bisection on the monotone ratio; relative tolerance 1e-10.
    while (hi - lo > 1e-10 * hi) {
        const double mid = 0.5 * (lo + hi);
        (f_ratio(mid) < target ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

/// Phase-space area swept out of the loop per forcing period, divided by epsilon:
/// the integral of M_side over the interval where it is positive.
inline double flux_out(Side side, const Params& p)
{
    const double F = std::abs(f_side(p.omega, p.beta, side));
    if (p.gamma * F == 0.0) return 0.0;
    const double r = 4.0 * p.delta / (3.0 * p.gamma * F);
    if (r >= 1.0) return 0.0;
    return 2.0 / p.omega *
           (p.gamma * F * std::sqrt(1.0 - r * r) + 4.0 * p.delta / 3.0 * std::asin(r) - 2.0 * pi * p.delta / 3.0);
}

} // namespace afdo
