#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <boost/math/tools/minima.hpp>

#include "afdo/dynamics.hpp"
#include "afdo/melnikov.hpp"
#include "afdo/types.hpp"

namespace afdo {

// Secondary Melnikov function: tangencies of h2(t0, eps) = M_c(t0) + M_d(t1(t0, eps))
// mark secondary homoclinic bifurcations of the lobe pair (c, d).

/// Lobe pair (c, d). c = d legs live inside the loop (M_c < 0), c != d legs
/// cross over to the other loop along the outer orbit (M_c > 0).
struct PairCD {
    Side c;
    Side d;

    bool same() const { return c == d; }
    friend bool operator==(const PairCD&, const PairCD&) = default;
};

inline constexpr std::array<PairCD, 4> all_pairs{
    PairCD{Side::left, Side::left}, PairCD{Side::left, Side::right},
    PairCD{Side::right, Side::left}, PairCD{Side::right, Side::right}};

inline std::string to_string(PairCD q)
{
    return std::string(1, to_string(q.c)[0]) + std::string(1, to_string(q.d)[0]);
}

inline PairCD parse_pair(std::string_view s)
{
    auto side = [&](char ch) {
        if (ch == 'l') return Side::left;
        if (ch == 'r') return Side::right;
        throw std::invalid_argument("pair must be one of ll, lr, rl, rr");
    };
    if (s.size() != 2) throw std::invalid_argument("pair must be one of ll, lr, rl, rr");
    return {side(s[0]), side(s[1])};
}

struct SecondaryBifurcation {
    double t0 = 0;      ///< in [0, T)
    double epsilon = 0;
    int branch_i = 1;   ///< 1 for the lower bifurcation value eps^1, 2 for eps^2
    int arcsin_branch = 1; ///< branch of the Melnikov inverse used for t1
    PairCD pair{};
    int transition_j = 0;
    double h2 = 0;      ///< SMF residual at (t0, epsilon)
    double dh2 = 0;     ///< residual of dh2/dt0
    double t1 = 0;
    bool resonance = false; ///< l_cc = 0 point passing through the 1:1 resonance
    int iterations = 0;
};

struct StructuralIndexSet {
    std::optional<int> l_ll, l_lr, l_rl, l_rr;

    std::optional<int>& operator[](PairCD q)
    {
        if (q.c == Side::left) return q.d == Side::left ? l_ll : l_lr;
        return q.d == Side::left ? l_rl : l_rr;
    }
    const std::optional<int>& operator[](PairCD q) const
    {
        return const_cast<StructuralIndexSet&>(*this)[q];
    }
};

/// Index-consistency failure: converged point does not satisfy the t1 interval condition.
class IndexMismatchError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline EnergyBranch branch_for(PairCD q, Side c)
{
    if (!q.same()) return EnergyBranch::outer;
    return c == Side::left ? EnergyBranch::inner_left : EnergyBranch::inner_right;
}

inline int half_period_index(double t0, double T) { return t0 < 0.5 * T ? 0 : 1; }

inline double wrap_period(double t, double T)
{
    double r = std::fmod(t, T);
    if (r < 0) r += T;
    return r >= T ? 0.0 : r;
}

// Sign condition on M_c for the pair type.
inline bool admissible_sign(double mc, PairCD q) { return q.same() ? mc < 0.0 : mc > 0.0; }

} // namespace detail

/// t1(t0, eps) from the unperturbed period at energy eps M_c(t0); nullopt when
/// M_c(t0) = 0 or the energy lies outside the period's domain.
inline std::optional<double> t1(double t0, double epsilon, PairCD q, const Params& p)
{
    if (!(epsilon > 0)) throw std::invalid_argument("t1: epsilon must be positive");
    const double mc = melnikov(t0, q.c, p);
    const double H = epsilon * mc;
    if (mc < 0.0) {
        if (H < -0.25) return std::nullopt;
        return t0 + period(H, q.c == Side::left ? EnergyBranch::inner_left : EnergyBranch::inner_right);
    }
    if (mc > 0.0) return t0 + 0.5 * period(H, EnergyBranch::outer);
    return std::nullopt;
}

/// h2 = M_c(t0) + M_d(t1(t0, eps)).
inline std::optional<double> smf_value(double t0, double epsilon, PairCD q, const Params& p)
{
    const auto t = t1(t0, epsilon, q, p);
    if (!t) return std::nullopt;
    return melnikov(t0, q.c, p) + melnikov(*t, q.d, p);
}

/// dh2/dt0 with the period derivative taken under the integral sign.
inline std::optional<double> smf_derivative(double t0, double epsilon, PairCD q, const Params& p)
{
    const auto t = t1(t0, epsilon, q, p);
    if (!t) return std::nullopt;
    const double mc = melnikov(t0, q.c, p);
    const double dmc = melnikov_derivative(t0, q.c, p);
    const double H = epsilon * mc;
    const auto b = mc < 0 ? (q.c == Side::left ? EnergyBranch::inner_left : EnergyBranch::inner_right)
                          : EnergyBranch::outer;
    const double scale = mc < 0 ? 1.0 : 0.5;
    const double dt1 = 1.0 + scale * period_derivative(H, b) * epsilon * dmc;
    return dmc + melnikov_derivative(*t, q.d, p) * dt1;
}

/// floor(t1/T) - s(t0); throws std::logic_error on a negative result.
inline int transition_number(double t0, double t1_value, const Params& p)
{
    const double T = p.period();
    const int j = static_cast<int>(std::floor(t1_value / T)) - detail::half_period_index(detail::wrap_period(t0, T), T);
    if (j < 0) throw std::logic_error("transition_number: negative transition number");
    return j;
}

inline std::optional<int> transition_number(double t0, double epsilon, PairCD q, const Params& p)
{
    const auto t = t1(t0, epsilon, q, p);
    if (!t) return std::nullopt;
    return transition_number(t0, *t, p);
}

/// Time t with M_d(t) = x on arcsin branch 1 or 2; nullopt outside the arcsin domain.
inline std::optional<double> melnikov_inverse(double x, Side d, int branch_i, const Params& p)
{
    if (branch_i != 1 && branch_i != 2) throw std::invalid_argument("melnikov_inverse: branch must be 1 or 2");
    const double gf = p.gamma * f_side(p.omega, p.beta, d);
    if (gf == 0.0) return std::nullopt;
    const double arg = (x + 4.0 * p.delta / 3.0) / gf;
    if (!(std::abs(arg) <= 1.0)) return std::nullopt;
    const double a = std::asin(arg) / p.omega;
    return branch_i == 1 ? a : pi / p.omega - a;
}

namespace detail {

// t1^i(t0) = jT + wrap(M_d^{-1,i}(-M_c(t0))) with j = l + s(t0); the wrap keeps
// t1 inside the interval demanded by the transition-number condition.
struct LegInfo {
    double t1;
    double tau;  // the period the interior/outer orbit must have
    double dtau; // d tau / d t0
};

inline std::optional<LegInfo> leg(double t0, PairCD q, int ell, int branch_i, const Params& p,
                                  std::optional<int> fixed_j = std::nullopt)
{
    const double T = p.period();
    const double mc = melnikov(t0, q.c, p);
    if (!admissible_sign(mc, q)) return std::nullopt;
    const auto raw = melnikov_inverse(-mc, q.d, branch_i, p);
    if (!raw) return std::nullopt;
    const int j = fixed_j ? *fixed_j : ell + half_period_index(wrap_period(t0, T), T);
    const double t1v = j * T + wrap_period(*raw, T);
    const double dmd = melnikov_derivative(t1v, q.d, p);
    if (dmd == 0.0) return std::nullopt;
    const double dt1 = -melnikov_derivative(t0, q.c, p) / dmd;
    const double k = q.same() ? 1.0 : 2.0;
    const double tau = k * (t1v - t0);
    if (!(tau > minimum_period(branch_for(q, q.c)))) return std::nullopt;
    return LegInfo{t1v, tau, k * (dt1 - 1.0)};
}

// Leading-order eps^i(t0) from the logarithmic period asymptotics.
inline std::optional<double> zeroth_order_epsilon(double t0, PairCD q, int ell, int branch_i, const Params& p)
{
    const auto g = leg(t0, q, ell, branch_i, p);
    if (!g) return std::nullopt;
    const double mc = melnikov(t0, q.c, p);
    return 16.0 * std::exp(t0 - g->t1) / std::abs(mc);
}

// Sheet label: t1^i jumps where s(t0) flips or the wrapped arcsin value crosses zero.
inline int sheet(double t0, PairCD q, int branch_i, const Params& p)
{
    const double T = p.period();
    const auto raw = melnikov_inverse(-melnikov(t0, q.c, p), q.d, branch_i, p);
    const int neg = raw && *raw < 0 ? 1 : 0;
    return 2 * half_period_index(wrap_period(t0, T), T) + neg;
}

} // namespace detail

struct SmfSeed {
    double t0;
    double epsilon;
    int arcsin_branch;
};

/// Zeroth-order bifurcation points: interior minima of the leading-order eps^i(t0),
/// equivalently roots of the approximate stationarity condition. Up to two seeds,
/// ordered by increasing epsilon.
inline std::vector<SmfSeed> approx_secondary_bifurcation(PairCD q, int ell, const Params& p_shape,
                                                         int samples = 2048)
{
    if (ell < 0) throw std::invalid_argument("approx_secondary_bifurcation: ell must be nonnegative");
    const double T = p_shape.period();
    std::vector<SmfSeed> out;
    for (int br = 1; br <= 2; ++br) {
        std::vector<std::optional<double>> e(samples);
        std::vector<int> sh(samples);
        for (int k = 0; k < samples; ++k) {
            const double t0 = T * k / samples;
            e[k] = detail::zeroth_order_epsilon(t0, q, ell, br, p_shape);
            sh[k] = detail::sheet(t0, q, br, p_shape);
        }
        for (int k = 1; k + 1 < samples; ++k) {
            if (!e[k - 1] || !e[k] || !e[k + 1]) continue;
            if (sh[k - 1] != sh[k] || sh[k + 1] != sh[k]) continue;
            if (!(*e[k] <= *e[k - 1] && *e[k] < *e[k + 1])) continue;
            const double lo = T * (k - 1) / samples;
            const double hi = T * (k + 1) / samples;
            auto f = [&](double t) {
                const auto v = detail::zeroth_order_epsilon(t, q, ell, br, p_shape);
                return v ? *v : std::numeric_limits<double>::infinity();
            };
            const auto [tm, em] = boost::math::tools::brent_find_minima(f, lo, hi, 50);
            if (std::isfinite(em)) out.push_back({tm, em, br});
        }
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.epsilon < b.epsilon; });
    if (out.size() > 2) out.resize(2);
    return out;
}

/// Lower bound on a bifurcation value, using the exact period inverse. +inf when no orbit of the
/// required period exists (the pair cannot bifurcate at this l).
inline double lower_bound_epsilon(PairCD q, int ell, const Params& p_shape)
{
    const double mmax = melnikov_max_abs(q.c, p_shape);
    if (!(mmax > 0)) throw DomainError("lower_bound_epsilon: Melnikov amplitude vanishes");
    const double T = p_shape.period();
    if (q.same()) {
        const double tau = T * (ell + 1);
        if (tau <= minimum_period(EnergyBranch::inner_left)) return std::numeric_limits<double>::infinity();
        return std::abs(period_inverse(tau, EnergyBranch::inner_left)) / mmax;
    }
    return period_inverse(2.0 * T * (ell + 1), EnergyBranch::outer) / mmax;
}

/// Closed-form leading-order version of the lower bound: 16 exp(-T (l + 1)) / max|M_c|.
inline double lower_bound_epsilon_asymptotic(PairCD q, int ell, const Params& p_shape)
{
    const double gf = p_shape.gamma * f_side(p_shape.omega, p_shape.beta, q.c);
    const double d = 4.0 * p_shape.delta / 3.0;
    return 16.0 * std::exp(-p_shape.period() * (ell + 1)) / std::max(std::abs(gf - d), std::abs(gf + d));
}

struct NewtonOptions {
    double tol = 1e-10;
    int max_iter = 50;
    int max_halvings = 8;
};

/// Newton on P(eps M_c(t0)) = tau^i(t0), dP(eps M_c(t0))/dt0 = dtau^i/dt0 in
/// the unknowns (t0, ln eps) with the exact period; damped by step halving.
inline SecondaryBifurcation refine_secondary_bifurcation(SmfSeed seed, PairCD q, int ell, const Params& p_shape,
                                                         const NewtonOptions& opt = {})
{
    const double T = p_shape.period();
    const auto br = detail::branch_for(q, q.c);
    const int j = ell + detail::half_period_index(detail::wrap_period(seed.t0, T), T);

    using Vec = std::array<double, 2>;
    auto residual = [&](const Vec& u) -> std::optional<Vec> {
        const double t0 = u[0];
        const double eps = std::exp(u[1]);
        const auto g = detail::leg(t0, q, ell, seed.arcsin_branch, p_shape, j);
        if (!g) return std::nullopt;
        const double mc = melnikov(t0, q.c, p_shape);
        const double H = eps * mc;
        if (is_inner(br) ? !(H > -0.25 && H < 0) : !(H > 0)) return std::nullopt;
        const double dP = period_derivative(H, br) * eps * melnikov_derivative(t0, q.c, p_shape);
        return Vec{period(H, br) - g->tau, dP - g->dtau};
    };
    auto nrm = [](const Vec& r) { return std::max(std::abs(r[0]), std::abs(r[1])); };

    Vec u{seed.t0, std::log(seed.epsilon)};
    auto r = residual(u);
    if (!r) throw ConvergenceError("refine_secondary_bifurcation: seed outside the domain", seed.t0, seed.epsilon);

    int it = 0;
    for (; it < opt.max_iter && nrm(*r) >= opt.tol; ++it) {
        // Forward-difference Jacobian; columns d/dt0, d/dln(eps).
        std::array<Vec, 2> J{};
        for (int c = 0; c < 2; ++c) {
            const double h = 1e-7 * std::max(1.0, std::abs(u[c]));
            Vec v = u;
            v[c] += h;
            auto rv = residual(v);
            if (!rv) {
                v[c] = u[c] - h;
                rv = residual(v);
                if (!rv) throw ConvergenceError("refine_secondary_bifurcation: Jacobian outside the domain", u[0], std::exp(u[1]));
                J[c] = {((*r)[0] - (*rv)[0]) / h, ((*r)[1] - (*rv)[1]) / h};
            } else {
                J[c] = {((*rv)[0] - (*r)[0]) / h, ((*rv)[1] - (*r)[1]) / h};
            }
        }
        const double det = J[0][0] * J[1][1] - J[1][0] * J[0][1];
        if (!(std::abs(det) > 0) || !std::isfinite(det)) {
            throw ConvergenceError("refine_secondary_bifurcation: singular Jacobian", u[0], std::exp(u[1]));
        }
        const Vec step{-((*r)[0] * J[1][1] - (*r)[1] * J[1][0]) / det, -(J[0][0] * (*r)[1] - J[0][1] * (*r)[0]) / det};
        double lam = 1.0;
        bool accepted = false;
        for (int h = 0; h <= opt.max_halvings; ++h, lam *= 0.5) {
            const Vec v{u[0] + lam * step[0], u[1] + lam * step[1]};
            const auto rv = residual(v);
            if (rv && nrm(*rv) < nrm(*r)) {
                u = v;
                r = rv;
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            throw ConvergenceError("refine_secondary_bifurcation: damped step failed to reduce the residual", u[0], std::exp(u[1]));
        }
    }
    if (!(nrm(*r) < opt.tol)) {
        throw ConvergenceError("refine_secondary_bifurcation: no convergence", u[0], std::exp(u[1]));
    }

    SecondaryBifurcation out;
    out.pair = q;
    out.arcsin_branch = seed.arcsin_branch;
    out.epsilon = std::exp(u[1]);
    out.iterations = it;
    const double shift = std::floor(u[0] / T) * T;
    out.t0 = u[0] - shift;
    if (out.t0 >= T) out.t0 = 0.0;
    const auto tv = t1(out.t0, out.epsilon, q, p_shape);
    if (!tv) throw ConvergenceError("refine_secondary_bifurcation: t1 undefined at the solution", out.t0, out.epsilon);
    out.t1 = *tv;
    out.transition_j = transition_number(out.t0, out.t1, p_shape);
    if (out.transition_j != ell) {
        throw IndexMismatchError("refine_secondary_bifurcation: converged point has transition number " +
                                 std::to_string(out.transition_j) + ", expected " + std::to_string(ell));
    }
    out.h2 = *smf_value(out.t0, out.epsilon, q, p_shape);
    out.dh2 = *smf_derivative(out.t0, out.epsilon, q, p_shape);
    if (q.same() && ell == 0 && T >= minimum_period(br)) {
        const double bound = std::abs(period_inverse(T, br));
        out.resonance = out.epsilon * std::abs(melnikov(out.t0, q.c, p_shape)) >= bound;
    }
    return out;
}

/// Refined bifurcation points at fixed parameters, ordered by epsilon.
inline std::vector<SecondaryBifurcation> secondary_bifurcations(PairCD q, int ell, const Params& p_shape)
{
    std::vector<SecondaryBifurcation> out;
    for (const auto& s : approx_secondary_bifurcation(q, ell, p_shape)) {
        try {
            out.push_back(refine_secondary_bifurcation(s, q, ell, p_shape));
        } catch (const std::runtime_error&) {
        }
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.epsilon < b.epsilon; });
    if (out.size() > 2) out.resize(2);
    for (std::size_t k = 0; k < out.size(); ++k) out[k].branch_i = static_cast<int>(k) + 1;
    return out;
}

struct CurvePoint {
    double omega;
    SecondaryBifurcation point;
};

struct CurveGap {
    double omega;
    std::string reason;
};

struct BifurcationCurve {
    PairCD pair{};
    int ell = 0;
    int branch_i = 1;
    std::vector<CurvePoint> points;
    std::vector<CurveGap> gaps;
};

/// Sweeps omega, continuing the branch_i-th bifurcation value with linear
/// prolongation in (omega t0, ln eps); falls back to fresh zeroth-order seeds.
inline BifurcationCurve bifurcation_curve(PairCD q, int ell, int branch_i, const std::vector<double>& omegas,
                                          const Params& p_shape)
{
    if (!std::is_sorted(omegas.begin(), omegas.end())) throw std::invalid_argument("bifurcation_curve: omega grid must be sorted");
    BifurcationCurve curve{q, ell, branch_i, {}, {}};
    if (omegas.empty()) return curve;
    const double floor_step = (omegas.back() - omegas.front()) / 1e5;

    auto at = [&](double w) { Params p = p_shape; p.omega = w; return p; };

    if (branch_i != 1 && branch_i != 2) throw std::invalid_argument("bifurcation_curve: branch must be 1 or 2");

    auto fresh = [&](double w) -> std::optional<SecondaryBifurcation> {
        const auto all = secondary_bifurcations(q, ell, at(w));
        if (static_cast<int>(all.size()) < branch_i) return std::nullopt;
        return all[branch_i - 1];
    };

    // History of converged (omega, phase, ln eps) for the predictor.
    struct Hist { double w, phase, le; int arcsin; };
    std::vector<Hist> hist;
    auto predict = [&](double w) -> SmfSeed {
        const auto& a = hist.back();
        double phase = a.phase, le = a.le;
        if (hist.size() >= 2) {
            const auto& b = hist[hist.size() - 2];
            const double f = (w - a.w) / (a.w - b.w);
            phase += f * (a.phase - b.phase);
            le += f * (a.le - b.le);
        }
        return {phase / w, std::exp(le), a.arcsin};
    };
    auto try_from_history = [&](double w) -> std::optional<SecondaryBifurcation> {
        try {
            auto b = refine_secondary_bifurcation(predict(w), q, ell, at(w));
            b.branch_i = branch_i;
            return b;
        } catch (const std::runtime_error&) {
            return std::nullopt;
        }
    };
    auto push = [&](double w, const SecondaryBifurcation& b) {
        double phase = w * b.t0;
        if (!hist.empty()) {
            // Keep the phase continuous across the wrap at omega t0 = 2 pi.
            while (phase - hist.back().phase > pi) phase -= 2 * pi;
            while (hist.back().phase - phase > pi) phase += 2 * pi;
        }
        hist.push_back({w, phase, std::log(b.epsilon), b.arcsin_branch});
    };

    for (double w : omegas) {
        std::optional<SecondaryBifurcation> got;
        if (!hist.empty()) {
            got = try_from_history(w);
            // Sub-step toward w before giving up on continuation.
            if (!got) {
                double step = (w - hist.back().w) / 2;
                const auto saved = hist;
                while (!got && step >= floor_step && step > 0) {
                    double cur = hist.back().w;
                    bool ok = true;
                    while (cur + step < w - 0.5 * step) {
                        auto b = try_from_history(cur + step);
                        if (!b) { ok = false; break; }
                        push(cur + step, *b);
                        cur += step;
                    }
                    if (ok) got = try_from_history(w);
                    if (!got) {
                        hist = saved;
                        step /= 2;
                    }
                }
                if (!got) hist = saved;
            }
        }
        if (!got) got = fresh(w);
        if (!got) {
            curve.gaps.push_back({w, "no converged solution"});
            hist.clear();
            continue;
        }
        push(w, *got);
        curve.points.push_back({w, *got});
    }
    return curve;
}

/// Smallest l whose first bifurcation value lies at or below p.epsilon, per pair.
inline StructuralIndexSet structural_indices(const Params& p, int cap = 12)
{
    if (!(p.epsilon > 0)) throw std::invalid_argument("structural_indices: epsilon must be positive");
    StructuralIndexSet out;
    for (const auto q : all_pairs) {
        for (int ell = 0; ell <= cap; ++ell) {
            const auto b = secondary_bifurcations(q, ell, p);
            if (!b.empty() && b.front().epsilon <= p.epsilon) {
                out[q] = ell;
                break;
            }
        }
    }
    return out;
}

} // namespace afdo
