// Command-line front end: figure recipes as key=value files, CSV/JSON/SVG outputs.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "afdo/afdo.hpp"

namespace fs = std::filesystem;
using namespace afdo;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_usage = 2;
constexpr int exit_failure = 3;

/// Raised by a command whose computation produced nothing usable.
class ComputationFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct CommonOptions {
    std::string config;
    std::vector<std::string> sets;
    std::string out = ".";
    unsigned workers = 0;
    bool svg = false;
};

struct Context {
    std::string command;
    KeyValueConfig cfg;
    fs::path out;
    unsigned workers = 0;
    bool svg = false;

    std::string path(const std::string& name) const { return (out / name).string(); }
};

Params read_params(const KeyValueConfig& c, Params d)
{
    Params p{c.get_double("epsilon", d.epsilon), c.get_double("delta", d.delta), c.get_double("gamma", d.gamma),
             c.get_double("omega", d.omega), c.get_double("beta", d.beta)};
    p.validate();
    return p;
}

IntegratorConfig read_integrator(const KeyValueConfig& c)
{
    IntegratorConfig i;
    i.rel_tol = c.get_double("rel_tol", i.rel_tol);
    i.abs_tol = c.get_double("abs_tol", i.abs_tol);
    i.max_step = c.get_double("max_step", i.max_step);
    i.escape_radius = c.get_double("escape_radius", i.escape_radius);
    i.validate();
    return i;
}

LyapunovConfig read_lyapunov(const KeyValueConfig& c)
{
    LyapunovConfig l;
    l.n_transient = c.get_int("n_transient", l.n_transient);
    l.n_fit = c.get_int("n_fit", l.n_fit);
    l.slope_tol = c.get_double("slope_tol", l.slope_tol);
    l.max_iters = c.get_int("max_iters", l.max_iters);
    l.x_band = c.get_double("x_band", l.x_band);
    l.n_samples = c.get_int("n_samples", l.n_samples);
    l.validate();
    return l;
}

std::vector<double> read_range(const KeyValueConfig& c, const std::string& name, double lo, double hi, int count)
{
    const double a = c.get_double(name + "_min", lo);
    const double b = c.get_double(name + "_max", hi);
    const int n = c.get_int(name + "_count", count);
    if (n < 1 || (n > 1 && !(b > a))) throw ConfigError(name + ": range must be non-empty with max > min");
    return linspace(a, b, n);
}

/// Curve reference "pair:ell:branch", e.g. "lr:0:1".
struct CurveRef {
    PairCD pair;
    int ell;
    int branch;
};

CurveRef parse_curve(const std::string& s)
{
    std::stringstream ss(s);
    std::string a, b, c;
    if (!std::getline(ss, a, ':') || !std::getline(ss, b, ':') || !std::getline(ss, c)) {
        throw ConfigError("curve must look like pair:ell:branch, got '" + s + "'");
    }
    try {
        CurveRef r{parse_pair(a), std::stoi(b), std::stoi(c)};
        if (r.ell < 0 || (r.branch != 1 && r.branch != 2)) throw ConfigError("curve: ell >= 0 and branch 1 or 2 required");
        return r;
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception&) {
        throw ConfigError("curve must look like pair:ell:branch, got '" + s + "'");
    }
}

std::string join(const std::vector<std::string>& v, const char* sep)
{
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? sep : "") + v[i];
    return out;
}

void finish_settings(const Context& ctx)
{
    const auto unused = ctx.cfg.unused_keys();
    if (!unused.empty()) throw ConfigError("unknown setting(s) for '" + ctx.command + "': " + join(unused, ", "));
}

void write_run_metadata(const Context& ctx, const nlohmann::ordered_json& extra = {})
{
    nlohmann::ordered_json j;
    j["command"] = ctx.command;
    nlohmann::ordered_json settings = nlohmann::ordered_json::object();
    for (const auto& [k, v] : ctx.cfg.values()) settings[k] = v;
    j["settings"] = settings;
    if (!extra.is_null()) j["notes"] = extra;
    std::ofstream f(ctx.path("run.json"), std::ios::binary);
    f << j.dump(2) << '\n';
}

std::pair<double, double> bounds(const std::vector<double>& v, double pad = 0.05)
{
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (double x : v) {
        if (std::isfinite(x)) {
            lo = std::min(lo, x);
            hi = std::max(hi, x);
        }
    }
    if (!std::isfinite(lo)) return {0, 1};
    if (hi - lo < 1e-12) {
        lo -= 0.5;
        hi += 0.5;
    }
    const double d = (hi - lo) * pad;
    return {lo - d, hi + d};
}

// ---------------------------------------------------------------------------

int cmd_melnikov(Context& ctx)
{
    const auto omegas = read_range(ctx.cfg, "omega", 0.1, 6.0, 120);
    const auto ratios = read_range(ctx.cfg, "delta_over_gamma", 0.02, 2.0, 100);
    const auto xs = read_range(ctx.cfg, "x", 0.0, 3.0, 61);
    const double beta = ctx.cfg.get_double("beta", 0.1);
    finish_settings(ctx);

    CsvTable amp({"omega", "f1", "f2", "f2_over_f1", "f_left", "f_right", "r0_minus", "r0_plus"});
    CsvTable reg({"omega", "delta_over_gamma", "region", "tangency"});
    for (double w : omegas) {
        const auto c = melnikov_coeffs(w, beta);
        const auto th = primary_thresholds(w, beta);
        amp.row() << w << c.f1 << c.f2 << f_ratio(w) << c.f_left << c.f_right << th.r0_minus << th.r0_plus;
        for (double r : ratios) {
            Params p{0.0, r, 1.0, w, beta};
            const auto info = classify_region(p);
            reg.row() << w << r << to_string(info.region) << info.tangency;
        }
    }
    CsvTable rx({"x", "r"});
    for (double x : xs) rx.row() << x << threshold_ratio(x);
    amp.save(ctx.path("melnikov_amplitude.csv"));
    reg.save(ctx.path("regions.csv"));
    rx.save(ctx.path("threshold_ratio.csv"));

    if (ctx.svg) {
        std::vector<double> ys;
        std::vector<PhaseState> a, b;
        for (double w : omegas) {
            a.push_back({w, f1(w)});
            b.push_back({w, f2(w)});
            ys.push_back(f1(w));
            ys.push_back(f2(w));
        }
        const auto [y0, y1] = bounds(ys);
        SvgPlot plot(omegas.front(), std::max(omegas.back(), omegas.front() + 1e-9), y0, y1);
        plot.polyline(a, "#1f77b4", 1.5);
        plot.polyline(b, "#d62728", 1.5);
        plot.label("Melnikov amplitudes F1 (blue), F2 (red) vs omega");
        plot.save(ctx.path("melnikov_amplitude.svg"));

        const double dw = omegas.size() > 1 ? omegas[1] - omegas[0] : 1.0;
        const double dr = ratios.size() > 1 ? ratios[1] - ratios[0] : 1.0;
        SvgPlot map(ratios.front() - dr / 2, ratios.back() + dr / 2, omegas.front() - dw / 2, omegas.back() + dw / 2);
        for (double w : omegas) {
            for (double r : ratios) {
                const auto info = classify_region(Params{0.0, r, 1.0, w, beta});
                const char* color = info.region == Region::I ? "#f0f0f0" : info.region == Region::II ? "#9ecae1" : "#3182bd";
                map.rect(r - dr / 2, w - dw / 2, dr, dw, color);
            }
        }
        map.label("Regions I (light), II, III (dark) over (delta/gamma, omega)");
        map.save(ctx.path("regions.svg"));
    }
    write_run_metadata(ctx);
    return exit_ok;
}

// ---------------------------------------------------------------------------

int cmd_smf_curves(Context& ctx)
{
    const Params shape = read_params(ctx.cfg, {0.0, 0.05, 1.0, 1.0, 0.0});
    const auto omegas = read_range(ctx.cfg, "omega", 0.5, 3.0, 101);
    std::vector<PairCD> pairs;
    for (const auto& s : ctx.cfg.get_strings("pairs", {"ll", "lr", "rl", "rr"})) {
        try {
            pairs.push_back(parse_pair(s));
        } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("pairs: ") + e.what());
        }
    }
    std::vector<int> ells;
    for (double e : ctx.cfg.get_doubles("ells", {0, 1, 2})) {
        if (e < 0 || e != std::floor(e)) throw ConfigError("ells: expected non-negative integers");
        ells.push_back(static_cast<int>(e));
    }
    finish_settings(ctx);

    struct Task {
        PairCD q;
        int ell;
        int branch;
    };
    std::vector<Task> tasks;
    for (auto q : pairs) {
        for (int ell : ells) {
            for (int b : {1, 2}) tasks.push_back({q, ell, b});
        }
    }
    const auto curves = parallel_map(
        tasks.size(), [&](std::size_t k) { return bifurcation_curve(tasks[k].q, tasks[k].ell, tasks[k].branch, omegas, shape); },
        ctx.workers);

    std::size_t total_points = 0;
    std::vector<std::string> diagnostics;
    std::vector<std::vector<PhaseState>> plot_lines;
    for (std::size_t k = 0; k < tasks.size(); k += 2) {
        const auto& c1 = curves[k];
        const auto& c2 = curves[k + 1];
        const auto q = tasks[k].q;
        const int ell = tasks[k].ell;
        auto lookup = [&](const BifurcationCurve& c, double w) -> const SecondaryBifurcation* {
            for (const auto& pt : c.points) {
                if (pt.omega == w) return &pt.point;
            }
            return nullptr;
        };
        auto gap = [&](const BifurcationCurve& c, double w) -> std::string {
            for (const auto& g : c.gaps) {
                if (g.omega == w) return g.reason;
            }
            return {};
        };
        CsvTable t({"omega", "epsilon1", "epsilon2", "t0_1", "t0_2", "transition_j", "lower_bound", "resonance_flag", "errors"});
        for (double w : omegas) {
            Params p = shape;
            p.omega = w;
            const auto* b1 = lookup(c1, w);
            const auto* b2 = lookup(c2, w);
            std::vector<std::string> errs;
            if (!b1) errs.push_back("branch1: " + gap(c1, w));
            if (!b2) errs.push_back("branch2: " + gap(c2, w));
            std::optional<int> j;
            if (b1) j = b1->transition_j;
            else if (b2) j = b2->transition_j;
            const double lb = lower_bound_epsilon(q, ell, p);
            t.row() << w << (b1 ? std::optional(b1->epsilon) : std::nullopt) << (b2 ? std::optional(b2->epsilon) : std::nullopt)
                    << (b1 ? std::optional(b1->t0) : std::nullopt) << (b2 ? std::optional(b2->t0) : std::nullopt) << j << lb
                    << ((b1 && b1->resonance) || (b2 && b2->resonance)) << join(errs, "; ");
        }
        total_points += c1.points.size() + c2.points.size();
        t.save(ctx.path("smf_" + to_string(q) + "_l" + std::to_string(ell) + ".csv"));
        for (const auto* c : {&c1, &c2}) {
            std::vector<PhaseState> line;
            for (const auto& pt : c->points) line.push_back({pt.omega, std::log10(pt.point.epsilon)});
            plot_lines.push_back(line);
            if (c->points.empty()) {
                diagnostics.push_back(to_string(q) + " l=" + std::to_string(ell) + " branch " + std::to_string(c->branch_i) +
                                      ": no converged points");
            }
        }
    }
    write_run_metadata(ctx, {{"gamma_assumption", "gamma is taken from the settings (default 1); only eps*gamma and eps*delta enter the dynamics"}});
    if (total_points == 0) {
        std::ofstream f(ctx.path("errors.txt"), std::ios::binary);
        for (const auto& d : diagnostics) f << d << '\n';
        throw ComputationFailure("no secondary bifurcation point converged; see errors.txt");
    }
    if (ctx.svg) {
        std::vector<double> ys;
        for (const auto& l : plot_lines) {
            for (const auto& p : l) ys.push_back(p.y);
        }
        const auto [y0, y1] = bounds(ys);
        SvgPlot plot(omegas.front(), std::max(omegas.back(), omegas.front() + 1e-9), y0, y1);
        const char* colors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};
        for (std::size_t k = 0; k < plot_lines.size(); ++k) plot.polyline(plot_lines[k], colors[(k / 2) % 8], k % 2 ? 1.0 : 2.0);
        plot.label("log10 epsilon of secondary bifurcations vs omega");
        plot.save(ctx.path("smf_curves.svg"));
    }
    return exit_ok;
}

// ---------------------------------------------------------------------------

int cmd_manifolds(Context& ctx)
{
    const Params p = read_params(ctx.cfg, {0.01, 0.3, 1.0, 1.0, 0.1});
    const auto icfg = read_integrator(ctx.cfg);
    ManifoldConfig mc;
    mc.theta = ctx.cfg.get_double("theta", mc.theta);
    mc.seed_distance = ctx.cfg.get_double("seed_distance", mc.seed_distance);
    mc.max_gap = ctx.cfg.get_double("max_gap", mc.max_gap);
    mc.max_angle = ctx.cfg.get_double("max_angle", mc.max_angle);
    mc.max_length = ctx.cfg.get_double("max_length", 10.0);
    mc.max_sigma = ctx.cfg.get_double("max_sigma", mc.max_sigma);
    mc.workers = ctx.workers;
    mc.integrator = icfg;
    mc.validate();
    std::vector<Side> sides;
    for (const auto& s : ctx.cfg.get_strings("sides", {"left", "right"})) {
        if (s == "left") sides.push_back(Side::left);
        else if (s == "right") sides.push_back(Side::right);
        else throw ConfigError("sides: expected left and/or right");
    }
    finish_settings(ctx);

    CsvTable summary({"side", "unstable_points", "stable_points", "unstable_length", "stable_length", "pips", "lobes",
                      "alternating", "escaped", "truncated", "d0_area", "epsilon_flux_out", "errors"});
    std::optional<SvgPlot> plot;
    if (ctx.svg) plot.emplace(-2.0, 2.0, -1.5, 1.5, 800, 600);
    int ok = 0;
    for (Side side : sides) {
        const std::string sn(to_string(side));
        try {
            const auto tg = compute_tangle(side, p, mc);
            auto dump = [&](const ManifoldCurve& c) {
                CsvTable t({"sigma", "arclength", "x", "y"});
                for (std::size_t k = 0; k < c.size(); ++k) t.row() << c.sigma[k] << c.arclength[k] << c.points[k].x << c.points[k].y;
                t.save(ctx.path("manifold_" + sn + "_" + std::string(to_string(c.kind)) + ".csv"));
            };
            dump(tg.unstable);
            dump(tg.stable);
            CsvTable pips({"k", "label", "x", "y", "sigma_u", "sigma_s", "angle", "near_tangent"});
            for (std::size_t k = 0; k < tg.pips.size(); ++k) {
                const auto& c = tg.pips[k].crossing;
                pips.row() << k << to_string(tg.pips[k].label) << c.point.x << c.point.y << c.sigma_u << c.sigma_s << c.angle
                           << tg.pips[k].near_tangent;
            }
            pips.save(ctx.path("pips_" + sn + ".csv"));
            CsvTable lobes({"kind", "index", "sigma_u0", "sigma_u1", "sigma_s0", "sigma_s1", "area"});
            for (const auto& L : tg.lobes) lobes.row() << to_string(L.kind) << L.index << L.u0 << L.u1 << L.s0 << L.s1 << L.area;
            lobes.save(ctx.path("lobes_" + sn + ".csv"));
            const Lobe* d0 = tg.find(LobeKind::D, 0);
            summary.row() << sn << tg.unstable.size() << tg.stable.size() << tg.unstable.length() << tg.stable.length()
                          << tg.pips.size() << tg.lobes.size() << tg.alternating << (tg.unstable.escaped || tg.stable.escaped)
                          << (tg.unstable.truncated || tg.stable.truncated) << (d0 ? std::optional(d0->area) : std::nullopt)
                          << p.epsilon * flux_out(side, p) << "";
            if (plot) {
                plot->polyline(tg.unstable.points, "#d62728", 0.8);
                plot->polyline(tg.stable.points, "#1f77b4", 0.8);
                std::vector<PhaseState> pts;
                for (const auto& q : tg.pips) pts.push_back(q.crossing.point);
                plot->points(pts, "black", 2.0);
            }
            ++ok;
        } catch (const std::runtime_error& e) {
            summary.row() << sn << 0 << 0 << 0.0 << 0.0 << 0 << 0 << false << false << false << std::optional<double>{}
                          << p.epsilon * flux_out(side, p) << e.what();
        }
    }
    summary.save(ctx.path("manifold_summary.csv"));
    if (plot) {
        plot->label("Unstable (red) and stable (blue) manifolds with primary intersection points");
        plot->save(ctx.path("manifolds.svg"));
    }
    write_run_metadata(ctx);
    if (ok == 0) throw ComputationFailure("no manifold branch could be computed; see manifold_summary.csv");
    return exit_ok;
}

// ---------------------------------------------------------------------------

int cmd_lyapunov(Context& ctx)
{
    const auto icfg = read_integrator(ctx.cfg);
    const auto lcfg = read_lyapunov(ctx.cfg);
    const std::string curve_spec = ctx.cfg.get_string("curve", "");

    if (curve_spec.empty()) {
        const Params p = read_params(ctx.cfg, {0.3, 0.05, 1.0, 1.2, 0.0});
        const PhaseState s0{ctx.cfg.get_double("x0", 0.1), ctx.cfg.get_double("y0", 0.1)};
        finish_settings(ctx);
        const auto rep = lyapunov_run(s0, p, lcfg, icfg);
        nlohmann::ordered_json j;
        j["params"] = to_json(p);
        j["initial_state"] = {s0.x, s0.y};
        j["report"] = to_json(rep);
        j["expected_exponent_sum"] = expected_exponent_sum(p);
        std::ofstream f(ctx.path("lyapunov.json"), std::ios::binary);
        f << j.dump(2) << '\n';
        write_run_metadata(ctx);
        return exit_ok;
    }

    const auto ref = parse_curve(curve_spec);
    const std::string ref_spec = ctx.cfg.get_string("reference_curve", "");
    const std::optional<CurveRef> reference = ref_spec.empty() ? std::nullopt : std::optional(parse_curve(ref_spec));
    const Params shape = read_params(ctx.cfg, {0.0, 0.05, 1.0, 1.0, 0.0});
    const auto omegas = read_range(ctx.cfg, "omega", 0.8, 1.7, 91);
    const auto x0s = ctx.cfg.get_doubles("x0", {0.1});
    const auto y0s = ctx.cfg.get_doubles("y0", {0.1});
    if (x0s.size() != y0s.size() || x0s.empty()) throw ConfigError("x0 and y0 lists must have the same non-zero length");
    finish_settings(ctx);

    const auto curve = bifurcation_curve(ref.pair, ref.ell, ref.branch, omegas, shape);
    std::optional<BifurcationCurve> refc;
    if (reference) refc = bifurcation_curve(reference->pair, reference->ell, reference->branch, omegas, shape);
    if (curve.points.empty()) throw ComputationFailure("the requested bifurcation curve has no converged points");

    struct Task {
        double omega, epsilon;
        PhaseState s0;
        std::optional<double> ref_eps;
    };
    std::vector<Task> tasks;
    for (const auto& pt : curve.points) {
        std::optional<double> re;
        if (refc) {
            for (const auto& r : refc->points) {
                if (r.omega == pt.omega) re = r.point.epsilon;
            }
        }
        for (std::size_t k = 0; k < x0s.size(); ++k) tasks.push_back({pt.omega, pt.point.epsilon, {x0s[k], y0s[k]}, re});
    }
    struct Outcome {
        std::optional<LyapunovReport> rep;
        std::string error;
    };
    const auto results = parallel_map(
        tasks.size(),
        [&](std::size_t k) -> Outcome {
            Params p = shape;
            p.omega = tasks[k].omega;
            p.epsilon = tasks[k].epsilon;
            try {
                return {lyapunov_run(tasks[k].s0, p, lcfg, icfg), ""};
            } catch (const std::exception& e) {
                return {std::nullopt, e.what()};
            }
        },
        ctx.workers);

    CsvTable t({"omega", "epsilon", "x0", "y0", "verdict", "lambda1", "lambda2", "lambda1_ln_per_time", "lambda2_ln_per_time",
                "dimension", "sidedness", "iterations", "exponent_sum", "expected_sum", "sum_error", "sum_ok",
                "reference_epsilon", "above_reference", "errors"});
    std::vector<PhaseState> sa_points, other_points;
    for (std::size_t k = 0; k < tasks.size(); ++k) {
        const auto& tk = tasks[k];
        Params p = shape;
        p.omega = tk.omega;
        p.epsilon = tk.epsilon;
        auto row = t.row();
        row << tk.omega << tk.epsilon << tk.s0.x << tk.s0.y;
        const auto& o = results[k];
        const auto above = tk.ref_eps ? std::optional<int>(tk.epsilon > *tk.ref_eps) : std::nullopt;
        if (!o.rep || o.rep->exponents.size() < 2) {
            row << (o.rep ? to_string(o.rep->verdict) : std::string_view("error")) << std::optional<double>{}
                << std::optional<double>{} << std::optional<double>{} << std::optional<double>{} << std::optional<double>{}
                << "" << (o.rep ? o.rep->iterations_used : 0) << std::optional<double>{} << expected_exponent_sum(p)
                << std::optional<double>{} << "" << tk.ref_eps << above << o.error;
            continue;
        }
        const auto& r = *o.rep;
        const double err = std::abs(r.exponent_sum() - expected_exponent_sum(p));
        row << to_string(r.verdict) << r.exponents[0] << r.exponents[1] << r.exponents_per_time[0] << r.exponents_per_time[1]
            << r.dimension << (r.sidedness ? to_string(*r.sidedness) : std::string_view("")) << r.iterations_used
            << r.exponent_sum() << expected_exponent_sum(p) << err << (err <= 1e-2) << tk.ref_eps << above << "";
        (r.verdict == Verdict::strange_attractor ? sa_points : other_points).push_back({tk.omega, r.exponents[0]});
    }
    t.save(ctx.path("lyapunov_sweep.csv"));
    if (ctx.svg) {
        std::vector<double> ys;
        for (const auto* v : {&sa_points, &other_points}) {
            for (const auto& p : *v) ys.push_back(p.y);
        }
        const auto [y0, y1] = bounds(ys);
        SvgPlot plot(omegas.front(), std::max(omegas.back(), omegas.front() + 1e-9), y0, y1);
        plot.points(other_points, "#999999", 2.0);
        plot.points(sa_points, "#d62728", 2.5);
        plot.label("Largest exponent (log2/iterate) along the curve; strange attractors in red");
        plot.save(ctx.path("lyapunov_sweep.svg"));
    }
    write_run_metadata(ctx, {{"gamma_assumption", "gamma is taken from the settings (default 1); only eps*gamma and eps*delta enter the dynamics"}});
    return exit_ok;
}

// ---------------------------------------------------------------------------

int cmd_basins(Context& ctx)
{
    const auto icfg = read_integrator(ctx.cfg);
    const auto lcfg = read_lyapunov(ctx.cfg);
    const Params shape = read_params(ctx.cfg, {0.5, 1.5, 1.0, 1.0, 0.1});
    GridSpec g;
    g.x_min = ctx.cfg.get_double("x_min", g.x_min);
    g.x_max = ctx.cfg.get_double("x_max", g.x_max);
    g.y_min = ctx.cfg.get_double("y_min", g.y_min);
    g.y_max = ctx.cfg.get_double("y_max", g.y_max);
    g.nx = ctx.cfg.get_int("nx", g.nx);
    g.ny = ctx.cfg.get_int("ny", g.ny);
    g.offset_x = ctx.cfg.get_double("offset_x", g.offset_x);
    g.offset_y = ctx.cfg.get_double("offset_y", g.offset_y);
    g.validate();
    BasinOptions opt;
    opt.workers = ctx.workers;
    std::vector<double> eps = ctx.cfg.get_doubles("epsilons", {});
    if (eps.empty()) {
        eps = ctx.cfg.has("epsilon_min") ? read_range(ctx.cfg, "epsilon", 0, 0, 1) : std::vector<double>{shape.epsilon};
    }
    const bool annotate = ctx.cfg.get_bool("annotate", true);
    finish_settings(ctx);

    std::vector<double> marks;
    if (annotate) {
        for (auto q : all_pairs) {
            for (const auto& b : secondary_bifurcations(q, 1, shape)) marks.push_back(b.epsilon);
        }
        std::sort(marks.begin(), marks.end());
    }
    CsvTable summary({"epsilon", "left", "right", "two_sided", "escaped", "unresolved", "nearby_bifurcations"});
    std::vector<BasinGrid> grids;
    for (double e : eps) grids.push_back(basin_map(g, shape.with_epsilon(e), lcfg, icfg, opt));
    std::vector<BasinSweepRow> rows;
    for (std::size_t k = 0; k < eps.size(); ++k) rows.push_back({eps[k], grids[k].fractions(), {}});
    for (double a : marks) {
        std::size_t best = 0;
        for (std::size_t k = 1; k < rows.size(); ++k) {
            if (std::abs(rows[k].epsilon - a) < std::abs(rows[best].epsilon - a)) best = k;
        }
        rows[best].nearby_bifurcations.push_back(a);
    }
    for (std::size_t k = 0; k < rows.size(); ++k) {
        const auto& f = rows[k].fractions;
        std::vector<std::string> m;
        for (double a : rows[k].nearby_bifurcations) m.push_back(format_double(a));
        summary.row() << rows[k].epsilon << f.left << f.right << f.two_sided << f.escaped << f.unresolved << join(m, ";");

        CsvTable cells({"i", "j", "x", "y", "label"});
        for (int j = 0; j < g.ny; ++j) {
            for (int i = 0; i < g.nx; ++i) {
                const auto c = g.center(i, j);
                cells.row() << i << j << c.x << c.y << to_string(grids[k].at(i, j));
            }
        }
        cells.save(ctx.path("basin_" + std::to_string(k) + ".csv"));
        if (ctx.svg) {
            const double dx = (g.x_max - g.x_min) / g.nx, dy = (g.y_max - g.y_min) / g.ny;
            SvgPlot plot(g.x_min, g.x_max, g.y_min, g.y_max, 480, 480);
            for (int j = 0; j < g.ny; ++j) {
                for (int i = 0; i < g.nx; ++i) {
                    const auto l = grids[k].at(i, j);
                    const char* color = l == BasinLabel::left_attractor    ? "#1f77b4"
                                        : l == BasinLabel::right_attractor ? "#d62728"
                                        : l == BasinLabel::two_sided_attractor ? "#2ca02c"
                                        : l == BasinLabel::escaped         ? "#000000"
                                                                           : "#cccccc";
                    plot.rect(g.x_min + i * dx, g.y_min + j * dy, dx, dy, color);
                }
            }
            plot.label("Basins: left (blue), right (red), two-sided (green)");
            plot.save(ctx.path("basin_" + std::to_string(k) + ".svg"));
        }
    }
    summary.save(ctx.path("basin_summary.csv"));
    write_run_metadata(ctx);
    return exit_ok;
}

// ---------------------------------------------------------------------------

int cmd_attractor(Context& ctx)
{
    const auto icfg = read_integrator(ctx.cfg);
    const Params p = read_params(ctx.cfg, {1.0, 0.05, 1.0, 1.2, 0.0});
    const PhaseState s0{ctx.cfg.get_double("x0", 0.1), ctx.cfg.get_double("y0", 0.1)};
    const int n_transient = ctx.cfg.get_int("n_transient", 500);
    const int n_points = ctx.cfg.get_int("n_points", 5000);
    const double theta = ctx.cfg.get_double("theta", 0.0);
    if (n_transient < 0 || n_points < 1) throw ConfigError("n_transient >= 0 and n_points >= 1 required");
    finish_settings(ctx);

    const auto cloud = attractor_cloud(s0, p, n_transient, n_points, theta, icfg);
    CsvTable t({"k", "x", "y"});
    for (std::size_t k = 0; k < cloud.size(); ++k) t.row() << k << cloud[k].x << cloud[k].y;
    t.save(ctx.path("attractor.csv"));
    if (ctx.svg) {
        std::vector<double> xs, ys;
        for (const auto& s : cloud) {
            xs.push_back(s.x);
            ys.push_back(s.y);
        }
        const auto [x0, x1] = bounds(xs);
        const auto [y0, y1] = bounds(ys);
        SvgPlot plot(x0, x1, y0, y1);
        plot.points(cloud, "#222222", 0.6);
        plot.label("Poincare section samples of the attractor");
        plot.save(ctx.path("attractor.svg"));
    }
    write_run_metadata(ctx);
    return exit_ok;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Asymmetrically forced damped Duffing oscillator: Melnikov analysis, homoclinic tangles and chaos"};
    app.require_subcommand(1);

    struct Command {
        const char* name;
        const char* help;
        std::function<int(Context&)> run;
    };
    const std::vector<Command> commands{
        {"melnikov", "Melnikov amplitudes, primary thresholds and region maps", cmd_melnikov},
        {"smf-curves", "Secondary homoclinic bifurcation curves", cmd_smf_curves},
        {"manifolds", "Stable/unstable manifolds, primary intersection points and lobes", cmd_manifolds},
        {"lyapunov", "Lyapunov exponents for one point or along a bifurcation curve", cmd_lyapunov},
        {"basins", "Basins of attraction and their fractions", cmd_basins},
        {"attractor", "Poincare-section point cloud of an attractor", cmd_attractor},
    };
    std::vector<CommonOptions> opts(commands.size());
    std::vector<CLI::App*> subs;
    for (std::size_t k = 0; k < commands.size(); ++k) {
        auto* sub = app.add_subcommand(commands[k].name, commands[k].help);
        sub->add_option("-c,--config", opts[k].config, "key=value settings file")->check(CLI::ExistingFile);
        sub->add_option("-s,--set", opts[k].sets, "override one setting, key=value (repeatable)");
        sub->add_option("-o,--out", opts[k].out, "output directory (created if missing)");
        sub->add_option("-j,--workers", opts[k].workers, "worker threads (0 = hardware concurrency)");
        sub->add_flag("--svg", opts[k].svg, "also render SVG plots");
        subs.push_back(sub);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? exit_ok : exit_usage;
    }

    for (std::size_t k = 0; k < commands.size(); ++k) {
        if (!subs[k]->parsed()) continue;
        Context ctx;
        ctx.command = commands[k].name;
        ctx.workers = opts[k].workers;
        ctx.svg = opts[k].svg;
        try {
            if (!opts[k].config.empty()) ctx.cfg.load(opts[k].config);
            for (const auto& s : opts[k].sets) ctx.cfg.set(s);
            const std::string declared = ctx.cfg.get_string("command", ctx.command);
            if (declared != ctx.command) {
                throw ConfigError("settings file is a recipe for '" + declared + "', not '" + ctx.command + "'");
            }
            ctx.out = opts[k].out;
            std::error_code ec;
            fs::create_directories(ctx.out, ec);
            if (ec || !fs::is_directory(ctx.out)) throw ConfigError("cannot create output directory " + opts[k].out);
            return commands[k].run(ctx);
        } catch (const std::invalid_argument& e) {
            std::cerr << "afdo " << ctx.command << ": usage error: " << e.what() << '\n';
            return exit_usage;
        } catch (const std::exception& e) {
            std::cerr << "afdo " << ctx.command << ": computation failed: " << e.what() << '\n';
            return exit_failure;
        }
    }
    return exit_usage;
}
