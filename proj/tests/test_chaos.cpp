#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <stdexcept>

#include "afdo/chaos.hpp"
#include "afdo/parallel.hpp"

using namespace afdo;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("Lyapunov dimension", "[chaos]")
{
    CHECK_THAT(lyapunov_dimension({1.0, -2.0}), WithinAbs(1.5, 1e-15));
    CHECK_THAT(lyapunov_dimension({0.5, -0.5}), WithinAbs(2.0, 1e-15));
    CHECK(lyapunov_dimension({-0.1, -0.3}) == 0.0);
    CHECK_THAT(lyapunov_dimension({-2.0, 1.0}), WithinAbs(1.5, 1e-15));
}

TEST_CASE("sidedness classification mirrors", "[chaos]")
{
    std::vector<PhaseState> right{{0.5, 0.1}, {1.2, -0.3}, {-0.01, 0.0}};
    std::vector<PhaseState> left;
    for (auto s : right) left.push_back({-s.x, s.y});
    CHECK(classify_sidedness(right) == Sidedness::right);
    CHECK(classify_sidedness(left) == Sidedness::left);
    right.push_back({-0.5, 0.0});
    CHECK(classify_sidedness(right) == Sidedness::two_sided);
}

TEST_CASE("unforced damped motion settles into a one-sided sink", "[chaos]")
{
    const Params p{0.3, 0.5, 0.0, 1.0, 0.1};
    const auto r = lyapunov_run({1.2, 0.1}, p);
    CHECK(r.verdict == Verdict::sink);
    REQUIRE(r.sidedness);
    CHECK(*r.sidedness == Sidedness::right);
    CHECK(distance(r.final_state, {1.0, 0.0}) < 1e-6);
    CHECK_THAT(r.exponent_sum(), WithinAbs(expected_exponent_sum(p), 1e-6));

    const auto strong = lyapunov_run({0.9, 0.0}, Params{1.0, 0.5, 0.0, 1.0, 0.0});
    CHECK(strong.verdict == Verdict::sink);
    CHECK(strong.exponents.at(0) < 0);

    const auto cloud = attractor_cloud({-1.3, 0.0}, p, 200, 50);
    REQUIRE(cloud.size() == 50);
    for (const auto& s : cloud) CHECK(distance(s, {-1.0, 0.0}) < 1e-6);
}

TEST_CASE("strange attractor diagnostics", "[chaos]")
{
    // A point on the lr l = 0 secondary bifurcation curve.
    const Params p{0.2558215584347958, 0.05, 1.0, 1.2, 0.0};
    const auto r = lyapunov_run({0.1, 0.1}, p);
    REQUIRE(r.verdict == Verdict::strange_attractor);
    REQUIRE(r.exponents.size() == 2);
    CHECK(r.exponents[0] > 0);
    CHECK(r.exponents[1] < 0);
    CHECK_THAT(r.exponent_sum(), WithinAbs(expected_exponent_sum(p), 1e-3));
    REQUIRE(r.dimension);
    CHECK(*r.dimension > 1);
    CHECK(*r.dimension < 2);
    REQUIRE(r.exponents_per_time.size() == 2);
    CHECK_THAT(r.exponents_per_time[0], WithinRel(r.exponents[0] * std::log(2.0) / p.period(), 1e-12));
    CHECK(std::abs(r.time_exponent) < 1e-9);
}

TEST_CASE("verdict is stable under perturbations inside one basin cell", "[chaos]")
{
    const Params p{0.2558215584347958, 0.05, 1.0, 1.2, 0.0};
    // Default basin cells are 4/33 wide; perturb uniformly within the cell around (0.1, 0.1).
    const double half = 2.0 / 33;
    std::mt19937_64 rng(20261015);
    std::uniform_real_distribution<double> u(-half, half);
    std::vector<PhaseState> starts;
    for (int k = 0; k < 100; ++k) starts.push_back({0.1 + u(rng), 0.1 + u(rng)});
    const auto verdicts = parallel_map(starts.size(), [&](std::size_t k) { return lyapunov_run(starts[k], p).verdict; });
    int same = 0;
    for (auto v : verdicts) same += v == Verdict::strange_attractor;
    INFO("strange attractor verdicts: " << same << " of 100");
    CHECK(same >= 95);
}

TEST_CASE("Lyapunov config validation", "[chaos]")
{
    LyapunovConfig c;
    c.n_fit = 1;
    CHECK_THROWS_AS(lyapunov_run({0, 0}, Params{}, c), std::invalid_argument);
}

TEST_CASE("basins of the unforced system are mirror symmetric", "[chaos]")
{
    GridSpec g;
    g.nx = 16;
    g.ny = 16;
    const Params p{0.5, 0.3, 0.0, 1.0, 0.1};
    BasinOptions one;
    one.workers = 1;
    BasinOptions many;
    many.workers = 3;
    const auto a = basin_map(g, p, {}, {}, one);
    const auto b = basin_map(g, p, {}, {}, many);
    CHECK(a.labels == b.labels);
    const auto f = a.fractions();
    CHECK_THAT(f.left + f.right + f.two_sided + f.escaped + f.unresolved, WithinAbs(1.0, 1e-12));
    CHECK(f.left == f.right);
    CHECK(f.unresolved >= 0);
    for (int j = 0; j < g.ny; ++j) {
        for (int i = 0; i < g.nx; ++i) {
            const auto l = a.at(i, j);
            const auto m = a.at(g.nx - 1 - i, g.ny - 1 - j);
            if (l == BasinLabel::left_attractor) CHECK(m == BasinLabel::right_attractor);
        }
    }
}

TEST_CASE("parallel map keeps input order and rethrows", "[chaos]")
{
    const auto v = parallel_map(100, [](std::size_t i) { return static_cast<int>(i * i); }, 4);
    for (std::size_t i = 0; i < v.size(); ++i) CHECK(v[i] == static_cast<int>(i * i));
    CHECK(parallel_map(0, [](std::size_t i) { return i; }, 4).empty());
    CHECK_THROWS_WITH(parallel_map(
                          10,
                          [](std::size_t i) -> int {
                              if (i == 3 || i == 7) throw std::runtime_error("bad " + std::to_string(i));
                              return 0;
                          },
                          4),
                      "bad 3");
}
