#include <catch_amalgamated.hpp>

#include <cmath>
#include <limits>

#include "afdo/smf.hpp"

using namespace afdo;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {
const PairCD ll{Side::left, Side::left};
const PairCD lr{Side::left, Side::right};
const PairCD rl{Side::right, Side::left};
const PairCD rr{Side::right, Side::right};
} // namespace

TEST_CASE("pair parsing", "[smf]")
{
    CHECK(parse_pair("lr") == lr);
    CHECK(to_string(rl) == "rl");
    CHECK_THROWS_AS(parse_pair("lx"), std::invalid_argument);
    CHECK_THROWS_AS(parse_pair("l"), std::invalid_argument);
}

TEST_CASE("t1 uses the period at energy eps M_c", "[smf]")
{
    const Params p{0.1, 0.05, 1.0, 1.5, 0.1};
    // M_c < 0 keeps the orbit inside the loop for one inner period; M_c > 0 sends it
    // around the outer orbit for half a period. The pair only selects the side c.
    for (double t0 : {0.3, 1.5, 3.0, 4.4}) {
        const double mc = melnikov(t0, Side::left, p);
        const auto a = t1(t0, p.epsilon, ll, p);
        const auto b = t1(t0, p.epsilon, lr, p);
        REQUIRE(a);
        REQUIRE(b);
        CHECK(*a == *b);
        if (mc < 0) CHECK_THAT(*a - t0, WithinRel(period(p.epsilon * mc, EnergyBranch::inner_left), 1e-12));
        if (mc > 0) CHECK_THAT(*a - t0, WithinRel(0.5 * period(p.epsilon * mc, EnergyBranch::outer), 1e-12));
    }
    CHECK_THROWS_AS(t1(0.3, 0.0, ll, p), std::invalid_argument);
}

TEST_CASE("SMF derivative agrees with finite differences", "[smf]")
{
    const Params p{0.05, 0.05, 1.0, 1.5, 0.1};
    for (auto q : all_pairs) {
        for (double t0 = 0.05; t0 < p.period(); t0 += 0.37) {
            const auto d = smf_derivative(t0, p.epsilon, q, p);
            const double h = 1e-6;
            const auto a = smf_value(t0 + h, p.epsilon, q, p);
            const auto b = smf_value(t0 - h, p.epsilon, q, p);
            if (!d || !a || !b) continue;
            CHECK_THAT(*d, WithinAbs((*a - *b) / (2 * h), 1e-5 * (1 + std::abs(*d))));
        }
    }
}

TEST_CASE("Melnikov inverse", "[smf]")
{
    const Params p{0.1, 0.3, 1.0, 1.0, 0.1};
    for (int br : {1, 2}) {
        const auto t = melnikov_inverse(0.2, Side::right, br, p);
        REQUIRE(t);
        CHECK_THAT(melnikov(*t, Side::right, p), WithinAbs(0.2, 1e-12));
    }
    CHECK_FALSE(melnikov_inverse(100.0, Side::right, 1, p));
}

TEST_CASE("refined bifurcation points are double roots of the SMF", "[smf]")
{
    const Params shape{0.0, 0.05, 1.0, 2.0, 0.1};
    for (auto q : all_pairs) {
        const auto bs = secondary_bifurcations(q, 1, shape);
        REQUIRE_FALSE(bs.empty());
        for (const auto& b : bs) {
            CHECK(b.transition_j == 1);
            CHECK(b.t0 >= 0);
            CHECK(b.t0 < shape.period());
            CHECK(std::abs(b.h2) < 1e-8);
            CHECK(std::abs(b.dh2) < 1e-6);
            // h2 keeps one sign nearby at this epsilon: a tangency, not a crossing.
            const auto left = smf_value(b.t0 - 1e-3, b.epsilon, q, shape);
            const auto right = smf_value(b.t0 + 1e-3, b.epsilon, q, shape);
            REQUIRE(left);
            REQUIRE(right);
            CHECK(*left * *right > 0);
        }
        if (bs.size() == 2) {
            CHECK(bs[0].epsilon <= bs[1].epsilon);
            CHECK(bs[0].branch_i == 1);
            CHECK(bs[1].branch_i == 2);
        }
    }
}

TEST_CASE("symmetric forcing makes ll and rr curves identical", "[smf]")
{
    const Params shape{0.0, 0.05, 1.0, 1.5, 0.0};
    const auto a = secondary_bifurcations(ll, 1, shape);
    const auto b = secondary_bifurcations(rr, 1, shape);
    REQUIRE(a.size() == b.size());
    for (std::size_t k = 0; k < a.size(); ++k) CHECK_THAT(a[k].epsilon, WithinRel(b[k].epsilon, 1e-8));
    const auto c = secondary_bifurcations(lr, 1, shape);
    const auto d = secondary_bifurcations(rl, 1, shape);
    REQUIRE(c.size() == d.size());
    for (std::size_t k = 0; k < c.size(); ++k) CHECK_THAT(c[k].epsilon, WithinRel(d[k].epsilon, 1e-8));
}

TEST_CASE("lower bound dominates every bifurcation value", "[smf]")
{
    for (auto q : all_pairs) {
        for (int ell : {0, 1, 2}) {
            for (double w : {0.9, 1.4, 2.1}) {
                const Params p{0.0, 0.05, 1.0, w, 0.1};
                const double lb = lower_bound_epsilon(q, ell, p);
                for (const auto& b : secondary_bifurcations(q, ell, p)) CHECK(b.epsilon > lb);
            }
        }
    }
    // No inner orbit is shorter than pi sqrt2, so a short forcing period rules out l = 0 for c = d.
    CHECK(std::isinf(lower_bound_epsilon(ll, 0, Params{0.0, 0.05, 1.0, 2.0, 0.0})));
}

TEST_CASE("bifurcation values grow with l", "[smf]")
{
    const Params shape{0.0, 0.05, 1.0, 1.5, 0.0};
    // Longer transitions need orbits closer to the separatrix, hence smaller epsilon.
    double prev = std::numeric_limits<double>::infinity();
    for (int ell : {1, 2, 3}) {
        const auto bs = secondary_bifurcations(lr, ell, shape);
        REQUIRE_FALSE(bs.empty());
        CHECK(bs[0].epsilon < prev);
        prev = bs[0].epsilon;
    }
}

TEST_CASE("continued curve is smooth and matches fresh solves", "[smf]")
{
    const Params shape{0.0, 0.05, 1.0, 1.0, 0.0};
    std::vector<double> omegas;
    for (int k = 0; k <= 20; ++k) omegas.push_back(1.6 + 0.02 * k);
    const auto c = bifurcation_curve(lr, 1, 1, omegas, shape);
    REQUIRE(c.points.size() == omegas.size());
    for (std::size_t k = 1; k < c.points.size(); ++k) {
        CHECK(std::abs(std::log(c.points[k].point.epsilon / c.points[k - 1].point.epsilon)) < 0.2);
    }
    Params p = shape;
    p.omega = omegas[10];
    CHECK_THAT(c.points[10].point.epsilon, WithinRel(secondary_bifurcations(lr, 1, p)[0].epsilon, 1e-8));
    CHECK_THROWS_AS(bifurcation_curve(lr, 1, 3, omegas, shape), std::invalid_argument);
}

TEST_CASE("structural indices drop as epsilon grows", "[smf]")
{
    const Params lo{0.02, 0.05, 1.0, 1.5, 0.0};
    const Params hi{0.3, 0.05, 1.0, 1.5, 0.0};
    const auto a = structural_indices(lo, 8);
    const auto b = structural_indices(hi, 8);
    for (auto q : all_pairs) {
        if (a[q] && b[q]) CHECK(*b[q] <= *a[q]);
        if (b[q]) {
            const auto bs = secondary_bifurcations(q, *b[q], hi);
            REQUIRE_FALSE(bs.empty());
            CHECK(bs[0].epsilon <= hi.epsilon);
        }
    }
    CHECK_THROWS_AS(structural_indices(Params{0.0, 0.05, 1.0, 1.5, 0.0}), std::invalid_argument);
}
