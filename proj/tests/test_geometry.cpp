#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "afdo/geometry.hpp"

using namespace afdo;
using Catch::Matchers::WithinAbs;

TEST_CASE("polygon area", "[geometry]")
{
    const Polyline square{{0, 0}, {2, 0}, {2, 1}, {0, 1}};
    CHECK_THAT(signed_area(square), WithinAbs(2.0, 1e-15));
    const Polyline cw(square.rbegin(), square.rend());
    CHECK_THAT(signed_area(cw), WithinAbs(-2.0, 1e-15));
    CHECK_THAT(polygon_area(cw), WithinAbs(2.0, 1e-15));
}

TEST_CASE("segment intersection", "[geometry]")
{
    const auto h = intersect_segments({0, 0}, {2, 2}, {0, 2}, {2, 0});
    REQUIRE(h);
    CHECK_THAT(h->point.x, WithinAbs(1.0, 1e-15));
    CHECK_THAT(h->t, WithinAbs(0.5, 1e-15));
    CHECK_THAT(h->angle, WithinAbs(pi / 2, 1e-12));
    CHECK_FALSE(intersect_segments({0, 0}, {1, 0}, {0, 1}, {1, 1}));
    CHECK_FALSE(intersect_segments({0, 0}, {1, 0}, {2, -1}, {2, 1}));
}

TEST_CASE("crossing at a shared vertex counts once", "[geometry]")
{
    const Polyline a{{-1, 0}, {0, 0}, {1, 0}};
    const Polyline b{{0, -1}, {0, 1}};
    CHECK(polyline_crossings(a, b).size() == 1);
}

TEST_CASE("grid-hashed crossings agree with brute force", "[geometry]")
{
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-1, 1);
    Polyline a, b;
    for (int i = 0; i < 300; ++i) {
        a.push_back({u(rng), u(rng)});
        b.push_back({u(rng), u(rng)});
    }
    std::size_t brute = 0;
    for (std::size_t i = 0; i + 1 < a.size(); ++i) {
        for (std::size_t j = 0; j + 1 < b.size(); ++j) {
            if (intersect_segments(a[i], a[i + 1], b[j], b[j + 1])) ++brute;
        }
    }
    CHECK(polyline_crossings(a, b).size() == brute);
    CHECK(polyline_crossings(a, b, 0.05).size() == brute);
}

TEST_CASE("cumulative length and turning angle", "[geometry]")
{
    const auto s = cumulative_length({{0, 0}, {3, 4}, {3, 5}});
    CHECK(s.back() == 6.0);
    CHECK_THAT(turning_angle({0, 0}, {1, 0}, {1, 1}), WithinAbs(pi / 2, 1e-15));
    CHECK_THAT(turning_angle({0, 0}, {1, 0}, {2, 0}), WithinAbs(0.0, 1e-15));
}
