#include <catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <sstream>

#include "afdo/io.hpp"

using namespace afdo;

TEST_CASE("doubles round-trip through their text form", "[io]")
{
    for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, std::nextafter(1.0, 2.0)}) {
        CHECK(std::stod(format_double(v)) == v);
    }
    CHECK(format_double(std::numeric_limits<double>::quiet_NaN()) == "nan");
    CHECK(format_double(std::numeric_limits<double>::infinity()) == "inf");
    CHECK(format_double(-std::numeric_limits<double>::infinity()) == "-inf");
}

TEST_CASE("CSV table", "[io]")
{
    CsvTable t({"a", "b", "c"});
    t.row() << 1.5 << 2 << "x,y";
    t.row() << std::optional<double>{} << true << std::string_view("q\"r");
    std::ostringstream os;
    t.write(os);
    CHECK(os.str() == "a,b,c\n1.5,2,\"x,y\"\n,1,\"q\"\"r\"\n");
    CHECK(t.size() == 2);
}

TEST_CASE("key=value configuration", "[io]")
{
    KeyValueConfig c;
    std::istringstream in("# comment\nomega = 1.5\n\nname=lr # trailing\nlist = 1, 2,3\nflag=yes\n");
    c.parse(in);
    c.set("omega=2.0");
    CHECK(c.get_double("omega", 0) == 2.0);
    CHECK(c.get_string("name", "") == "lr");
    CHECK(c.get_doubles("list", {}) == std::vector<double>{1, 2, 3});
    CHECK(c.get_bool("flag", false));
    CHECK(c.get_int("missing", 7) == 7);
    c.set("extra=1");
    CHECK(c.unused_keys() == std::vector<std::string>{"extra"});

    c.set("bad=1.5x");
    CHECK_THROWS_AS(c.get_double("bad", 0), ConfigError);
    CHECK_THROWS_AS(c.get_int("omega", 0), ConfigError);
    CHECK_THROWS_AS(c.get_bool("name", false), ConfigError);
    CHECK_THROWS_AS(c.set("novalue"), ConfigError);
    CHECK_THROWS_AS(c.set("=3"), ConfigError);
    std::istringstream broken("a=1\noops\n");
    CHECK_THROWS_WITH(c.parse(broken, "f.cfg"), Catch::Matchers::StartsWith("f.cfg:2:"));
    CHECK_THROWS_AS(c.load("/nonexistent/file.cfg"), ConfigError);
}

TEST_CASE("linspace", "[io]")
{
    const auto v = linspace(0.0, 1.0, 5);
    REQUIRE(v.size() == 5);
    CHECK(v.front() == 0.0);
    CHECK(v.back() == 1.0);
    CHECK(v[2] == 0.5);
    CHECK(linspace(3.0, 9.0, 1) == std::vector<double>{3.0});
    CHECK_THROWS_AS(linspace(0, 1, 0), ConfigError);
}

TEST_CASE("JSON report fields", "[io]")
{
    LyapunovReport r;
    r.exponents = {0.9, -1.2};
    r.exponents_per_time = {0.1, -0.2};
    r.verdict = Verdict::strange_attractor;
    r.dimension = 1.75;
    const auto j = to_json(r);
    CHECK(j["verdict"] == "strange_attractor");
    CHECK(j["exponents_log2_per_iterate"].size() == 2);
    CHECK(j["dimension"] == 1.75);
    CHECK(j["sidedness"].is_null());
    CHECK(to_json(Params{0.1, 0.2, 1.0, 1.5, 0.0})["omega"] == 1.5);
}
