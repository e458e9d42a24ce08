#include "sqz/errors.hpp"
#include "sqz/trace_io.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <limits>
#include <random>

using namespace sqz;

namespace
{

NoiseTrace random_trace(std::mt19937_64 &rng)
{
    std::uniform_real_distribution<double> u(0.0, 1.0);
    NoiseTrace t;
    const std::size_t n = 2 + rng() % 300;
    t.acquisition.center_frequency = 1e3 + u(rng) * 1e7;
    t.acquisition.resolution_bandwidth = 1e3 + u(rng) * 1e6;
    t.acquisition.video_bandwidth = t.acquisition.resolution_bandwidth * (0.001 + 0.999 * u(rng));
    t.acquisition.sweep_duration = 1e-3 + u(rng) * 100.0;
    t.acquisition.sample_count = n;
    t.acquisition.lo_scan = {u(rng) * 3.0, 0.01 + u(rng) * 10.0, u(rng) * 0.1};
    t.shot_reference_db = (u(rng) - 0.5) * 0.2;
    const double dt = t.acquisition.sweep_duration / static_cast<double>(n - 1);
    for (std::size_t i = 0; i < n; ++i)
    {
        double p = (u(rng) - 0.3) * 30.0;
        if (rng() % 17 == 0)
        {
            p = std::ldexp(u(rng), -static_cast<int>(rng() % 60));
        }
        if (rng() % 29 == 0)
        {
            p = -p * 1e5;
        }
        t.samples.push_back({static_cast<double>(i) * dt, p});
    }
    if (rng() % 2)
    {
        t.annotations.emplace_back("seed", std::to_string(rng()));
        t.annotations.emplace_back("note", "free text, with commas = and spaces");
    }
    return t;
}

} // namespace

TEST_CASE("property: parse(serialize(t)) == t and text is stable")
{
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 300; ++trial)
    {
        const NoiseTrace t = random_trace(rng);
        const std::string text = serialize_trace(t);
        const NoiseTrace back = parse_trace(text);
        REQUIRE(back == t);
        CHECK(serialize_trace(back) == text);
    }
}

TEST_CASE("data rows use fixed notation")
{
    NoiseTrace t;
    t.acquisition.sample_count = 2;
    t.samples = {{0.0, 1e-7}, {1.0, -123456.75}};
    const std::string text = serialize_trace(t);
    CHECK(text.find("0,0.0000001\n") != std::string::npos);
    CHECK(text.find("1,-123456.75\n") != std::string::npos);
    CHECK(text.find("e-") == std::string::npos);
    CHECK(text.rfind("# sqz-trace 1\n", 0) == 0);
}

TEST_CASE("file round trip")
{
    std::mt19937_64 rng(3);
    const NoiseTrace t = random_trace(rng);
    const auto path = std::filesystem::temp_directory_path() / "sqz_trace_io_test.csv";
    save_trace(path, t);
    CHECK(load_trace(path) == t);
    std::filesystem::remove(path);
    CHECK_THROWS_AS(load_trace(path), ParseError);
}

TEST_CASE("malformed traces give located diagnostics")
{
    NoiseTrace t;
    t.acquisition.sample_count = 3;
    t.samples = {{0.0, 1.0}, {0.5, 2.0}, {1.0, 3.0}};
    const std::string good = serialize_trace(t);
    auto broken = [&](const std::string &from, const std::string &to) {
        std::string s = good;
        const auto pos = s.find(from);
        REQUIRE(pos != std::string::npos);
        return s.replace(pos, from.size(), to);
    };
    auto line_of = [](const std::string &text) -> std::size_t {
        try
        {
            parse_trace(text);
        }
        catch (const ParseError &e)
        {
            return e.line();
        }
        return 0;
    };
    CHECK(line_of(broken("0.5,2", "0.5,abc")) > 0);
    CHECK(line_of(broken("0.5,2", "0.25,2,7")) > 0);
    CHECK(line_of(broken("0.5,2", "1.5,2")) > 0);
    CHECK(line_of(broken("sample_count=3", "sample_count=4")) > 0);
    CHECK(line_of(broken("# sqz-trace 1", "# other 1")) == 1);
    CHECK_THROWS_AS(parse_trace(""), ParseError);
    CHECK_THROWS_AS(parse_trace(broken("0.5,2", "0.5,inf")), ParseError);
}

TEST_CASE("property: trace parsing is total")
{
    std::mt19937_64 rng(5);
    NoiseTrace t;
    t.acquisition.sample_count = 4;
    t.samples = {{0.0, 1.0}, {0.25, 2.0}, {0.5, -1.5}, {1.0, 0.125}};
    const std::string base = serialize_trace(t);
    const std::string alphabet = "#=,.-+e0123456789 \nabcxyz_";
    for (int trial = 0; trial < 3000; ++trial)
    {
        std::string text = base;
        for (int e = 0; e < 3; ++e)
        {
            const std::size_t pos = rng() % (text.size() + 1);
            if (rng() % 2 && pos < text.size())
            {
                text.erase(pos, 1);
            }
            else
            {
                text.insert(pos, 1, alphabet[rng() % alphabet.size()]);
            }
        }
        try
        {
            const NoiseTrace back = parse_trace(text);
            CHECK(back.samples.size() == back.acquisition.sample_count);
        }
        catch (const ParseError &)
        {
        }
    }
}
