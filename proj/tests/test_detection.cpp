#include "oracle.hpp"

#include "sqz/detection.hpp"
#include "sqz/errors.hpp"
#include "sqz/quadrature.hpp"

#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

using namespace sqz;

namespace
{

const ModelParams kNominalParams{0.99 * 0.91 * 0.91, 0.1 / 0.1173, 1.0 - 1.0 / std::sqrt(5.3),
                         2.0 * oracle::pi * 1e6 * 0.6 / (oracle::c * 0.1173)};

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

double brute_force_jitter(double theta0, double sigma, const ModelParams &p)
{
    auto integrand = [&](double d) {
        return oracle::variance(theta0 + d, p.detection_efficiency, p.escape_efficiency, p.pump_parameter,
                                p.detuning) *
               std::exp(-0.5 * d * d / (sigma * sigma)) / (sigma * std::sqrt(2.0 * oracle::pi));
    };
    // +/-6 sigma leaves 2e-9 of Gaussian mass outside, too much for a 1e-9 comparison.
    return oracle::simpson(integrand, -12.0 * sigma, 12.0 * sigma, 40000);
}

AcquisitionSettings nominal_acquisition(std::size_t samples, double sweep, double period)
{
    AcquisitionSettings acq;
    acq.center_frequency = 1e6;
    acq.resolution_bandwidth = 1e5;
    acq.video_bandwidth = 30.0;
    acq.sweep_duration = sweep;
    acq.sample_count = samples;
    acq.lo_scan = {0.3, period, 0.0};
    return acq;
}

std::vector<double> linear_powers(const NoiseTrace &t)
{
    std::vector<double> out;
    for (const auto &s : t.samples)
    {
        out.push_back(std::pow(10.0, s.power_db / 10.0));
    }
    return out;
}

double mean(const std::vector<double> &v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); }

} // namespace

TEST_CASE("gauss-hermite rule integrates polynomials exactly")
{
    for (std::size_t n : {1u, 2u, 5u, 21u, 40u})
    {
        const GaussHermiteRule rule = compute_gauss_hermite(n);
        REQUIRE(rule.nodes.size() == n);
        // int x^(2k) e^{-x^2} = Gamma(k + 1/2)
        for (std::size_t k = 0; 2 * k < 2 * n; ++k)
        {
            double sum = 0.0;
            for (std::size_t i = 0; i < n; ++i)
            {
                sum += rule.weights[i] * std::pow(rule.nodes[i], 2.0 * k);
            }
            CHECK(rel(sum, std::tgamma(k + 0.5)) < 1e-11);
        }
        for (std::size_t i = 0; i < n; ++i)
        {
            CHECK(rule.nodes[i] == doctest::Approx(-rule.nodes[n - 1 - i]).epsilon(1e-12).scale(1.0));
        }
    }
    CHECK(gauss_hermite(21).get() == gauss_hermite(21).get());
    CHECK_THROWS_AS(compute_gauss_hermite(0), ArgumentError);
}

TEST_CASE("detection efficiency")
{
    CHECK(detection_efficiency({0.99, 0.91, 1.0, 14.0}) == doctest::Approx(0.8198).epsilon(1e-4));
    CHECK(std::abs(detection_efficiency({0.99, 0.91, 1.0, 14.0}) - 0.82) <= 0.005);
    CHECK(detection_efficiency({1.0, 1.0, 1.0, 14.0}) == 1.0);
    CHECK(detection_efficiency({0.99, 0.91, 0.9, 14.0}) == doctest::Approx(0.7378).epsilon(1e-4));
    CHECK_THROWS_AS(DetectionChain({0.0, 0.9, 1.0, 14.0}).validate(), DomainError);
    CHECK_THROWS_AS(DetectionChain({0.9, 1.1, 1.0, 14.0}).validate(), DomainError);
    CHECK_THROWS_AS(DetectionChain({0.9, 0.9, 1.0, 0.0}).validate(), DomainError);
}

TEST_CASE("circuit noise examples")
{
    CHECK(apply_circuit_noise(0.367, 14.0) == doctest::Approx(oracle::observed_db(0.367, 14.0)).epsilon(1e-14));
    CHECK(std::abs(apply_circuit_noise(0.367, 14.0) - (-4.1)) < 0.05);
    for (double clearance : {1.0, 10.0, 14.0, 30.0})
    {
        CHECK(apply_circuit_noise(1.0, clearance) == 0.0);
    }
    CHECK(apply_circuit_noise(7.89, 14.0) == doctest::Approx(8.82).epsilon(1e-3));
    CHECK(remove_circuit_noise(apply_circuit_noise(0.367, 14.0), 14.0) == doctest::Approx(0.367).epsilon(1e-13));
}

TEST_CASE("property: circuit noise is monotone and contracts toward 0 dB")
{
    for (double clearance : {3.0, 10.0, 14.0, 20.0})
    {
        double prev = -1e300;
        for (int i = 0; i <= 2000; ++i)
        {
            const double s = std::pow(10.0, -2.0 + i / 500.0);
            const double obs = apply_circuit_noise(s, clearance);
            CHECK(obs > prev);
            prev = obs;
            if (i != 1000)
            {
                CHECK(std::abs(obs) < std::abs(10.0 * std::log10(s)));
            }
        }
    }
}

TEST_CASE("jitter average: degenerate, analytic and brute-force oracles")
{
    for (double theta : {0.0, 0.7, oracle::pi / 2.0, 2.2})
    {
        CHECK(jitter_averaged_variance(theta, 0.0, kNominalParams) == quadrature_variance(theta, kNominalParams));
    }
    const auto &p = kNominalParams;
    const double analytic = oracle::jittered_variance(oracle::pi / 2.0, 0.2, p.detection_efficiency,
                                                      p.escape_efficiency, p.pump_parameter, p.detuning);
    CHECK(rel(jitter_averaged_variance(oracle::pi / 2.0, 0.2, kNominalParams), analytic) < 1e-9);

    const double j = jitter_averaged_variance(oracle::pi / 2.0, 0.1, kNominalParams);
    CHECK(j > quadrature_variance(oracle::pi / 2.0, kNominalParams));
    CHECK(rel(j, brute_force_jitter(oracle::pi / 2.0, 0.1, kNominalParams)) < 1e-9);
}

TEST_CASE("property: jitter average matches the analytic moment over a grid")
{
    const auto &p = kNominalParams;
    for (double sigma : {0.01, 0.05, 0.1, 0.2, 0.3, 0.5})
    {
        for (int i = 0; i < 16; ++i)
        {
            const double theta = i * oracle::pi / 16.0;
            const double expect = oracle::jittered_variance(theta, sigma, p.detection_efficiency,
                                                            p.escape_efficiency, p.pump_parameter, p.detuning);
            CHECK(rel(jitter_averaged_variance(theta, sigma, kNominalParams), expect) < 1e-9);
            CHECK(rel(jitter_averaged_variance(theta, sigma, kNominalParams), brute_force_jitter(theta, sigma, kNominalParams)) <
                  1e-9);
        }
    }
}

TEST_CASE("property: jitter average bounded, monotone, and tends to the phase average")
{
    const double lo = quadrature_variance(oracle::pi / 2.0, kNominalParams);
    const double hi = quadrature_variance(0.0, kNominalParams);
    for (double sigma : {0.0, 0.1, 0.5, 1.0, 1.5, 3.0, 10.0, 50.0})
    {
        for (int i = 0; i < 12; ++i)
        {
            const double v = jitter_averaged_variance(i * 0.3, sigma, kNominalParams);
            CHECK(v >= lo * (1.0 - 1e-12));
            CHECK(v <= hi * (1.0 + 1e-12));
        }
    }
    double prev_sq = 0.0;
    double prev_anti = 1e300;
    for (int i = 0; i <= 300; ++i)
    {
        const double sigma = i * 0.01;
        const double sq = jitter_averaged_variance(oracle::pi / 2.0, sigma, kNominalParams);
        const double anti = jitter_averaged_variance(0.0, sigma, kNominalParams);
        CHECK(sq >= prev_sq * (1.0 - 1e-13));
        CHECK(anti <= prev_anti * (1.0 + 1e-13));
        prev_sq = sq;
        prev_anti = anti;
    }
    const double average = 0.5 * (lo + hi);
    for (int i = 0; i < 12; ++i)
    {
        CHECK(rel(jitter_averaged_variance(i * 0.3, 50.0, kNominalParams), average) < 1e-6);
    }
}

TEST_CASE("acquisition settings")
{
    AcquisitionSettings acq = nominal_acquisition(300, 10.0, 2.5);
    CHECK(acq.estimator_dof() == 6667);
    const auto times = acq.sample_times();
    REQUIRE(times.size() == 300);
    CHECK(times.front() == 0.0);
    CHECK(times.back() == doctest::Approx(10.0));
    acq.video_bandwidth = 2e5;
    CHECK_THROWS_AS(acq.validate(), DomainError);
    acq = nominal_acquisition(1, 10.0, 2.5);
    CHECK_THROWS_AS(acq.validate(), DomainError);
    acq = nominal_acquisition(10, 10.0, 2.5);
    acq.video_bandwidth = acq.resolution_bandwidth;
    CHECK(acq.estimator_dof() == 2);
}

TEST_CASE("synthesis is deterministic per seed")
{
    const DetectionChain chain{0.99, 0.91, 1.0, 14.0};
    AcquisitionSettings acq = nominal_acquisition(300, 10.0, 2.5);
    acq.lo_scan.jitter_sigma = 0.05;
    const NoiseTrace a = synthesize_trace(kNominalParams, chain, acq, 42);
    const NoiseTrace b = synthesize_trace(kNominalParams, chain, acq, 42);
    const NoiseTrace c = synthesize_trace(kNominalParams, chain, acq, 43);
    REQUIRE(a.samples.size() == 300);
    CHECK(a.samples == b.samples);
    CHECK(a.samples != c.samples);
    for (std::size_t i = 1; i < a.samples.size(); ++i)
    {
        CHECK(a.samples[i].time > a.samples[i - 1].time);
        CHECK(std::isfinite(a.samples[i].power_db));
    }
    const NoiseTrace s1 = synthesize_shot_reference(acq, chain, 5);
    const NoiseTrace s2 = synthesize_shot_reference(acq, chain, 5);
    const NoiseTrace s3 = synthesize_shot_reference(acq, chain, 6);
    CHECK(s1.samples == s2.samples);
    CHECK(s1.samples != s3.samples);
}

TEST_CASE("synthesis: high-scatter trace mean matches the phase-averaged model")
{
    const DetectionChain chain{0.99, 0.91, 1.0, 14.0};
    AcquisitionSettings acq = nominal_acquisition(200000, 1000.0, 1.0);
    acq.video_bandwidth = acq.resolution_bandwidth;
    const NoiseTrace t = synthesize_trace(kNominalParams, chain, acq, 11);
    const auto &p = kNominalParams;
    const double n = std::pow(10.0, -1.4);
    auto observed_linear = [&](double theta) {
        return (oracle::variance(theta, p.detection_efficiency, p.escape_efficiency, p.pump_parameter, p.detuning) +
                n) /
               (1.0 + n);
    };
    const double expected = oracle::simpson(observed_linear, 0.0, oracle::pi, 2000) / oracle::pi;
    CHECK(rel(mean(linear_powers(t)), expected) < 0.01);
}

TEST_CASE("synthesis: shot-noise trace statistics")
{
    const DetectionChain chain{0.99, 0.91, 1.0, 14.0};
    const AcquisitionSettings acq = nominal_acquisition(10000, 100.0, 2.5);
    for (const NoiseTrace &t :
         {synthesize_trace({0.82, 0.85, 0.0, 0.1}, chain, acq, 3), synthesize_shot_reference(acq, chain, 3)})
    {
        double sum = 0.0;
        for (const auto &s : t.samples)
        {
            sum += s.power_db;
        }
        CHECK(std::abs(sum / t.samples.size()) < 0.05);
        const auto lin = linear_powers(t);
        const double m = mean(lin);
        double var = 0.0;
        for (double v : lin)
        {
            var += (v - m) * (v - m);
        }
        const double sd = std::sqrt(var / (lin.size() - 1));
        // Relative SD of chi^2_k / k is sqrt(2/k) = 1.73% at k = 6667.
        CHECK(sd == doctest::Approx(std::sqrt(2.0 / 6667.0)).epsilon(0.05));
    }
}
