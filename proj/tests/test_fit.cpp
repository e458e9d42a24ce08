#include "oracle.hpp"

#include "sqz/errors.hpp"
#include "sqz/fit.hpp"
#include "sqz/levenberg_marquardt.hpp"

#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>
#include <random>

using namespace sqz;

namespace
{

const ModelParams kNominalParams{0.99 * 0.91 * 0.91, 0.1 / 0.1173, 1.0 - 1.0 / std::sqrt(5.3),
                         2.0 * oracle::pi * 1e6 * 0.6 / (oracle::c * 0.1173)};
const DetectionChain kChain{0.99, 0.91, 1.0, 14.0};

AcquisitionSettings acquisition(std::size_t samples, double sweep, double period, double jitter)
{
    AcquisitionSettings acq;
    acq.sweep_duration = sweep;
    acq.sample_count = samples;
    acq.lo_scan = {0.3, period, jitter};
    return acq;
}

FitModel perturbed_guess(const NoiseTrace &t)
{
    FitModel m = initial_guess(t, kChain.circuit_noise_clearance_db);
    m.s_min_db += 0.5;
    m.s_max_db -= 0.5;
    m.theta0 += 0.05;
    m.scan_rate *= 1.002;
    return m;
}

bool covers(double fitted, double sigma, double truth) { return std::abs(fitted - truth) <= 2.0 * sigma; }

} // namespace

TEST_CASE("levenberg-marquardt: linear model matches the normal equations")
{
    std::mt19937_64 rng(1);
    std::normal_distribution<double> noise(0.0, 0.1);
    const int n = 50;
    Eigen::VectorXd t(n);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i)
    {
        t[i] = i * 0.1;
        y[i] = 1.5 - 0.7 * t[i] + 0.2 * t[i] * t[i] + noise(rng);
    }
    Eigen::MatrixXd a(n, 3);
    a.col(0).setOnes();
    a.col(1) = t;
    a.col(2) = t.array().square();
    const Eigen::VectorXd exact = a.colPivHouseholderQr().solve(y);

    const ResidualFunction fn = [&](const Eigen::VectorXd &p, Eigen::VectorXd &r, Eigen::MatrixXd *j) {
        r = a * p - y;
        if (j)
        {
            *j = a;
        }
    };
    const LmResult res = levenberg_marquardt(fn, Eigen::VectorXd::Zero(3));
    CHECK(res.converged);
    for (int k = 0; k < 3; ++k)
    {
        CHECK(res.params[k] == doctest::Approx(exact[k]).epsilon(1e-8));
    }
}

TEST_CASE("levenberg-marquardt: rosenbrock, monotone cost, box")
{
    const ResidualFunction rosen = [](const Eigen::VectorXd &p, Eigen::VectorXd &r, Eigen::MatrixXd *j) {
        r.resize(2);
        r << 10.0 * (p[1] - p[0] * p[0]), 1.0 - p[0];
        if (j)
        {
            j->resize(2, 2);
            *j << -20.0 * p[0], 10.0, -1.0, 0.0;
        }
    };
    Eigen::VectorXd x0(2);
    x0 << -1.2, 1.0;
    const LmResult res = levenberg_marquardt(rosen, x0);
    CHECK(res.converged);
    CHECK(res.params[0] == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(res.params[1] == doctest::Approx(1.0).epsilon(1e-6));
    for (std::size_t i = 1; i < res.cost_history.size(); ++i)
    {
        CHECK(res.cost_history[i] <= res.cost_history[i - 1]);
    }

    LmOptions boxed;
    boxed.lower = Eigen::Vector2d(-2.0, -2.0);
    boxed.upper = Eigen::Vector2d(0.5, 2.0);
    const LmResult b = levenberg_marquardt(rosen, x0, boxed);
    CHECK(b.params[0] <= 0.5);
    CHECK(b.params[0] == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(b.params[1] == doctest::Approx(0.25).epsilon(1e-5));
}

TEST_CASE("log-estimator moments")
{
    // digamma(1) = -Euler gamma, trigamma(1) = pi^2 / 6.
    const double scale = 10.0 / std::log(10.0);
    CHECK(log_estimator_bias_db(2) == doctest::Approx(-scale * 0.57721566490153286).epsilon(1e-12));
    CHECK(log_estimator_variance_db2(2) == doctest::Approx(scale * scale * oracle::pi * oracle::pi / 6.0).epsilon(1e-12));
    // Large k: bias -> -scale / k, variance -> 2 scale^2 / k.
    CHECK(log_estimator_bias_db(6667) == doctest::Approx(-scale / 6667.0).epsilon(1e-3));
    CHECK(log_estimator_variance_db2(6667) == doctest::Approx(2.0 * scale * scale / 6667.0).epsilon(1e-3));

    // Monte Carlo at k = 4.
    std::mt19937_64 rng(9);
    std::chi_squared_distribution<double> chi(4.0);
    double sum = 0.0;
    const int n = 400000;
    for (int i = 0; i < n; ++i)
    {
        sum += oracle::db(chi(rng) / 4.0);
    }
    CHECK(sum / n == doctest::Approx(log_estimator_bias_db(4)).epsilon(0.01));
}

TEST_CASE("fit round trip at nominal settings")
{
    const VarianceLevels truth = min_max_levels(kNominalParams);
    const AcquisitionSettings acq = acquisition(300, 10.0, 2.5, 0.03);
    int covered_min = 0;
    int covered_max = 0;
    const int runs = 40;
    for (int seed = 0; seed < runs; ++seed)
    {
        const NoiseTrace t = synthesize_trace(kNominalParams, kChain, acq, 1000 + seed);
        const FitResult r = fit_trace(t, perturbed_guess(t));
        REQUIRE(r.converged);
        CHECK(r.identifiable);
        covered_min += covers(r.levels.s_min_db, r.s_min_sigma_db, truth.s_min_db);
        covered_max += covers(r.levels.s_max_db, r.s_max_sigma_db, truth.s_max_db);
        CHECK(r.parameters.theta0 == doctest::Approx(0.3).epsilon(0.1));
        CHECK(r.parameters.scan_rate == doctest::Approx(2.0 * oracle::pi / 2.5).epsilon(1e-2));
    }
    CHECK(covered_min >= 0.9 * runs);
    CHECK(covered_max >= 0.9 * runs);
}

TEST_CASE("fit result invariants")
{
    const NoiseTrace t = synthesize_trace(kNominalParams, kChain, acquisition(300, 10.0, 2.5, 0.03), 77);
    const FitResult r = fit_trace(t, perturbed_guess(t));
    REQUIRE(r.covariance.rows() == 5);
    REQUIRE(r.parameter_names.size() == 5);
    CHECK(r.parameter_names[0] == "s_min_db");
    CHECK((r.covariance - r.covariance.transpose()).norm() <= 1e-12 * r.covariance.norm());
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(r.covariance);
    CHECK(eig.eigenvalues().minCoeff() >= -1e-12 * eig.eigenvalues().maxCoeff());
    CHECK(r.s_min_sigma_db == doctest::Approx(std::sqrt(r.covariance(0, 0))));
    CHECK(r.parameters.s_min_db <= r.parameters.s_max_db);
    CHECK(r.parameters.theta0 >= 0.0);
    CHECK(r.parameters.theta0 < oracle::pi);
    CHECK(r.parameters.scan_rate > 0.0);
    CHECK(r.parameters.jitter_sigma >= 0.0);
    CHECK(r.observed_levels.s_min_db ==
          doctest::Approx(oracle::observed_db(r.levels.s_min, kChain.circuit_noise_clearance_db)));
    REQUIRE(!r.objective_history.empty());
    for (const auto &pass : r.objective_history)
    {
        for (std::size_t i = 1; i < pass.size(); ++i)
        {
            CHECK(pass[i] <= pass[i - 1]);
        }
    }
    CHECK(r.residual_rms > 0.0);
}

TEST_CASE("fit without jitter parameter")
{
    const NoiseTrace t = synthesize_trace(kNominalParams, kChain, acquisition(300, 10.0, 2.5, 0.0), 5);
    FitModel guess = initial_guess(t, 14.0, false);
    CHECK_FALSE(guess.fit_jitter);
    const FitResult r = fit_trace(t, guess);
    CHECK(r.covariance.rows() == 4);
    const VarianceLevels truth = min_max_levels(kNominalParams);
    CHECK(covers(r.levels.s_min_db, r.s_min_sigma_db, truth.s_min_db));
    CHECK(covers(r.levels.s_max_db, r.s_max_sigma_db, truth.s_max_db));
}

TEST_CASE("flat trace is flagged non-identifiable")
{
    const NoiseTrace t = synthesize_trace({0.82, 0.85, 0.0, 0.1}, kChain, acquisition(300, 10.0, 2.5, 0.0), 8);
    const FitResult r = fit_trace(t, initial_guess(t, 14.0));
    CHECK_FALSE(r.identifiable);
    CHECK(r.theta0_sigma == doctest::Approx(oracle::pi));
    CHECK(std::abs(r.levels.s_min_db) <= 2.0 * r.s_min_sigma_db);
    CHECK(std::abs(r.levels.s_max_db) <= 2.0 * r.s_max_sigma_db);
    CHECK(std::isfinite(r.s_min_sigma_db));
}

TEST_CASE("fit rejects too-short traces")
{
    const NoiseTrace t = synthesize_trace(kNominalParams, kChain, acquisition(40, 10.0, 2.5, 0.0), 5);
    CHECK_THROWS_AS(fit_trace(t, initial_guess(t, 14.0)), ArgumentError);
}

TEST_CASE("extrema cross-check tracks the scan fit")
{
    const NoiseTrace t = synthesize_trace(kNominalParams, kChain, acquisition(600, 20.0, 2.5, 0.0), 21);
    const ExtremaLevels e = extract_extrema(t, 14.0);
    const VarianceLevels truth = min_max_levels(kNominalParams);
    CHECK(e.window >= 1);
    CHECK(e.levels.s_max_db == doctest::Approx(truth.s_max_db).epsilon(0.05));
    CHECK(std::abs(e.levels.s_min_db - truth.s_min_db) < 1.0);
    CHECK(e.observed_min_db < e.observed_max_db);
}
