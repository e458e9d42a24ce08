#pragma once

#include "sqz/detection.hpp"
#include "sqz/opo_model.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace sqz
{

// Scanned-phase fit model. The variance formula only constrains the two lobe heights, so the
// fit works directly in them: S(phi) = s_max cos^2(phi) + s_min sin^2(phi), which
// is an exact rewrite of the quadrature-variance formula. Levels are intrinsic
// (before the circuit-noise floor); the floor and the analyzer's log-estimator
// bias are applied as fixed maps.
struct FitModel
{
    double s_min_db = -3.0;
    double s_max_db = 6.0;
    double theta0 = 0.0;       // rad, phase at t = 0
    double scan_rate = 1.0;    // rad/s
    double jitter_sigma = 0.0; // rad RMS
    bool fit_jitter = true;

    // Held fixed.
    double circuit_noise_clearance_db = 14.0;
};

struct FitOptions
{
    int max_iterations = 200;
    double ftol = 1e-12;
    double xtol = 1e-10;
    // Second pass with per-sample variance weights from the first-pass model.
    bool weighted = true;
    std::size_t quadrature_nodes = kDefaultHermiteNodes;
    // Jitter is kept below this so the Gauss-Hermite rule stays valid.
    double max_jitter = 1.0;
};

struct FitResult
{
    FitModel parameters;
    std::vector<std::string> parameter_names;
    Eigen::MatrixXd covariance;

    VarianceLevels levels; // intrinsic
    double s_min_sigma_db = 0.0;
    double s_max_sigma_db = 0.0;
    VarianceLevels observed_levels; // with the circuit-noise floor, as the analyzer shows them
    double observed_s_min_sigma_db = 0.0;
    double observed_s_max_sigma_db = 0.0;
    double theta0_sigma = 0.0;
    double scan_rate_sigma = 0.0;
    double jitter_sigma_sigma = 0.0;

    double residual_rms = 0.0; // dB, unweighted
    int iterations = 0;
    bool converged = false;
    bool identifiable = true;
    // Sum of squares after each accepted step, one vector per pass.
    std::vector<std::vector<double>> objective_history;
};

/// Weighted least-squares fit of a trace in dB space. Throws ArgumentError when the
/// trace has fewer than ten samples per free parameter.
FitResult fit_trace(const NoiseTrace &trace, const FitModel &initial, const FitOptions &options = {});

/// Starting point from the trace alone: smoothed extrema for the levels, the
/// recorded scan rate, and a coarse search for theta0.
FitModel initial_guess(const NoiseTrace &trace, double circuit_noise_clearance_db, bool fit_jitter = true);

// Extrema read directly off a moving-average-smoothed trace; a model-free cross-check.
struct ExtremaLevels
{
    double observed_min_db = 0.0;
    double observed_max_db = 0.0;
    double observed_min_sigma_db = 0.0;
    double observed_max_sigma_db = 0.0;
    VarianceLevels levels; // circuit noise removed
    std::size_t window = 1;
};

ExtremaLevels extract_extrema(const NoiseTrace &trace, double circuit_noise_clearance_db, std::size_t window = 0);

/// Mean of 10 log10(chi^2_k / k), the offset a dB-averaged power estimator carries.
double log_estimator_bias_db(int dof);
/// Variance of 10 log10(chi^2_k / k) in dB^2.
double log_estimator_variance_db2(int dof);

} // namespace sqz
