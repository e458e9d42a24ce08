#pragma once

#include "sqz/opo_model.hpp"
#include "sqz/quadrature.hpp"

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace sqz
{

// Everything between the OPO output coupler and the spectrum analyzer.
struct DetectionChain
{
    double quantum_efficiency = 1.0;     // eta
    double visibility = 1.0;             // xi, homodyne mode overlap
    double propagation_efficiency = 1.0; // extra loss, 1 reproduces alpha = eta * xi^2
    double circuit_noise_clearance_db = 0.0; // electronic floor this far below shot noise

    void validate() const;
    // Electronic floor relative to shot noise, linear.
    double circuit_noise_floor() const;
};

// Linear LO phase ramp theta(t) = theta0 + 2 pi t / period, optional Gaussian jitter.
struct PhaseScan
{
    double theta0 = 0.0;       // rad
    double period = 1.0;       // s
    double jitter_sigma = 0.0; // rad RMS

    void validate() const;
    double rate() const { return 2.0 * kPi / period; }
    double phase_at(double t) const { return theta0 + rate() * t; }
};

// Zero-span spectrum analyzer settings.
struct AcquisitionSettings
{
    double center_frequency = 1e6;     // Hz
    double resolution_bandwidth = 1e5; // Hz
    double video_bandwidth = 30.0;     // Hz
    double sweep_duration = 1.0;       // s
    std::size_t sample_count = 2;
    PhaseScan lo_scan;

    void validate() const;
    double analysis_angular_frequency() const { return 2.0 * kPi * center_frequency; }
    // Degrees of freedom of the normalized chi-square power estimator, max(2, round(2 RBW / VBW)).
    int estimator_dof() const;
    // Evenly spaced over [0, sweep_duration].
    std::vector<double> sample_times() const;
};

struct TraceSample
{
    double time = 0.0;     // s
    double power_db = 0.0; // dB relative to shot noise

    friend bool operator==(const TraceSample &, const TraceSample &) = default;
};

// Sampled scanned-phase noise power record. Annotations are free-form key/value
// metadata carried through the file format in order.
struct NoiseTrace
{
    std::vector<TraceSample> samples;
    AcquisitionSettings acquisition;
    double shot_reference_db = 0.0;
    std::vector<std::pair<std::string, std::string>> annotations;

    void validate() const;
};

double detection_efficiency(const DetectionChain &chain);

/// Observed level in dB relative to the measured shot-noise reference when both
/// the signal and the reference sit on the same additive electronic floor:
/// 10 log10((S + n) / (1 + n)), n = 10^(-clearance/10).
double apply_circuit_noise(double s_linear, double clearance_db);

/// Inverse of apply_circuit_noise: intrinsic linear variance from an observed dB level.
double remove_circuit_noise(double observed_db, double clearance_db);

VarianceLevels apply_circuit_noise(const VarianceLevels &levels, double clearance_db);

/// Mean of S(theta0 + delta) over Gaussian LO phase jitter delta ~ N(0, sigma^2),
/// taken in the linear variance domain. sigma = 0 reproduces quadrature_variance.
double jitter_averaged_variance(double theta0, double sigma, const ModelParams &params,
                                std::size_t nodes = kDefaultHermiteNodes);

/// Scanned-phase trace as a zero-span analyzer would record it: per sample the
/// jittered phase, quadrature variance, circuit floor, and a normalized chi-square
/// estimator factor. Bit-identical for identical inputs and seed.
NoiseTrace synthesize_trace(const ModelParams &params, const DetectionChain &chain,
                            const AcquisitionSettings &acquisition, std::uint64_t seed);

/// Same generator with the OPO blocked (x = 0).
NoiseTrace synthesize_shot_reference(const AcquisitionSettings &acquisition, const DetectionChain &chain,
                                     std::uint64_t seed);

} // namespace sqz
