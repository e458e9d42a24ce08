#include "sqz/detection.hpp"

#include "sqz/errors.hpp"

#include <cmath>
#include <cstdio>
#include <random>
#include <string>

namespace sqz
{
namespace
{

void require(bool ok, const std::string &message)
{
    if (!ok)
    {
        throw DomainError(message);
    }
}

bool in_unit_interval(double v) { return std::isfinite(v) && v > 0.0 && v <= 1.0; }

std::string format_double(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace

void DetectionChain::validate() const
{
    require(in_unit_interval(quantum_efficiency), "quantum_efficiency must lie in (0, 1]");
    require(in_unit_interval(visibility), "visibility must lie in (0, 1]");
    require(in_unit_interval(propagation_efficiency), "propagation_efficiency must lie in (0, 1]");
    require(std::isfinite(circuit_noise_clearance_db) && circuit_noise_clearance_db > 0.0,
            "circuit_noise_clearance_db must be > 0");
}

double DetectionChain::circuit_noise_floor() const { return std::pow(10.0, -circuit_noise_clearance_db / 10.0); }

void PhaseScan::validate() const
{
    require(std::isfinite(theta0), "scan theta0 must be finite");
    require(std::isfinite(period) && period > 0.0, "scan period must be > 0");
    require(std::isfinite(jitter_sigma) && jitter_sigma >= 0.0, "jitter sigma must be >= 0");
}

void AcquisitionSettings::validate() const
{
    require(std::isfinite(center_frequency) && center_frequency > 0.0, "center_frequency must be > 0");
    require(std::isfinite(resolution_bandwidth) && resolution_bandwidth > 0.0, "resolution_bandwidth must be > 0");
    require(std::isfinite(video_bandwidth) && video_bandwidth > 0.0, "video_bandwidth must be > 0");
    require(video_bandwidth <= resolution_bandwidth, "video_bandwidth must not exceed resolution_bandwidth");
    require(std::isfinite(sweep_duration) && sweep_duration > 0.0, "sweep_duration must be > 0");
    require(sample_count >= 2, "sample_count must be >= 2");
    lo_scan.validate();
}

int AcquisitionSettings::estimator_dof() const
{
    const double k = std::round(2.0 * resolution_bandwidth / video_bandwidth);
    return k < 2.0 ? 2 : static_cast<int>(k);
}

std::vector<double> AcquisitionSettings::sample_times() const
{
    std::vector<double> t(sample_count);
    const double dt = sweep_duration / static_cast<double>(sample_count - 1);
    for (std::size_t i = 0; i < sample_count; ++i)
    {
        t[i] = dt * static_cast<double>(i);
    }
    return t;
}

void NoiseTrace::validate() const
{
    acquisition.validate();
    require(samples.size() >= 2, "trace needs at least two samples");
    require(samples.size() == acquisition.sample_count, "sample_count does not match the number of samples");
    require(std::isfinite(shot_reference_db), "shot_reference_db must be finite");
    for (std::size_t i = 0; i < samples.size(); ++i)
    {
        require(std::isfinite(samples[i].time) && std::isfinite(samples[i].power_db),
                "sample " + std::to_string(i) + " is not finite");
        if (i > 0)
        {
            require(samples[i].time > samples[i - 1].time, "sample times must be strictly increasing");
        }
    }
}

double detection_efficiency(const DetectionChain &chain)
{
    chain.validate();
    return chain.quantum_efficiency * chain.visibility * chain.visibility * chain.propagation_efficiency;
}

double apply_circuit_noise(double s_linear, double clearance_db)
{
    require(s_linear > 0.0, "variance must be > 0");
    require(clearance_db > 0.0, "circuit noise clearance must be > 0");
    const double n = std::pow(10.0, -clearance_db / 10.0);
    return to_db((s_linear + n) / (1.0 + n));
}

double remove_circuit_noise(double observed_db, double clearance_db)
{
    require(clearance_db > 0.0, "circuit noise clearance must be > 0");
    const double n = std::pow(10.0, -clearance_db / 10.0);
    return from_db(observed_db) * (1.0 + n) - n;
}

VarianceLevels apply_circuit_noise(const VarianceLevels &levels, double clearance_db)
{
    return VarianceLevels::from_db(apply_circuit_noise(levels.s_min, clearance_db),
                                   apply_circuit_noise(levels.s_max, clearance_db));
}

double jitter_averaged_variance(double theta0, double sigma, const ModelParams &params, std::size_t nodes)
{
    require(std::isfinite(sigma) && sigma >= 0.0, "jitter sigma must be >= 0");
    if (sigma == 0.0)
    {
        return quadrature_variance(theta0, params);
    }
    return periodic_gaussian_expectation([&](double delta) { return quadrature_variance(theta0 + delta, params); },
                                         sigma, kPi, nodes);
}

NoiseTrace synthesize_trace(const ModelParams &params, const DetectionChain &chain,
                            const AcquisitionSettings &acquisition, std::uint64_t seed)
{
    params.validate();
    chain.validate();
    acquisition.validate();

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> jitter(0.0, 1.0);
    const int dof = acquisition.estimator_dof();
    std::chi_squared_distribution<double> estimator(static_cast<double>(dof));

    const double floor = chain.circuit_noise_floor();
    const double sigma = acquisition.lo_scan.jitter_sigma;

    NoiseTrace trace;
    trace.acquisition = acquisition;
    trace.samples.reserve(acquisition.sample_count);
    for (double t : acquisition.sample_times())
    {
        double theta = acquisition.lo_scan.phase_at(t);
        if (sigma > 0.0)
        {
            theta += sigma * jitter(rng);
        }
        const double s = quadrature_variance(theta, params);
        const double mean = (s + floor) / (1.0 + floor);
        const double factor = estimator(rng) / static_cast<double>(dof);
        trace.samples.push_back({t, to_db(mean * factor)});
    }

    trace.annotations = {
        {"seed", std::to_string(seed)},
        {"model.detection_efficiency", format_double(params.detection_efficiency)},
        {"model.escape_efficiency", format_double(params.escape_efficiency)},
        {"model.pump_parameter", format_double(params.pump_parameter)},
        {"model.detuning", format_double(params.detuning)},
        {"detection.circuit_noise_clearance_db", format_double(chain.circuit_noise_clearance_db)},
    };
    return trace;
}

NoiseTrace synthesize_shot_reference(const AcquisitionSettings &acquisition, const DetectionChain &chain,
                                     std::uint64_t seed)
{
    ModelParams blocked;
    blocked.pump_parameter = 0.0;
    return synthesize_trace(blocked, chain, acquisition, seed);
}

} // namespace sqz
