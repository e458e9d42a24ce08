#include "sqz/opo_model.hpp"

#include "sqz/errors.hpp"

#include <cmath>
#include <cstdio>
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

bool finite(double v) { return std::isfinite(v); }

} // namespace

void CavityParams::validate() const
{
    const double t = coupler_transmittance;
    const double l = intracavity_loss;
    require(finite(t) && t > 0.0 && t < 1.0, "coupler_transmittance must satisfy 0 < T < 1, got " + std::to_string(t));
    require(finite(l) && l >= 0.0 && l < 1.0, "intracavity_loss must satisfy 0 <= L < 1, got " + std::to_string(l));
    require(t + l < 1.0, "coupler_transmittance + intracavity_loss must be < 1");
    require(finite(round_trip_length) && round_trip_length > 0.0, "round_trip_length must be > 0");
    require(finite(nonlinear_efficiency) && nonlinear_efficiency > 0.0, "nonlinear_efficiency must be > 0");
}

void validate(const PumpSpec &pump)
{
    struct Visitor
    {
        void operator()(const PumpPower &p) const
        {
            require(finite(p.watts) && p.watts >= 0.0, "pump_power must be >= 0");
        }
        void operator()(const ParametricGain &g) const
        {
            require(finite(g.value) && g.value >= 1.0, "parametric_gain must be >= 1, got " + std::to_string(g.value));
        }
        void operator()(const PumpParameter &x) const
        {
            require(finite(x.value) && x.value >= 0.0 && x.value < 1.0, "pump_parameter must satisfy 0 <= x < 1");
        }
    };
    std::visit(Visitor{}, pump);
}

void ModelParams::validate() const
{
    require(finite(detection_efficiency) && detection_efficiency >= 0.0 && detection_efficiency <= 1.0,
            "detection efficiency must lie in [0, 1]");
    require(finite(escape_efficiency) && escape_efficiency >= 0.0 && escape_efficiency <= 1.0,
            "escape efficiency must lie in [0, 1]");
    require(finite(pump_parameter) && pump_parameter >= 0.0 && pump_parameter < 1.0,
            "pump parameter must satisfy 0 <= x < 1");
    require(finite(detuning) && detuning >= 0.0, "detuning parameter must be >= 0");
}

VarianceLevels VarianceLevels::from_linear(double s_min, double s_max)
{
    return {s_min, s_max, to_db(s_min), to_db(s_max)};
}

VarianceLevels VarianceLevels::from_db(double s_min_db, double s_max_db)
{
    return {sqz::from_db(s_min_db), sqz::from_db(s_max_db), s_min_db, s_max_db};
}

double to_db(double linear) { return 10.0 * std::log10(linear); }

double from_db(double db) { return std::pow(10.0, db / 10.0); }

double threshold_power(const CavityParams &cavity)
{
    cavity.validate();
    const double loss = cavity.total_loss();
    return loss * loss / (4.0 * cavity.nonlinear_efficiency);
}

double escape_efficiency(const CavityParams &cavity)
{
    cavity.validate();
    return cavity.coupler_transmittance / cavity.total_loss();
}

double cavity_decay_rate(const CavityParams &cavity)
{
    cavity.validate();
    return kSpeedOfLight * cavity.total_loss() / cavity.round_trip_length;
}

double detuning_parameter(const CavityParams &cavity, double angular_frequency)
{
    require(finite(angular_frequency) && angular_frequency >= 0.0, "analysis frequency must be >= 0");
    return angular_frequency / cavity_decay_rate(cavity);
}

SpectralPoint spectral_point(const CavityParams &cavity, double angular_frequency)
{
    require(angular_frequency > 0.0, "analysis frequency must be > 0");
    return {angular_frequency, detuning_parameter(cavity, angular_frequency)};
}

double pump_parameter(const PumpSpec &pump, double threshold_watts)
{
    validate(pump);
    if (const auto *p = std::get_if<PumpPower>(&pump))
    {
        require(finite(threshold_watts) && threshold_watts > 0.0, "threshold power must be > 0");
        if (p->watts >= threshold_watts)
        {
            char message[128];
            std::snprintf(message, sizeof message, "pump power %.4g mW is at or above threshold %.4g mW",
                          p->watts * 1e3, threshold_watts * 1e3);
            throw AboveThresholdError(message);
        }
        return std::sqrt(p->watts / threshold_watts);
    }
    if (const auto *g = std::get_if<ParametricGain>(&pump))
    {
        return 1.0 - 1.0 / std::sqrt(g->value);
    }
    return std::get<PumpParameter>(pump).value;
}

double gain_from_pump_parameter(double x)
{
    require(finite(x) && x >= 0.0 && x < 1.0, "pump parameter must satisfy 0 <= x < 1");
    const double d = 1.0 - x;
    return 1.0 / (d * d);
}

double quadrature_variance(double theta, const ModelParams &params)
{
    // Written as cos^2 * S(0) + sin^2 * S(pi/2) with both lobes expanded so that no
    // term cancels; keeps deep squeezing accurate as x -> 1.
    const double x = params.pump_parameter;
    const double ar = params.detection_efficiency * params.escape_efficiency;
    const double omega2 = 4.0 * params.detuning * params.detuning;
    const double below = (1.0 - x) * (1.0 - x) + omega2;
    const double above = (1.0 + x) * (1.0 + x) + omega2;
    const double anti = (below + 4.0 * ar * x) / below;
    const double squeezed = (below + 4.0 * x * (1.0 - ar)) / above;
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    return c * c * anti + s * s * squeezed;
}

VarianceLevels min_max_levels(const ModelParams &params)
{
    params.validate();
    return VarianceLevels::from_linear(quadrature_variance(kPi / 2.0, params), quadrature_variance(0.0, params));
}

} // namespace sqz
