#pragma once

#include <variant>

namespace sqz
{

inline constexpr double kSpeedOfLight = 299792458.0; // m/s, exact
inline constexpr double kPi = 3.14159265358979323846;

// Geometry and losses of the sub-threshold degenerate OPO. SI units throughout.
struct CavityParams
{
    double round_trip_length = 0.0;     // m
    double coupler_transmittance = 0.0; // output coupler transmission T
    double intracavity_loss = 0.0;      // round-trip loss L
    double nonlinear_efficiency = 0.0;  // E_NL, 1/W

    // Throws DomainError naming the offending field.
    void validate() const;
    double total_loss() const { return coupler_transmittance + intracavity_loss; }
};

// Pump drive. The alternative that was supplied is kept so that a gain correction
// can be applied independently of the pump power.
struct PumpPower
{
    double watts = 0.0;
};
struct ParametricGain
{
    double value = 1.0;
};
struct PumpParameter
{
    double value = 0.0;
};
using PumpSpec = std::variant<PumpPower, ParametricGain, PumpParameter>;

void validate(const PumpSpec &pump);

// Sideband analysis point: angular frequency and the detuning it implies for a cavity.
struct SpectralPoint
{
    double analysis_frequency = 0.0; // rad/s
    double detuning_parameter = 0.0; // Omega = omega / gamma
};

// The four numbers that fully determine the quadrature-variance curve.
struct ModelParams
{
    double detection_efficiency = 1.0; // alpha
    double escape_efficiency = 1.0;    // rho
    double pump_parameter = 0.0;       // x
    double detuning = 0.0;             // Omega

    void validate() const;
};

// Extremal quadrature variances relative to shot noise, linear and in dB.
struct VarianceLevels
{
    double s_min = 1.0;
    double s_max = 1.0;
    double s_min_db = 0.0;
    double s_max_db = 0.0;

    static VarianceLevels from_linear(double s_min, double s_max);
    static VarianceLevels from_db(double s_min_db, double s_max_db);
};

double to_db(double linear);
double from_db(double db);

double threshold_power(const CavityParams &cavity);
double escape_efficiency(const CavityParams &cavity);
double cavity_decay_rate(const CavityParams &cavity);
double detuning_parameter(const CavityParams &cavity, double angular_frequency);
SpectralPoint spectral_point(const CavityParams &cavity, double angular_frequency);

/// Normalized pump amplitude x. The power alternative needs the oscillation
/// threshold and is rejected with AboveThresholdError when P_pump >= P_th.
double pump_parameter(const PumpSpec &pump, double threshold_watts);

/// Classical parametric gain G = 1/(1-x)^2, the inverse of x = 1 - 1/sqrt(G).
double gain_from_pump_parameter(double x);

/// Variance of the homodyne-detected quadrature at LO phase theta, relative to
/// shot noise. theta = 0 selects the anti-squeezed quadrature.
double quadrature_variance(double theta, const ModelParams &params);

/// S at theta = pi/2 (squeezed) and theta = 0 (anti-squeezed).
VarianceLevels min_max_levels(const ModelParams &params);

} // namespace sqz
