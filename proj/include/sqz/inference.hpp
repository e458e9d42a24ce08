#pragma once

#include "sqz/detection.hpp"
#include "sqz/opo_model.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace sqz
{

// Everything needed to predict levels from first principles.
struct Nominal
{
    CavityParams cavity;
    DetectionChain chain;
    PumpSpec pump = ParametricGain{1.0};
    double analysis_frequency = 1e6; // Hz
};

// Intermediate quantities of the prediction pipeline, all SI.
struct Prediction
{
    double threshold_power = 0.0;      // W
    double escape_efficiency = 0.0;    // rho
    double detection_efficiency = 0.0; // alpha
    double decay_rate = 0.0;           // gamma, 1/s
    double detuning = 0.0;             // Omega
    double pump_parameter = 0.0;       // x
    double parametric_gain = 1.0;      // G
    VarianceLevels intrinsic;          // before the circuit floor
    VarianceLevels observed;           // after the circuit-noise floor
};

ModelParams model_params(const Nominal &nominal);
Prediction predict(const Nominal &nominal);
VarianceLevels predict_levels(const CavityParams &cavity, const DetectionChain &chain, const PumpSpec &pump,
                              double analysis_frequency_hz, bool circuit_noise = false);

struct MeasuredPoint
{
    double pump_power = 0.0; // W
    VarianceLevels levels;
};

enum class PumpInput
{
    Power,
    Gain,
    PumpParameter
};

struct SweepRow
{
    PumpInput primary = PumpInput::Gain;
    double pump_power = 0.0; // W; derived as P_th x^2 unless primary
    double parametric_gain = 1.0;
    double pump_parameter = 0.0;
    bool valid = true;
    std::string note; // reason when !valid
    VarianceLevels predicted;
    VarianceLevels predicted_observed;
    std::optional<VarianceLevels> measured;
};

/// One row per pump, ordered by pump power. Above-threshold powers are kept as
/// invalid rows. Each measured point attaches to the row nearest in power.
std::vector<SweepRow> sweep_pump(const CavityParams &cavity, const DetectionChain &chain,
                                 std::span<const PumpSpec> pumps, double analysis_frequency_hz,
                                 std::span<const MeasuredPoint> measured = {});

struct ReconcileOptions
{
    // Measured levels are analyzer readings, so the prediction includes the circuit floor.
    bool circuit_noise = true;
    double gain_scale_min = 0.5;
    double gain_scale_max = 1.5;
    double efficiency_scale_min = 0.3;
    double efficiency_scale_max = 1.0;
    double residual_tolerance_db = 1e-6;
    int max_iterations = 100;
};

struct Reconciliation
{
    double gain_scale = 1.0;       // G' = g G
    double efficiency_scale = 1.0; // alpha' = e alpha
    double residual_db = 0.0;      // Euclidean norm of the level mismatch
    bool exact = true;             // false: best least-squares point inside the box
    int iterations = 0;
    VarianceLevels predicted;
};

/// Gain correction and extra loss that together reproduce the measured levels.
Reconciliation reconcile_discrepancy(const VarianceLevels &measured, const Nominal &nominal,
                                     const ReconcileOptions &options = {});

struct LossOnlyReport
{
    double efficiency_scale = 1.0;
    bool s_min_matchable = true;
    double s_max_mismatch_db = 0.0; // predicted - measured at the loss that matches s_min
    double tolerance_db = 0.3;
    bool feasible = true;
    VarianceLevels predicted;
};

/// Can extra field loss alone explain the measurement? Matches s_min with a single
/// efficiency scale in (0, 1] and reports what that does to s_max.
LossOnlyReport loss_only_explanation_check(const VarianceLevels &measured, const Nominal &nominal,
                                           double tolerance_db = 0.3, bool circuit_noise = true);

/// Predicted levels with G' = gain_scale G and alpha' = efficiency_scale alpha.
VarianceLevels scaled_prediction(const Nominal &nominal, double gain_scale, double efficiency_scale,
                                 bool circuit_noise);

} // namespace sqz
