#include "sqz/inference.hpp"

#include "sqz/errors.hpp"
#include "sqz/levenberg_marquardt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace sqz
{
namespace
{

double nominal_gain(const PumpSpec &pump, double threshold)
{
    if (const auto *g = std::get_if<ParametricGain>(&pump))
    {
        validate(pump);
        return g->value;
    }
    return gain_from_pump_parameter(pump_parameter(pump, threshold));
}

VarianceLevels maybe_observed(const VarianceLevels &levels, const DetectionChain &chain, bool circuit_noise)
{
    return circuit_noise ? apply_circuit_noise(levels, chain.circuit_noise_clearance_db) : levels;
}

} // namespace

ModelParams model_params(const Nominal &nominal)
{
    nominal.cavity.validate();
    nominal.chain.validate();
    if (!(nominal.analysis_frequency > 0.0))
    {
        throw DomainError("analysis frequency must be > 0");
    }
    ModelParams params;
    params.detection_efficiency = detection_efficiency(nominal.chain);
    params.escape_efficiency = escape_efficiency(nominal.cavity);
    params.detuning = detuning_parameter(nominal.cavity, 2.0 * kPi * nominal.analysis_frequency);
    params.pump_parameter = pump_parameter(nominal.pump, threshold_power(nominal.cavity));
    return params;
}

Prediction predict(const Nominal &nominal)
{
    const ModelParams params = model_params(nominal);
    Prediction p;
    p.threshold_power = threshold_power(nominal.cavity);
    p.escape_efficiency = params.escape_efficiency;
    p.detection_efficiency = params.detection_efficiency;
    p.decay_rate = cavity_decay_rate(nominal.cavity);
    p.detuning = params.detuning;
    p.pump_parameter = params.pump_parameter;
    p.parametric_gain = nominal_gain(nominal.pump, p.threshold_power);
    p.intrinsic = min_max_levels(params);
    p.observed = apply_circuit_noise(p.intrinsic, nominal.chain.circuit_noise_clearance_db);
    return p;
}

VarianceLevels predict_levels(const CavityParams &cavity, const DetectionChain &chain, const PumpSpec &pump,
                              double analysis_frequency_hz, bool circuit_noise)
{
    const Prediction p = predict({cavity, chain, pump, analysis_frequency_hz});
    return circuit_noise ? p.observed : p.intrinsic;
}

std::vector<SweepRow> sweep_pump(const CavityParams &cavity, const DetectionChain &chain,
                                 std::span<const PumpSpec> pumps, double analysis_frequency_hz,
                                 std::span<const MeasuredPoint> measured)
{
    if (pumps.empty())
    {
        throw ArgumentError("sweep: pump list is empty");
    }
    const double threshold = threshold_power(cavity);
    Nominal base{cavity, chain, ParametricGain{1.0}, analysis_frequency_hz};
    const ModelParams blocked = model_params(base);

    std::vector<SweepRow> rows;
    rows.reserve(pumps.size());
    for (const PumpSpec &pump : pumps)
    {
        SweepRow row;
        if (const auto *p = std::get_if<PumpPower>(&pump))
        {
            row.primary = PumpInput::Power;
            row.pump_power = p->watts;
        }
        else
        {
            row.primary = std::holds_alternative<ParametricGain>(pump) ? PumpInput::Gain : PumpInput::PumpParameter;
        }
        try
        {
            row.pump_parameter = pump_parameter(pump, threshold);
            row.parametric_gain = nominal_gain(pump, threshold);
            if (row.primary != PumpInput::Power)
            {
                row.pump_power = threshold * row.pump_parameter * row.pump_parameter;
            }
            ModelParams params = blocked;
            params.pump_parameter = row.pump_parameter;
            row.predicted = min_max_levels(params);
            row.predicted_observed = apply_circuit_noise(row.predicted, chain.circuit_noise_clearance_db);
        }
        catch (const DomainError &e)
        {
            row.valid = false;
            row.note = e.what();
            row.parametric_gain = std::numeric_limits<double>::quiet_NaN();
            row.pump_parameter = std::numeric_limits<double>::quiet_NaN();
        }
        rows.push_back(std::move(row));
    }
    std::stable_sort(rows.begin(), rows.end(),
                     [](const SweepRow &a, const SweepRow &b) { return a.pump_power < b.pump_power; });

    std::vector<double> attached_distance(rows.size(), std::numeric_limits<double>::infinity());
    for (const MeasuredPoint &m : measured)
    {
        std::size_t best = 0;
        for (std::size_t i = 1; i < rows.size(); ++i)
        {
            if (std::abs(rows[i].pump_power - m.pump_power) < std::abs(rows[best].pump_power - m.pump_power))
            {
                best = i;
            }
        }
        const double distance = std::abs(rows[best].pump_power - m.pump_power);
        if (distance < attached_distance[best])
        {
            attached_distance[best] = distance;
            rows[best].measured = m.levels;
        }
    }
    return rows;
}

VarianceLevels scaled_prediction(const Nominal &nominal, double gain_scale, double efficiency_scale,
                                 bool circuit_noise)
{
    ModelParams params = model_params(nominal);
    const double gain = gain_scale * nominal_gain(nominal.pump, threshold_power(nominal.cavity));
    if (!(gain >= 1.0))
    {
        throw DomainError("scaled parametric gain must be >= 1");
    }
    params.pump_parameter = 1.0 - 1.0 / std::sqrt(gain);
    params.detection_efficiency *= efficiency_scale;
    return maybe_observed(min_max_levels(params), nominal.chain, circuit_noise);
}

Reconciliation reconcile_discrepancy(const VarianceLevels &measured, const Nominal &nominal,
                                     const ReconcileOptions &options)
{
    const double base_gain = nominal_gain(nominal.pump, threshold_power(nominal.cavity));
    const double alpha = detection_efficiency(nominal.chain);

    Eigen::VectorXd lower(2), upper(2);
    lower << std::max(options.gain_scale_min, 1.0 / base_gain), options.efficiency_scale_min;
    upper << options.gain_scale_max, std::min(options.efficiency_scale_max, 1.0 / alpha);

    const auto level_residual = [&](double g, double e) {
        const VarianceLevels p = scaled_prediction(nominal, g, e, options.circuit_noise);
        return Eigen::Vector2d(p.s_min_db - measured.s_min_db, p.s_max_db - measured.s_max_db);
    };

    // Newton on the square 2x2 system with Marquardt damping and projection onto the box.
    const ResidualFunction fn = [&](const Eigen::VectorXd &p, Eigen::VectorXd &r, Eigen::MatrixXd *jac) {
        r = level_residual(p[0], p[1]);
        if (jac)
        {
            jac->resize(2, 2);
            for (int k = 0; k < 2; ++k)
            {
                const double h = 1e-6;
                Eigen::VectorXd hi = p, lo = p;
                hi[k] = std::min(p[k] + h, upper[k]);
                lo[k] = std::max(p[k] - h, lower[k]);
                jac->col(k) = (level_residual(hi[0], hi[1]) - level_residual(lo[0], lo[1])) / (hi[k] - lo[k]);
            }
        }
    };

    LmOptions lm;
    lm.max_iterations = options.max_iterations;
    lm.lower = lower;
    lm.upper = upper;
    lm.ftol = 0.0;
    lm.xtol = 1e-14;
    lm.initial_lambda = 1e-6;
    Eigen::VectorXd start(2);
    start << std::clamp(1.0, lower[0], upper[0]), std::clamp(1.0, lower[1], upper[1]);
    const LmResult solved = levenberg_marquardt(fn, start, lm);

    Reconciliation out;
    out.gain_scale = solved.params[0];
    out.efficiency_scale = solved.params[1];
    out.residual_db = std::sqrt(solved.cost);
    out.exact = out.residual_db <= options.residual_tolerance_db;
    out.iterations = solved.iterations;
    out.predicted = scaled_prediction(nominal, out.gain_scale, out.efficiency_scale, options.circuit_noise);
    return out;
}

LossOnlyReport loss_only_explanation_check(const VarianceLevels &measured, const Nominal &nominal,
                                           double tolerance_db, bool circuit_noise)
{
    const auto s_min_at = [&](double e) { return scaled_prediction(nominal, 1.0, e, circuit_noise).s_min_db; };

    LossOnlyReport report;
    report.tolerance_db = tolerance_db;
    // s_min rises monotonically towards 0 dB as the efficiency drops.
    double lo = 1e-9;
    double hi = 1.0;
    if (measured.s_min_db < s_min_at(hi) || measured.s_min_db >= s_min_at(lo))
    {
        report.s_min_matchable = false;
        report.efficiency_scale = measured.s_min_db < s_min_at(hi) ? hi : lo;
    }
    else
    {
        for (int i = 0; i < 200 && hi - lo > 1e-15; ++i)
        {
            const double mid = 0.5 * (lo + hi);
            (s_min_at(mid) > measured.s_min_db ? lo : hi) = mid;
        }
        report.efficiency_scale = 0.5 * (lo + hi);
    }
    report.predicted = scaled_prediction(nominal, 1.0, report.efficiency_scale, circuit_noise);
    report.s_max_mismatch_db = report.predicted.s_max_db - measured.s_max_db;
    report.feasible = report.s_min_matchable && std::abs(report.s_max_mismatch_db) <= tolerance_db;
    return report;
}

} // namespace sqz
