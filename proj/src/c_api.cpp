#include "sqz/sqz.h"

#include "sqz/config.hpp"
#include "sqz/errors.hpp"
#include "sqz/fit.hpp"
#include "sqz/inference.hpp"
#include "sqz/trace_io.hpp"

#include <algorithm>
#include <cstdlib>
#include <cstring>
#include <new>
#include <string>
#include <vector>

struct sqz_config
{
    sqz::ExperimentConfig value;
};

struct sqz_trace
{
    sqz::NoiseTrace value;
};

namespace
{

thread_local std::string last_error;
thread_local std::size_t last_error_line = 0;

sqz_status fail(sqz_status status, const std::string &message, std::size_t line = 0)
{
    last_error = message;
    last_error_line = line;
    return status;
}

// Runs body and maps library exceptions onto status codes.
template <class F>
sqz_status guarded(F &&body)
{
    last_error.clear();
    last_error_line = 0;
    try
    {
        body();
        return SQZ_OK;
    }
    catch (const sqz::ParseError &e)
    {
        return fail(SQZ_ERROR_PARSE, e.what(), e.line());
    }
    catch (const sqz::AboveThresholdError &e)
    {
        return fail(SQZ_ERROR_ABOVE_THRESHOLD, e.what());
    }
    catch (const sqz::DomainError &e)
    {
        return fail(SQZ_ERROR_DOMAIN, e.what());
    }
    catch (const sqz::ArgumentError &e)
    {
        return fail(SQZ_ERROR_ARGUMENT, e.what());
    }
    catch (const std::bad_alloc &)
    {
        return fail(SQZ_ERROR_INTERNAL, "out of memory");
    }
    catch (const std::exception &e)
    {
        return fail(SQZ_ERROR_INTERNAL, e.what());
    }
    catch (...)
    {
        return fail(SQZ_ERROR_INTERNAL, "unknown error");
    }
}

void require_non_null(const void *p, const char *what)
{
    if (!p)
    {
        throw sqz::ArgumentError(std::string(what) + " is null");
    }
}

char *duplicate(const std::string &s)
{
    char *out = static_cast<char *>(std::malloc(s.size() + 1));
    if (!out)
    {
        throw std::bad_alloc();
    }
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

sqz_levels to_c(const sqz::VarianceLevels &l) { return {l.s_min, l.s_max, l.s_min_db, l.s_max_db}; }

std::string pump_annotation(const sqz::PumpSpec &pump)
{
    char buf[64];
    if (const auto *p = std::get_if<sqz::PumpPower>(&pump))
    {
        std::snprintf(buf, sizeof buf, "power:%.17gW", p->watts);
    }
    else if (const auto *g = std::get_if<sqz::ParametricGain>(&pump))
    {
        std::snprintf(buf, sizeof buf, "gain:%.17g", g->value);
    }
    else
    {
        std::snprintf(buf, sizeof buf, "x:%.17g", std::get<sqz::PumpParameter>(pump).value);
    }
    return buf;
}

std::string g17(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace

extern "C" {

const char *sqz_version(void) { return "1.0.0"; }

const char *sqz_last_error(void) { return last_error.c_str(); }

size_t sqz_last_error_line(void) { return last_error_line; }

void sqz_string_free(char *text) { std::free(text); }

sqz_status sqz_config_parse(const char *text, sqz_config **out)
{
    return guarded([&] {
        require_non_null(text, "text");
        require_non_null(out, "out");
        *out = new sqz_config{sqz::parse_config(text)};
    });
}

sqz_status sqz_config_load(const char *path, sqz_config **out)
{
    return guarded([&] {
        require_non_null(path, "path");
        require_non_null(out, "out");
        *out = new sqz_config{sqz::load_config(path)};
    });
}

sqz_status sqz_config_serialize(const sqz_config *config, char **out_text)
{
    return guarded([&] {
        require_non_null(config, "config");
        require_non_null(out_text, "out_text");
        *out_text = duplicate(sqz::serialize_config(config->value));
    });
}

double sqz_config_circuit_noise_clearance_db(const sqz_config *config)
{
    return config ? config->value.detection.circuit_noise_clearance_db : 0.0;
}

void sqz_config_free(sqz_config *config) { delete config; }

double sqz_quadrature_variance(double theta, double alpha, double rho, double x, double omega)
{
    return sqz::quadrature_variance(theta, {alpha, rho, x, omega});
}

sqz_status sqz_jitter_averaged_variance(double theta0, double sigma, double alpha, double rho, double x, double omega,
                                        double *out)
{
    return guarded([&] {
        require_non_null(out, "out");
        const sqz::ModelParams params{alpha, rho, x, omega};
        params.validate();
        *out = sqz::jitter_averaged_variance(theta0, sigma, params);
    });
}

sqz_status sqz_apply_circuit_noise(double s_linear, double clearance_db, double *out_db)
{
    return guarded([&] {
        require_non_null(out_db, "out_db");
        *out_db = sqz::apply_circuit_noise(s_linear, clearance_db);
    });
}

sqz_status sqz_predict(const sqz_config *config, sqz_prediction *out)
{
    return guarded([&] {
        require_non_null(config, "config");
        require_non_null(out, "out");
        const sqz::Prediction p = sqz::predict(config->value.nominal());
        *out = {p.threshold_power, p.escape_efficiency, p.detection_efficiency, p.decay_rate, p.detuning,
                p.pump_parameter, p.parametric_gain, to_c(p.intrinsic), to_c(p.observed)};
    });
}

sqz_status sqz_synthesize(const sqz_config *config, uint64_t seed, sqz_trace **out)
{
    return guarded([&] {
        require_non_null(config, "config");
        require_non_null(out, "out");
        const auto &cfg = config->value;
        auto trace = sqz::synthesize_trace(sqz::model_params(cfg.nominal()), cfg.detection, cfg.acquisition, seed);
        const auto &c = cfg.cavity;
        trace.annotations.emplace_back("cavity.round_trip_length_m", g17(c.round_trip_length));
        trace.annotations.emplace_back("cavity.coupler_transmittance", g17(c.coupler_transmittance));
        trace.annotations.emplace_back("cavity.intracavity_loss", g17(c.intracavity_loss));
        trace.annotations.emplace_back("cavity.nonlinear_efficiency_per_w", g17(c.nonlinear_efficiency));
        trace.annotations.emplace_back("detection.quantum_efficiency", g17(cfg.detection.quantum_efficiency));
        trace.annotations.emplace_back("detection.visibility", g17(cfg.detection.visibility));
        trace.annotations.emplace_back("detection.propagation_efficiency",
                                       g17(cfg.detection.propagation_efficiency));
        trace.annotations.emplace_back("pump", pump_annotation(cfg.pump));
        *out = new sqz_trace{std::move(trace)};
    });
}

sqz_status sqz_synthesize_shot_reference(const sqz_config *config, uint64_t seed, sqz_trace **out)
{
    return guarded([&] {
        require_non_null(config, "config");
        require_non_null(out, "out");
        *out = new sqz_trace{
            sqz::synthesize_shot_reference(config->value.acquisition, config->value.detection, seed)};
    });
}

sqz_status sqz_trace_parse(const char *text, sqz_trace **out)
{
    return guarded([&] {
        require_non_null(text, "text");
        require_non_null(out, "out");
        *out = new sqz_trace{sqz::parse_trace(text)};
    });
}

sqz_status sqz_trace_load(const char *path, sqz_trace **out)
{
    return guarded([&] {
        require_non_null(path, "path");
        require_non_null(out, "out");
        *out = new sqz_trace{sqz::load_trace(path)};
    });
}

sqz_status sqz_trace_save(const sqz_trace *trace, const char *path)
{
    const sqz_status status = guarded([&] {
        require_non_null(trace, "trace");
        require_non_null(path, "path");
        sqz::save_trace(path, trace->value);
    });
    return status == SQZ_ERROR_ARGUMENT && trace && path ? SQZ_ERROR_IO : status;
}

sqz_status sqz_trace_serialize(const sqz_trace *trace, char **out_text)
{
    return guarded([&] {
        require_non_null(trace, "trace");
        require_non_null(out_text, "out_text");
        *out_text = duplicate(sqz::serialize_trace(trace->value));
    });
}

size_t sqz_trace_size(const sqz_trace *trace) { return trace ? trace->value.samples.size() : 0; }

sqz_status sqz_trace_sample(const sqz_trace *trace, size_t index, double *time_s, double *power_db)
{
    return guarded([&] {
        require_non_null(trace, "trace");
        if (index >= trace->value.samples.size())
        {
            throw sqz::ArgumentError("sample index out of range");
        }
        const auto &s = trace->value.samples[index];
        if (time_s)
        {
            *time_s = s.time;
        }
        if (power_db)
        {
            *power_db = s.power_db;
        }
    });
}

void sqz_trace_free(sqz_trace *trace) { delete trace; }

void sqz_fit_options_default(sqz_fit_options *options)
{
    if (options)
    {
        *options = {1, 1, 200};
    }
}

sqz_status sqz_fit(const sqz_trace *trace, const sqz_config *config, const sqz_fit_options *options,
                   sqz_fit_report *out)
{
    return guarded([&] {
        require_non_null(trace, "trace");
        require_non_null(config, "config");
        require_non_null(out, "out");
        sqz_fit_options opts;
        sqz_fit_options_default(&opts);
        if (options)
        {
            opts = *options;
        }
        const double clearance = config->value.detection.circuit_noise_clearance_db;
        const sqz::FitModel guess = sqz::initial_guess(trace->value, clearance, opts.fit_jitter != 0);
        sqz::FitOptions fit_options;
        fit_options.weighted = opts.weighted != 0;
        fit_options.max_iterations = opts.max_iterations > 0 ? opts.max_iterations : 200;
        const sqz::FitResult r = sqz::fit_trace(trace->value, guess, fit_options);

        sqz_fit_report report{};
        report.levels = to_c(r.levels);
        report.s_min_sigma_db = r.s_min_sigma_db;
        report.s_max_sigma_db = r.s_max_sigma_db;
        report.observed = to_c(r.observed_levels);
        report.observed_s_min_sigma_db = r.observed_s_min_sigma_db;
        report.observed_s_max_sigma_db = r.observed_s_max_sigma_db;
        report.theta0 = r.parameters.theta0;
        report.theta0_sigma = r.theta0_sigma;
        report.scan_rate = r.parameters.scan_rate;
        report.scan_rate_sigma = r.scan_rate_sigma;
        report.jitter = r.parameters.jitter_sigma;
        report.jitter_sigma = r.jitter_sigma_sigma;
        report.residual_rms_db = r.residual_rms;
        report.iterations = r.iterations;
        report.converged = r.converged ? 1 : 0;
        report.identifiable = r.identifiable ? 1 : 0;
        report.parameter_count = static_cast<int>(r.covariance.rows());
        for (Eigen::Index i = 0; i < r.covariance.rows(); ++i)
        {
            for (Eigen::Index j = 0; j < r.covariance.cols(); ++j)
            {
                report.covariance[i * report.parameter_count + j] = r.covariance(i, j);
            }
        }
        *out = report;
    });
}

sqz_status sqz_extract_extrema(const sqz_trace *trace, const sqz_config *config, size_t window,
                               sqz_extrema_report *out)
{
    return guarded([&] {
        require_non_null(trace, "trace");
        require_non_null(config, "config");
        require_non_null(out, "out");
        const auto e =
            sqz::extract_extrema(trace->value, config->value.detection.circuit_noise_clearance_db, window);
        *out = {e.observed_min_db,       e.observed_max_db, e.observed_min_sigma_db,
                e.observed_max_sigma_db, to_c(e.levels),    e.window};
    });
}

sqz_status sqz_sweep(const sqz_config *config, sqz_pump_kind kind, const double *values, size_t count,
                     const sqz_measured_point *measured, size_t measured_count, sqz_sweep_row *rows)
{
    return guarded([&] {
        require_non_null(config, "config");
        require_non_null(rows, "rows");
        if (count == 0 || !values)
        {
            throw sqz::ArgumentError("sweep needs at least one pump value");
        }
        if (measured_count > 0)
        {
            require_non_null(measured, "measured");
        }
        std::vector<sqz::PumpSpec> pumps;
        pumps.reserve(count);
        for (size_t i = 0; i < count; ++i)
        {
            switch (kind)
            {
            case SQZ_PUMP_POWER: pumps.emplace_back(sqz::PumpPower{values[i]}); break;
            case SQZ_PUMP_GAIN: pumps.emplace_back(sqz::ParametricGain{values[i]}); break;
            case SQZ_PUMP_PARAMETER: pumps.emplace_back(sqz::PumpParameter{values[i]}); break;
            default: throw sqz::ArgumentError("unknown pump kind");
            }
        }
        std::vector<sqz::MeasuredPoint> points;
        for (size_t i = 0; i < measured_count; ++i)
        {
            points.push_back(
                {measured[i].pump_power_w, sqz::VarianceLevels::from_db(measured[i].s_min_db, measured[i].s_max_db)});
        }
        const auto &cfg = config->value;
        const auto table =
            sqz::sweep_pump(cfg.cavity, cfg.detection, pumps, cfg.acquisition.center_frequency, points);
        for (size_t i = 0; i < table.size(); ++i)
        {
            const auto &r = table[i];
            sqz_sweep_row row{};
            row.primary = static_cast<int>(r.primary);
            row.pump_power_w = r.pump_power;
            row.parametric_gain = r.parametric_gain;
            row.pump_parameter = r.pump_parameter;
            row.valid = r.valid ? 1 : 0;
            row.predicted = to_c(r.predicted);
            row.predicted_observed = to_c(r.predicted_observed);
            row.has_measured = r.measured ? 1 : 0;
            if (r.measured)
            {
                row.measured = to_c(*r.measured);
            }
            std::snprintf(row.note, sizeof row.note, "%s", r.note.c_str());
            rows[i] = row;
        }
    });
}

sqz_status sqz_reconcile(const sqz_config *config, double s_min_db, double s_max_db, sqz_reconcile_report *out)
{
    return guarded([&] {
        require_non_null(config, "config");
        require_non_null(out, "out");
        const auto r = sqz::reconcile_discrepancy(sqz::VarianceLevels::from_db(s_min_db, s_max_db),
                                                  config->value.nominal());
        *out = {r.gain_scale, r.efficiency_scale, r.residual_db, r.exact ? 1 : 0, r.iterations, to_c(r.predicted)};
    });
}

sqz_status sqz_loss_only_check(const sqz_config *config, double s_min_db, double s_max_db, double tolerance_db,
                               sqz_loss_only_report *out)
{
    return guarded([&] {
        require_non_null(config, "config");
        require_non_null(out, "out");
        const auto r = sqz::loss_only_explanation_check(sqz::VarianceLevels::from_db(s_min_db, s_max_db),
                                                        config->value.nominal(), tolerance_db);
        *out = {r.efficiency_scale,        r.s_max_mismatch_db, r.tolerance_db,
                r.s_min_matchable ? 1 : 0, r.feasible ? 1 : 0,  to_c(r.predicted)};
    });
}

} // extern "C"
