// Command-line front end. Talks to the library only through sqz.h.

#include "sqz/sqz.h"

#include <CLI11.hpp>
#include <json.hpp>

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace
{

using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitNoConvergence = 2;

struct CliError
{
    std::string message;
};

enum class Format
{
    Text,
    Csv,
    Json
};

struct Globals
{
    std::string config_path;
    std::string format = "text";
    std::uint64_t seed = 1;

    Format fmt() const
    {
        if (format == "json")
        {
            return Format::Json;
        }
        return format == "csv" ? Format::Csv : Format::Text;
    }
};

struct ConfigDeleter
{
    void operator()(sqz_config *c) const { sqz_config_free(c); }
};
struct TraceDeleter
{
    void operator()(sqz_trace *t) const { sqz_trace_free(t); }
};
using ConfigPtr = std::unique_ptr<sqz_config, ConfigDeleter>;
using TracePtr = std::unique_ptr<sqz_trace, TraceDeleter>;

void check(sqz_status status)
{
    if (status != SQZ_OK)
    {
        throw CliError{sqz_last_error()};
    }
}

ConfigPtr load_config(const Globals &g)
{
    if (g.config_path.empty())
    {
        throw CliError{"--config is required"};
    }
    sqz_config *raw = nullptr;
    const sqz_status status = sqz_config_load(g.config_path.c_str(), &raw);
    if (status != SQZ_OK)
    {
        throw CliError{g.config_path + ": " + sqz_last_error()};
    }
    return ConfigPtr(raw);
}

// Four significant digits, trailing zeros kept.
std::string sig4(double v, bool sign = false)
{
    char buf[48];
    std::snprintf(buf, sizeof buf, sign ? "%+#.4g" : "%#.4g", v);
    return buf;
}

std::string full(double v)
{
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

json levels_json(const sqz_levels &l)
{
    return {{"s_min", l.s_min}, {"s_max", l.s_max}, {"s_min_db", l.s_min_db}, {"s_max_db", l.s_max_db}};
}

constexpr const char *kCircuitConvention = "observed = 10*log10((S + n)/(1 + n)), n = 10^(-clearance_db/10)";

// ---- predict ---------------------------------------------------------------

int run_predict(const Globals &g, const std::string &circuit_noise)
{
    const auto config = load_config(g);
    sqz_prediction p{};
    check(sqz_predict(config.get(), &p));
    const bool with_circuit = circuit_noise == "on";
    const double clearance = sqz_config_circuit_noise_clearance_db(config.get());

    switch (g.fmt())
    {
    case Format::Json:
    {
        json out = {{"threshold_power_mw", p.threshold_power_w * 1e3},
                    {"rho", p.escape_efficiency},
                    {"alpha", p.detection_efficiency},
                    {"gamma_per_s", p.decay_rate},
                    {"omega", p.detuning},
                    {"x", p.pump_parameter},
                    {"gain", p.parametric_gain},
                    {"intrinsic", levels_json(p.intrinsic)},
                    {"circuit_noise", with_circuit}};
        out["observed"] = with_circuit ? levels_json(p.observed) : json(nullptr);
        out["circuit_noise_clearance_db"] = clearance;
        out["circuit_noise_convention"] = kCircuitConvention;
        std::cout << out.dump(2) << '\n';
        break;
    }
    case Format::Csv:
        std::cout << "threshold_power_mw,rho,alpha,gamma_per_s,omega,x,gain,s_min_db,s_max_db,"
                     "observed_s_min_db,observed_s_max_db\n";
        std::cout << full(p.threshold_power_w * 1e3) << ',' << full(p.escape_efficiency) << ','
                  << full(p.detection_efficiency) << ',' << full(p.decay_rate) << ',' << full(p.detuning) << ','
                  << full(p.pump_parameter) << ',' << full(p.parametric_gain) << ',' << full(p.intrinsic.s_min_db)
                  << ',' << full(p.intrinsic.s_max_db) << ',' << (with_circuit ? full(p.observed.s_min_db) : "")
                  << ',' << (with_circuit ? full(p.observed.s_max_db) : "") << '\n';
        break;
    case Format::Text:
        std::cout << "P_th = " << sig4(p.threshold_power_w * 1e3) << " mW\n"
                  << "rho = " << sig4(p.escape_efficiency) << '\n'
                  << "alpha = " << sig4(p.detection_efficiency) << '\n'
                  << "gamma = " << sig4(p.decay_rate) << " 1/s\n"
                  << "Omega = " << sig4(p.detuning) << '\n'
                  << "x = " << sig4(p.pump_parameter) << '\n'
                  << "G = " << sig4(p.parametric_gain) << '\n'
                  << "squeezing = " << sig4(p.intrinsic.s_min_db, true) << " dB\n"
                  << "anti-squeezing = " << sig4(p.intrinsic.s_max_db, true) << " dB\n";
        if (with_circuit)
        {
            std::cout << "circuit noise " << sig4(clearance) << " dB below shot noise; " << kCircuitConvention
                      << '\n'
                      << "observed squeezing = " << sig4(p.observed.s_min_db, true) << " dB\n"
                      << "observed anti-squeezing = " << sig4(p.observed.s_max_db, true) << " dB\n";
        }
        break;
    }
    return kExitOk;
}

// ---- synth -----------------------------------------------------------------

int run_synth(const Globals &g, const std::string &out_path, bool shot_reference)
{
    const auto config = load_config(g);
    sqz_trace *raw = nullptr;
    check(shot_reference ? sqz_synthesize_shot_reference(config.get(), g.seed, &raw)
                         : sqz_synthesize(config.get(), g.seed, &raw));
    const TracePtr trace(raw);
    if (out_path.empty() || out_path == "-")
    {
        char *text = nullptr;
        check(sqz_trace_serialize(trace.get(), &text));
        std::cout << text;
        sqz_string_free(text);
    }
    else
    {
        check(sqz_trace_save(trace.get(), out_path.c_str()));
        if (g.fmt() == Format::Json)
        {
            std::cout << json{{"path", out_path}, {"samples", sqz_trace_size(trace.get())}, {"seed", g.seed}}.dump(2)
                      << '\n';
        }
        else
        {
            std::cout << "wrote " << sqz_trace_size(trace.get()) << " samples to " << out_path << '\n';
        }
    }
    return kExitOk;
}

// ---- fit -------------------------------------------------------------------

const char *const kParameterNames[SQZ_MAX_FIT_PARAMETERS] = {"s_min_db", "s_max_db", "theta0", "scan_rate",
                                                             "jitter"};

TracePtr load_trace(const std::string &path)
{
    sqz_trace *raw = nullptr;
    const sqz_status status = sqz_trace_load(path.c_str(), &raw);
    if (status != SQZ_OK)
    {
        throw CliError{path + ": " + sqz_last_error()};
    }
    return TracePtr(raw);
}

int run_fit_extrema(const Globals &g, const sqz_trace *trace, const sqz_config *config)
{
    sqz_extrema_report e{};
    check(sqz_extract_extrema(trace, config, 0, &e));
    if (g.fmt() == Format::Json)
    {
        json out = {{"mode", "extrema"},
                    {"levels", levels_json(e.levels)},
                    {"observed_min_db", e.observed_min_db},
                    {"observed_max_db", e.observed_max_db},
                    {"observed_min_sigma_db", e.observed_min_sigma_db},
                    {"observed_max_sigma_db", e.observed_max_sigma_db},
                    {"window", e.window}};
        std::cout << out.dump(2) << '\n';
    }
    else if (g.fmt() == Format::Csv)
    {
        std::cout << "s_min_db,s_max_db,observed_min_db,observed_min_sigma_db,observed_max_db,observed_max_sigma_db,"
                     "window\n"
                  << full(e.levels.s_min_db) << ',' << full(e.levels.s_max_db) << ',' << full(e.observed_min_db)
                  << ',' << full(e.observed_min_sigma_db) << ',' << full(e.observed_max_db) << ','
                  << full(e.observed_max_sigma_db) << ',' << e.window << '\n';
    }
    else
    {
        std::cout << "mode = extrema (window " << e.window << " samples)\n"
                  << "observed squeezing = " << sig4(e.observed_min_db, true) << " +/- "
                  << sig4(e.observed_min_sigma_db) << " dB\n"
                  << "observed anti-squeezing = " << sig4(e.observed_max_db, true) << " +/- "
                  << sig4(e.observed_max_sigma_db) << " dB\n"
                  << "squeezing = " << sig4(e.levels.s_min_db, true) << " dB\n"
                  << "anti-squeezing = " << sig4(e.levels.s_max_db, true) << " dB\n";
    }
    return kExitOk;
}

int run_fit(const Globals &g, const std::string &trace_path, const std::string &mode, bool no_jitter,
            bool unweighted, int max_iterations)
{
    const auto config = load_config(g);
    const auto trace = load_trace(trace_path);
    if (mode == "extrema")
    {
        return run_fit_extrema(g, trace.get(), config.get());
    }

    sqz_fit_options options;
    sqz_fit_options_default(&options);
    options.fit_jitter = no_jitter ? 0 : 1;
    options.weighted = unweighted ? 0 : 1;
    if (max_iterations > 0)
    {
        options.max_iterations = max_iterations;
    }
    sqz_fit_report r{};
    check(sqz_fit(trace.get(), config.get(), &options, &r));

    const int n = r.parameter_count;
    switch (g.fmt())
    {
    case Format::Json:
    {
        json params = json::object();
        const double values[SQZ_MAX_FIT_PARAMETERS] = {r.levels.s_min_db, r.levels.s_max_db, r.theta0, r.scan_rate,
                                                       r.jitter};
        json names = json::array();
        for (int i = 0; i < n; ++i)
        {
            params[kParameterNames[i]] = values[i];
            names.push_back(kParameterNames[i]);
        }
        json cov = json::array();
        for (int i = 0; i < n; ++i)
        {
            json row = json::array();
            for (int j = 0; j < n; ++j)
            {
                row.push_back(r.covariance[i * n + j]);
            }
            cov.push_back(row);
        }
        json out = {{"mode", "scan"},
                    {"parameters", params},
                    {"parameter_names", names},
                    {"covariance", cov},
                    {"levels", levels_json(r.levels)},
                    {"s_min_sigma_db", r.s_min_sigma_db},
                    {"s_max_sigma_db", r.s_max_sigma_db},
                    {"observed_levels", levels_json(r.observed)},
                    {"observed_s_min_sigma_db", r.observed_s_min_sigma_db},
                    {"observed_s_max_sigma_db", r.observed_s_max_sigma_db},
                    {"theta0_sigma", r.theta0_sigma},
                    {"scan_rate_sigma", r.scan_rate_sigma},
                    {"jitter_sigma", r.jitter_sigma},
                    {"residual_rms_db", r.residual_rms_db},
                    {"iterations", r.iterations},
                    {"converged", r.converged != 0},
                    {"identifiable", r.identifiable != 0}};
        std::cout << out.dump(2) << '\n';
        break;
    }
    case Format::Csv:
        std::cout << "s_min_db,s_min_sigma_db,s_max_db,s_max_sigma_db,observed_s_min_db,observed_s_min_sigma_db,"
                     "observed_s_max_db,observed_s_max_sigma_db,theta0,scan_rate,jitter,residual_rms_db,iterations,"
                     "converged,identifiable\n"
                  << full(r.levels.s_min_db) << ',' << full(r.s_min_sigma_db) << ',' << full(r.levels.s_max_db)
                  << ',' << full(r.s_max_sigma_db) << ',' << full(r.observed.s_min_db) << ','
                  << full(r.observed_s_min_sigma_db) << ',' << full(r.observed.s_max_db) << ','
                  << full(r.observed_s_max_sigma_db) << ',' << full(r.theta0) << ',' << full(r.scan_rate) << ','
                  << full(r.jitter) << ',' << full(r.residual_rms_db) << ',' << r.iterations << ',' << r.converged
                  << ',' << r.identifiable << '\n';
        break;
    case Format::Text:
        std::cout << "squeezing = " << sig4(r.levels.s_min_db, true) << " +/- " << sig4(r.s_min_sigma_db) << " dB\n"
                  << "anti-squeezing = " << sig4(r.levels.s_max_db, true) << " +/- " << sig4(r.s_max_sigma_db)
                  << " dB\n"
                  << "observed squeezing = " << sig4(r.observed.s_min_db, true) << " +/- "
                  << sig4(r.observed_s_min_sigma_db) << " dB\n"
                  << "observed anti-squeezing = " << sig4(r.observed.s_max_db, true) << " +/- "
                  << sig4(r.observed_s_max_sigma_db) << " dB\n"
                  << "theta0 = " << sig4(r.theta0) << " +/- " << sig4(r.theta0_sigma) << " rad\n"
                  << "scan rate = " << sig4(r.scan_rate) << " +/- " << sig4(r.scan_rate_sigma) << " rad/s\n";
        if (n == SQZ_MAX_FIT_PARAMETERS)
        {
            std::cout << "jitter = " << sig4(r.jitter) << " +/- " << sig4(r.jitter_sigma) << " rad\n";
        }
        std::cout << "residual rms = " << sig4(r.residual_rms_db) << " dB\n"
                  << "iterations = " << r.iterations << '\n'
                  << "converged = " << (r.converged ? "yes" : "no") << '\n';
        if (!r.identifiable)
        {
            std::cout << "phase not identifiable (flat trace); theta0 uncertainty is the full range\n";
        }
        break;
    }
    return r.converged ? kExitOk : kExitNoConvergence;
}

// ---- sweep -----------------------------------------------------------------

// Accepts "61mW", "0.061W", "61000uW".
double parse_power(const std::string &token)
{
    double value = 0.0;
    const char *first = token.data();
    const char *last = first + token.size();
    const auto res = std::from_chars(first, last, value);
    if (res.ec != std::errc() || !std::isfinite(value))
    {
        throw CliError{"bad power '" + token + "'"};
    }
    const std::string_view unit(res.ptr, static_cast<std::size_t>(last - res.ptr));
    if (unit == "W")
    {
        return value;
    }
    if (unit == "mW")
    {
        return value * 1e-3;
    }
    if (unit == "uW")
    {
        return value * 1e-6;
    }
    throw CliError{"power '" + token + "' needs a unit suffix (W, mW, uW)"};
}

double parse_number(std::string_view token, const std::string &what)
{
    while (!token.empty() && (token.front() == ' ' || token.front() == '\t'))
    {
        token.remove_prefix(1);
    }
    while (!token.empty() && (token.back() == ' ' || token.back() == '\t' || token.back() == '\r'))
    {
        token.remove_suffix(1);
    }
    if (!token.empty() && token.front() == '+')
    {
        token.remove_prefix(1);
    }
    double value = 0.0;
    const auto res = std::from_chars(token.data(), token.data() + token.size(), value);
    if (res.ec != std::errc() || res.ptr != token.data() + token.size() || !std::isfinite(value))
    {
        throw CliError{"bad number '" + std::string(token) + "' in " + what};
    }
    return value;
}

// CSV with columns pump_mw,s_min_db,s_max_db; an optional header row is skipped.
std::vector<sqz_measured_point> load_measured(const std::string &path)
{
    std::ifstream in(path);
    if (!in)
    {
        throw CliError{"cannot open " + path};
    }
    std::vector<sqz_measured_point> points;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line))
    {
        ++line_no;
        if (line.empty() || line.front() == '#' || line.find_first_not_of(" \t\r") == std::string::npos)
        {
            continue;
        }
        if (points.empty() && line.rfind("pump", 0) == 0)
        {
            continue;
        }
        std::vector<std::string_view> cells;
        std::string_view rest(line);
        for (;;)
        {
            const auto comma = rest.find(',');
            cells.push_back(rest.substr(0, comma));
            if (comma == std::string_view::npos)
            {
                break;
            }
            rest.remove_prefix(comma + 1);
        }
        const std::string where = path + " line " + std::to_string(line_no);
        if (cells.size() != 3)
        {
            throw CliError{where + ": expected pump_mw,s_min_db,s_max_db"};
        }
        points.push_back({parse_number(cells[0], where) * 1e-3, parse_number(cells[1], where),
                          parse_number(cells[2], where)});
    }
    return points;
}

const char *kind_name(int kind)
{
    switch (kind)
    {
    case SQZ_PUMP_POWER: return "power";
    case SQZ_PUMP_GAIN: return "gain";
    default: return "x";
    }
}

int run_sweep(const Globals &g, const std::vector<double> &gains, const std::vector<std::string> &powers,
              const std::vector<double> &xs, const std::string &measured_path)
{
    const int given = !gains.empty() + !powers.empty() + !xs.empty();
    if (given != 1)
    {
        throw CliError{"give exactly one of --gains, --powers, --x"};
    }
    const auto config = load_config(g);
    sqz_pump_kind kind = SQZ_PUMP_GAIN;
    std::vector<double> values = gains;
    if (!powers.empty())
    {
        kind = SQZ_PUMP_POWER;
        values.clear();
        for (const auto &p : powers)
        {
            values.push_back(parse_power(p));
        }
    }
    else if (!xs.empty())
    {
        kind = SQZ_PUMP_PARAMETER;
        values = xs;
    }
    const auto measured = measured_path.empty() ? std::vector<sqz_measured_point>{} : load_measured(measured_path);
    std::vector<sqz_sweep_row> rows(values.size());
    check(sqz_sweep(config.get(), kind, values.data(), values.size(), measured.data(), measured.size(),
                    rows.data()));

    switch (g.fmt())
    {
    case Format::Json:
    {
        json out = json::array();
        for (const auto &r : rows)
        {
            out.push_back({{"primary", kind_name(r.primary)},
                           {"pump_power_mw", r.pump_power_w * 1e3},
                           {"gain", r.parametric_gain},
                           {"x", r.pump_parameter},
                           {"valid", r.valid != 0},
                           {"note", r.note},
                           {"predicted", r.valid ? levels_json(r.predicted) : json(nullptr)},
                           {"predicted_observed", r.valid ? levels_json(r.predicted_observed) : json(nullptr)},
                           {"measured", r.has_measured ? levels_json(r.measured) : json(nullptr)}});
        }
        std::cout << json{{"rows", out}}.dump(2) << '\n';
        break;
    }
    case Format::Csv:
        std::cout << "primary,pump_power_mw,gain,x,valid,s_min_db,s_max_db,observed_s_min_db,observed_s_max_db,"
                     "measured_s_min_db,measured_s_max_db,note\n";
        for (const auto &r : rows)
        {
            std::cout << kind_name(r.primary) << ',' << full(r.pump_power_w * 1e3) << ',' << full(r.parametric_gain)
                      << ',' << full(r.pump_parameter) << ',' << r.valid << ','
                      << (r.valid ? full(r.predicted.s_min_db) : "") << ','
                      << (r.valid ? full(r.predicted.s_max_db) : "") << ','
                      << (r.valid ? full(r.predicted_observed.s_min_db) : "") << ','
                      << (r.valid ? full(r.predicted_observed.s_max_db) : "") << ','
                      << (r.has_measured ? full(r.measured.s_min_db) : "") << ','
                      << (r.has_measured ? full(r.measured.s_max_db) : "") << ',' << r.note << '\n';
        }
        break;
    case Format::Text:
    {
        char buf[256];
        std::snprintf(buf, sizeof buf, "%10s %8s %8s %10s %10s %10s %10s %10s %10s\n", "pump_mW", "G", "x",
                      "s_min_dB", "s_max_dB", "obs_min", "obs_max", "meas_min", "meas_max");
        std::cout << buf;
        for (const auto &r : rows)
        {
            if (!r.valid)
            {
                std::snprintf(buf, sizeof buf, "%10s %8s %8s  invalid: %s\n", sig4(r.pump_power_w * 1e3).c_str(),
                              sig4(r.parametric_gain).c_str(), sig4(r.pump_parameter).c_str(), r.note);
                std::cout << buf;
                continue;
            }
            std::snprintf(buf, sizeof buf, "%10s %8s %8s %10s %10s %10s %10s %10s %10s\n",
                          sig4(r.pump_power_w * 1e3).c_str(), sig4(r.parametric_gain).c_str(),
                          sig4(r.pump_parameter).c_str(), sig4(r.predicted.s_min_db, true).c_str(),
                          sig4(r.predicted.s_max_db, true).c_str(), sig4(r.predicted_observed.s_min_db, true).c_str(),
                          sig4(r.predicted_observed.s_max_db, true).c_str(),
                          r.has_measured ? sig4(r.measured.s_min_db, true).c_str() : "-",
                          r.has_measured ? sig4(r.measured.s_max_db, true).c_str() : "-");
            std::cout << buf;
        }
        break;
    }
    }
    return kExitOk;
}

// ---- reconcile -------------------------------------------------------------

int run_reconcile(const Globals &g, const std::string &measured, double tolerance_db)
{
    const auto comma = measured.find(',');
    if (comma == std::string::npos)
    {
        throw CliError{"--measured expects smin_db,smax_db"};
    }
    const double s_min = parse_number(std::string_view(measured).substr(0, comma), "--measured");
    const double s_max = parse_number(std::string_view(measured).substr(comma + 1), "--measured");
    const auto config = load_config(g);

    sqz_reconcile_report r{};
    check(sqz_reconcile(config.get(), s_min, s_max, &r));
    sqz_loss_only_report l{};
    check(sqz_loss_only_check(config.get(), s_min, s_max, tolerance_db, &l));

    switch (g.fmt())
    {
    case Format::Json:
    {
        json out = {{"measured", {{"s_min_db", s_min}, {"s_max_db", s_max}}},
                    {"gain_scale", r.gain_scale},
                    {"efficiency_scale", r.efficiency_scale},
                    {"residual_db", r.residual_db},
                    {"exact", r.exact != 0},
                    {"iterations", r.iterations},
                    {"predicted", levels_json(r.predicted)},
                    {"loss_only",
                     {{"efficiency_scale", l.efficiency_scale},
                      {"s_min_matchable", l.s_min_matchable != 0},
                      {"s_max_mismatch_db", l.s_max_mismatch_db},
                      {"tolerance_db", l.tolerance_db},
                      {"feasible", l.feasible != 0},
                      {"predicted", levels_json(l.predicted)}}}};
        std::cout << out.dump(2) << '\n';
        break;
    }
    case Format::Csv:
        std::cout << "gain_scale,efficiency_scale,residual_db,exact,loss_only_efficiency_scale,"
                     "loss_only_s_max_mismatch_db,loss_only_feasible\n"
                  << full(r.gain_scale) << ',' << full(r.efficiency_scale) << ',' << full(r.residual_db) << ','
                  << r.exact << ',' << full(l.efficiency_scale) << ',' << full(l.s_max_mismatch_db) << ','
                  << l.feasible << '\n';
        break;
    case Format::Text:
        std::cout << "gain_scale = " << sig4(r.gain_scale) << '\n'
                  << "efficiency_scale = " << sig4(r.efficiency_scale) << '\n'
                  << "residual = " << sig4(r.residual_db) << " dB" << (r.exact ? "" : " (best point in bounds)")
                  << '\n'
                  << "loss-only: efficiency_scale = " << sig4(l.efficiency_scale)
                  << ", anti-squeezing mismatch = " << sig4(l.s_max_mismatch_db, true) << " dB (tolerance "
                  << sig4(l.tolerance_db) << " dB) -> " << (l.feasible ? "feasible" : "infeasible") << '\n';
        break;
    }
    return kExitOk;
}

// "--measured -2.75,7.00" would otherwise be read as a short flag.
std::vector<std::string> normalize_args(int argc, char **argv)
{
    std::vector<std::string> args(argv + 1, argv + argc);
    std::vector<std::string> out;
    for (std::size_t i = 0; i < args.size(); ++i)
    {
        if (args[i] == "--measured" && i + 1 < args.size() && args[i + 1].size() > 1 && args[i + 1][0] == '-' &&
            (std::isdigit(static_cast<unsigned char>(args[i + 1][1])) || args[i + 1][1] == '.'))
        {
            out.push_back("--measured=" + args[i + 1]);
            ++i;
            continue;
        }
        out.push_back(args[i]);
    }
    std::reverse(out.begin(), out.end());
    return out;
}

} // namespace

int main(int argc, char **argv)
{
    CLI::App app{"Squeezed-vacuum OPO model, trace synthesis and fitting", "sqz"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--config", g.config_path, "experiment config file");
    app.add_option("--format", g.format, "output format")->check(CLI::IsMember({"text", "csv", "json"}));
    app.add_option("--seed", g.seed, "random seed");

    auto *predict = app.add_subcommand("predict", "closed-form squeezing prediction");
    predict->fallthrough();
    std::string circuit_noise = "on";
    predict->add_option("--circuit-noise", circuit_noise, "include the circuit-noise floor")
        ->check(CLI::IsMember({"on", "off"}));

    auto *synth = app.add_subcommand("synth", "synthesize a scanned-phase trace");
    synth->fallthrough();
    std::string out_path;
    bool shot_reference = false;
    synth->add_option("--out", out_path, "output trace file (default stdout)");
    synth->add_flag("--shot-reference", shot_reference, "OPO blocked");

    auto *fit = app.add_subcommand("fit", "fit a trace");
    fit->fallthrough();
    std::string trace_path;
    std::string report;
    std::string mode = "scan";
    bool no_jitter = false;
    bool unweighted = false;
    int max_iterations = 0;
    fit->add_option("trace", trace_path, "trace file")->required();
    fit->add_option("--report", report, "report format")->check(CLI::IsMember({"text", "csv", "json"}));
    fit->add_option("--mode", mode, "scan model or extrema")->check(CLI::IsMember({"scan", "extrema"}));
    fit->add_flag("--no-jitter", no_jitter, "hold LO jitter at zero");
    fit->add_flag("--unweighted", unweighted, "skip the weighted pass");
    fit->add_option("--max-iterations", max_iterations);

    auto *sweep = app.add_subcommand("sweep", "pump sweep table");
    sweep->fallthrough();
    std::vector<double> gains;
    std::vector<std::string> powers;
    std::vector<double> xs;
    std::string measured_csv;
    sweep->add_option("--gains", gains, "parametric gains")->delimiter(',');
    sweep->add_option("--powers", powers, "pump powers with unit, e.g. 61mW")->delimiter(',');
    sweep->add_option("--x", xs, "pump parameters")->delimiter(',');
    sweep->add_option("--measured", measured_csv, "CSV pump_mw,s_min_db,s_max_db");

    auto *reconcile = app.add_subcommand("reconcile", "explain a measured/predicted mismatch");
    reconcile->fallthrough();
    std::string measured;
    double tolerance_db = 0.3;
    reconcile->add_option("--measured", measured, "smin_db,smax_db")->required();
    reconcile->add_option("--tolerance", tolerance_db, "loss-only tolerance in dB");

    try
    {
        app.parse(normalize_args(argc, argv));
    }
    catch (const CLI::ParseError &e)
    {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try
    {
        if (*predict)
        {
            return run_predict(g, circuit_noise);
        }
        if (*synth)
        {
            return run_synth(g, out_path, shot_reference);
        }
        if (*fit)
        {
            if (!report.empty())
            {
                g.format = report;
            }
            return run_fit(g, trace_path, mode, no_jitter, unweighted, max_iterations);
        }
        if (*sweep)
        {
            return run_sweep(g, gains, powers, xs, measured_csv);
        }
        if (*reconcile)
        {
            return run_reconcile(g, measured, tolerance_db);
        }
    }
    catch (const CliError &e)
    {
        std::cerr << "sqz: " << e.message << '\n';
        return kExitUsage;
    }
    return kExitUsage;
}
