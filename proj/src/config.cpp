#include "sqz/config.hpp"

#include "sqz/errors.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <vector>

namespace sqz
{
namespace
{

enum class Dimension
{
    Dimensionless,
    Count,
    Length,
    Power,
    InversePower,
    Frequency,
    Time,
    Angle,
    Decibel,
};

struct KeySpec
{
    const char *key;
    const char *field; // name used in diagnostics
    Dimension dimension;
    bool required;
};

struct SectionSpec
{
    const char *name;
    bool required;
    std::vector<KeySpec> keys;
};

const std::vector<SectionSpec> &sections()
{
    static const std::vector<SectionSpec> specs = {
        {"cavity",
         true,
         {{"l", "round_trip_length", Dimension::Length, true},
          {"T", "coupler_transmittance", Dimension::Dimensionless, true},
          {"L", "intracavity_loss", Dimension::Dimensionless, true},
          {"Enl", "nonlinear_efficiency", Dimension::InversePower, true}}},
        {"detection",
         true,
         {{"eta", "quantum_efficiency", Dimension::Dimensionless, true},
          {"xi", "visibility", Dimension::Dimensionless, true},
          {"propagation", "propagation_efficiency", Dimension::Dimensionless, false},
          {"clearance", "circuit_noise_clearance_db", Dimension::Decibel, true}}},
        {"pump",
         true,
         {{"power", "pump_power", Dimension::Power, false},
          {"gain", "parametric_gain", Dimension::Dimensionless, false},
          {"x", "pump_parameter", Dimension::Dimensionless, false}}},
        {"acquisition",
         true,
         {{"f", "center_frequency", Dimension::Frequency, true},
          {"rbw", "resolution_bandwidth", Dimension::Frequency, true},
          {"vbw", "video_bandwidth", Dimension::Frequency, true},
          {"sweep", "sweep_duration", Dimension::Time, true},
          {"samples", "sample_count", Dimension::Count, true}}},
        {"scan",
         false,
         {{"period", "scan_period", Dimension::Time, true},
          {"theta0", "scan_theta0", Dimension::Angle, false},
          {"jitter", "jitter_sigma", Dimension::Angle, false}}},
    };
    return specs;
}

const std::map<std::string_view, double> &units(Dimension d)
{
    static const std::map<std::string_view, double> none = {{"", 1.0}};
    static const std::map<std::string_view, double> length = {{"m", 1.0}, {"cm", 1e-2}, {"mm", 1e-3}, {"um", 1e-6}};
    static const std::map<std::string_view, double> power = {{"W", 1.0}, {"mW", 1e-3}, {"uW", 1e-6}};
    static const std::map<std::string_view, double> inverse_power = {{"/W", 1.0}, {"/mW", 1e3}};
    static const std::map<std::string_view, double> frequency = {
        {"Hz", 1.0}, {"kHz", 1e3}, {"MHz", 1e6}, {"GHz", 1e9}};
    static const std::map<std::string_view, double> time = {{"s", 1.0}, {"ms", 1e-3}, {"us", 1e-6}};
    static const std::map<std::string_view, double> angle = {{"rad", 1.0}, {"mrad", 1e-3}, {"deg", kPi / 180.0}};
    static const std::map<std::string_view, double> decibel = {{"dB", 1.0}};
    switch (d)
    {
    case Dimension::Dimensionless:
    case Dimension::Count: return none;
    case Dimension::Length: return length;
    case Dimension::Power: return power;
    case Dimension::InversePower: return inverse_power;
    case Dimension::Frequency: return frequency;
    case Dimension::Time: return time;
    case Dimension::Angle: return angle;
    case Dimension::Decibel: return decibel;
    }
    return none;
}

std::string unit_list(Dimension d)
{
    if (d == Dimension::Dimensionless || d == Dimension::Count)
    {
        return "no unit suffix";
    }
    std::string out;
    for (const auto &[suffix, factor] : units(d))
    {
        out += (out.empty() ? "" : ", ") + std::string(suffix);
    }
    return "one of " + out;
}

struct Entry
{
    double value = 0.0;
    std::size_t line = 0;
};

struct Block
{
    std::size_t line = 0;
    std::map<std::string, Entry> entries;
};

std::string_view trim(std::string_view s)
{
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos)
    {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

double parse_value(std::string_view token, const KeySpec &spec, std::size_t line)
{
    double number = 0.0;
    const char *begin = token.data();
    const char *end = token.data() + token.size();
    if (begin != end && *begin == '+')
    {
        ++begin;
    }
    const auto [ptr, ec] = std::from_chars(begin, end, number);
    if (ec != std::errc() || ptr == begin)
    {
        throw ParseError(line, spec.key, "value for '" + std::string(spec.key) + "' is not a number: '" +
                                             std::string(token) + "'");
    }
    const std::string_view suffix(ptr, static_cast<std::size_t>(end - ptr));
    const auto &table = units(spec.dimension);
    const auto unit = table.find(suffix);
    if (unit == table.end())
    {
        throw ParseError(line, spec.key, "bad unit suffix '" + std::string(suffix) + "' for '" +
                                             std::string(spec.key) + "' (expected " + unit_list(spec.dimension) +
                                             ")");
    }
    if (!std::isfinite(number))
    {
        throw ParseError(line, spec.key, "value for '" + std::string(spec.key) + "' is not finite");
    }
    if (spec.dimension == Dimension::Count && (number != std::floor(number) || number < 0.0 || number > 1e9))
    {
        throw ParseError(line, spec.key, "'" + std::string(spec.key) + "' must be a non-negative integer");
    }
    return number * unit->second;
}

class Validator
{
public:
    Validator(const std::map<std::string, Block> &blocks) : blocks_(blocks) {}

    double get(const char *section, const char *key) const
    {
        return blocks_.at(section).entries.at(key).value;
    }
    std::optional<double> find(const char *section, const char *key) const
    {
        const auto b = blocks_.find(section);
        if (b == blocks_.end())
        {
            return std::nullopt;
        }
        const auto e = b->second.entries.find(key);
        return e == b->second.entries.end() ? std::nullopt : std::optional<double>(e->second.value);
    }

    void check(bool ok, const char *section, const char *key, const char *field, const std::string &constraint) const
    {
        if (ok)
        {
            return;
        }
        const Block &block = blocks_.at(section);
        const auto e = block.entries.find(key);
        const std::size_t line = e == block.entries.end() ? block.line : e->second.line;
        throw ParseError(line, key, std::string(field) + " out of range: requires " + constraint);
    }

private:
    const std::map<std::string, Block> &blocks_;
};

std::string format(double v)
{
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

} // namespace

ExperimentConfig parse_config(std::string_view text)
{
    std::map<std::string, Block> blocks;
    const SectionSpec *current = nullptr;
    Block *block = nullptr;

    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size())
    {
        const std::size_t nl = text.find('\n', pos);
        std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++line_no;

        const auto comment = line.find_first_of("#;");
        if (comment != std::string_view::npos)
        {
            line = line.substr(0, comment);
        }
        line = trim(line);
        if (line.empty())
        {
            continue;
        }

        if (line.front() == '[')
        {
            const auto close = line.find(']');
            if (close == std::string_view::npos)
            {
                throw ParseError(line_no, "", "unterminated section header");
            }
            const std::string name(trim(line.substr(1, close - 1)));
            current = nullptr;
            for (const auto &spec : sections())
            {
                if (name == spec.name)
                {
                    current = &spec;
                }
            }
            if (!current)
            {
                throw ParseError(line_no, name, "unknown section [" + name + "]");
            }
            if (blocks.count(name))
            {
                throw ParseError(line_no, name, "duplicate section [" + name + "]");
            }
            block = &blocks[name];
            block->line = line_no;
            line = trim(line.substr(close + 1));
        }

        while (!line.empty())
        {
            const auto space = line.find_first_of(" \t");
            const std::string_view token = line.substr(0, space);
            line = space == std::string_view::npos ? std::string_view{} : trim(line.substr(space));

            const auto eq = token.find('=');
            if (eq == std::string_view::npos || eq == 0)
            {
                throw ParseError(line_no, "", "expected key=value, got '" + std::string(token) + "'");
            }
            const std::string key(token.substr(0, eq));
            if (!current)
            {
                throw ParseError(line_no, key, "key '" + key + "' outside of any section");
            }
            const KeySpec *spec = nullptr;
            for (const auto &k : current->keys)
            {
                if (key == k.key)
                {
                    spec = &k;
                }
            }
            if (!spec)
            {
                throw ParseError(line_no, key, "unknown key '" + key + "' in [" + current->name + "]");
            }
            if (block->entries.count(key))
            {
                throw ParseError(line_no, key, "duplicate key '" + key + "' in [" + current->name + "]");
            }
            block->entries[key] = {parse_value(token.substr(eq + 1), *spec, line_no), line_no};
        }
    }

    for (const auto &spec : sections())
    {
        const auto b = blocks.find(spec.name);
        if (b == blocks.end())
        {
            if (spec.required)
            {
                throw ParseError(0, spec.name, std::string("missing ") + spec.name + " block");
            }
            continue;
        }
        for (const auto &k : spec.keys)
        {
            if (k.required && !b->second.entries.count(k.key))
            {
                throw ParseError(b->second.line, k.key,
                                 std::string("missing key '") + k.key + "' in [" + spec.name + "] block");
            }
        }
    }

    const Validator v(blocks);
    ExperimentConfig config;

    config.cavity.round_trip_length = v.get("cavity", "l");
    config.cavity.coupler_transmittance = v.get("cavity", "T");
    config.cavity.intracavity_loss = v.get("cavity", "L");
    config.cavity.nonlinear_efficiency = v.get("cavity", "Enl");
    const auto &c = config.cavity;
    v.check(c.round_trip_length > 0.0, "cavity", "l", "round_trip_length", "l > 0");
    v.check(c.coupler_transmittance > 0.0 && c.coupler_transmittance < 1.0, "cavity", "T", "coupler_transmittance",
            "0 < T < 1");
    v.check(c.intracavity_loss >= 0.0 && c.intracavity_loss < 1.0, "cavity", "L", "intracavity_loss", "0 <= L < 1");
    v.check(c.coupler_transmittance + c.intracavity_loss < 1.0, "cavity", "L", "intracavity_loss", "T + L < 1");
    v.check(c.nonlinear_efficiency > 0.0, "cavity", "Enl", "nonlinear_efficiency", "Enl > 0");

    config.detection.quantum_efficiency = v.get("detection", "eta");
    config.detection.visibility = v.get("detection", "xi");
    config.detection.propagation_efficiency = v.find("detection", "propagation").value_or(1.0);
    config.detection.circuit_noise_clearance_db = v.get("detection", "clearance");
    const auto &d = config.detection;
    const auto unit = [](double x) { return x > 0.0 && x <= 1.0; };
    v.check(unit(d.quantum_efficiency), "detection", "eta", "quantum_efficiency", "0 < eta <= 1");
    v.check(unit(d.visibility), "detection", "xi", "visibility", "0 < xi <= 1");
    v.check(unit(d.propagation_efficiency), "detection", "propagation", "propagation_efficiency",
            "0 < propagation <= 1");
    v.check(d.circuit_noise_clearance_db > 0.0, "detection", "clearance", "circuit_noise_clearance_db",
            "clearance > 0 dB");

    const auto power = v.find("pump", "power");
    const auto gain = v.find("pump", "gain");
    const auto x = v.find("pump", "x");
    const int given = (power ? 1 : 0) + (gain ? 1 : 0) + (x ? 1 : 0);
    v.check(given == 1, "pump", "pump", "pump", "exactly one of power, gain, x");
    if (power)
    {
        v.check(*power >= 0.0, "pump", "power", "pump_power", "power >= 0");
        const double threshold = threshold_power(config.cavity);
        v.check(*power < threshold, "pump", "power", "pump_power",
                "power below the oscillation threshold " + format(threshold * 1e3) + " mW");
        config.pump = PumpPower{*power};
    }
    else if (gain)
    {
        v.check(*gain >= 1.0, "pump", "gain", "parametric_gain", "gain >= 1");
        config.pump = ParametricGain{*gain};
    }
    else
    {
        v.check(*x >= 0.0 && *x < 1.0, "pump", "x", "pump_parameter", "0 <= x < 1");
        config.pump = PumpParameter{*x};
    }

    auto &a = config.acquisition;
    a.center_frequency = v.get("acquisition", "f");
    a.resolution_bandwidth = v.get("acquisition", "rbw");
    a.video_bandwidth = v.get("acquisition", "vbw");
    a.sweep_duration = v.get("acquisition", "sweep");
    a.sample_count = static_cast<std::size_t>(v.get("acquisition", "samples"));
    v.check(a.center_frequency > 0.0, "acquisition", "f", "center_frequency", "f > 0");
    v.check(a.resolution_bandwidth > 0.0, "acquisition", "rbw", "resolution_bandwidth", "rbw > 0");
    v.check(a.video_bandwidth > 0.0, "acquisition", "vbw", "video_bandwidth", "vbw > 0");
    v.check(a.video_bandwidth <= a.resolution_bandwidth, "acquisition", "vbw", "video_bandwidth", "vbw <= rbw");
    v.check(a.sweep_duration > 0.0, "acquisition", "sweep", "sweep_duration", "sweep > 0");
    v.check(a.sample_count >= 2, "acquisition", "samples", "sample_count", "samples >= 2");

    if (blocks.count("scan"))
    {
        a.lo_scan.period = v.get("scan", "period");
        a.lo_scan.theta0 = v.find("scan", "theta0").value_or(0.0);
        a.lo_scan.jitter_sigma = v.find("scan", "jitter").value_or(0.0);
        v.check(a.lo_scan.period > 0.0, "scan", "period", "scan_period", "period > 0");
        v.check(a.lo_scan.jitter_sigma >= 0.0, "scan", "jitter", "jitter_sigma", "jitter >= 0");
    }
    else
    {
        a.lo_scan.period = a.sweep_duration / 4.0;
        a.lo_scan.theta0 = 0.0;
        a.lo_scan.jitter_sigma = 0.0;
    }
    return config;
}

ExperimentConfig load_config(const std::filesystem::path &path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
    {
        throw ParseError(0, "", "cannot open config file '" + path.string() + "'");
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_config(buffer.str());
}

std::string serialize_config(const ExperimentConfig &config)
{
    std::ostringstream out;
    const auto &c = config.cavity;
    out << "[cavity]\n"
        << "l=" << format(c.round_trip_length) << "m\n"
        << "T=" << format(c.coupler_transmittance) << "\n"
        << "L=" << format(c.intracavity_loss) << "\n"
        << "Enl=" << format(c.nonlinear_efficiency) << "/W\n\n";
    const auto &d = config.detection;
    out << "[detection]\n"
        << "eta=" << format(d.quantum_efficiency) << "\n"
        << "xi=" << format(d.visibility) << "\n"
        << "propagation=" << format(d.propagation_efficiency) << "\n"
        << "clearance=" << format(d.circuit_noise_clearance_db) << "dB\n\n";
    out << "[pump]\n";
    if (const auto *p = std::get_if<PumpPower>(&config.pump))
    {
        out << "power=" << format(p->watts) << "W\n\n";
    }
    else if (const auto *g = std::get_if<ParametricGain>(&config.pump))
    {
        out << "gain=" << format(g->value) << "\n\n";
    }
    else
    {
        out << "x=" << format(std::get<PumpParameter>(config.pump).value) << "\n\n";
    }
    const auto &a = config.acquisition;
    out << "[acquisition]\n"
        << "f=" << format(a.center_frequency) << "Hz\n"
        << "rbw=" << format(a.resolution_bandwidth) << "Hz\n"
        << "vbw=" << format(a.video_bandwidth) << "Hz\n"
        << "sweep=" << format(a.sweep_duration) << "s\n"
        << "samples=" << a.sample_count << "\n\n";
    out << "[scan]\n"
        << "period=" << format(a.lo_scan.period) << "s\n"
        << "theta0=" << format(a.lo_scan.theta0) << "rad\n"
        << "jitter=" << format(a.lo_scan.jitter_sigma) << "rad\n";
    return out.str();
}

} // namespace sqz
