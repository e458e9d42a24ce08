#include "sqz/trace_io.hpp"

#include "sqz/errors.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>
#include <vector>

namespace sqz
{
namespace
{

constexpr std::string_view kMagic = "sqz-trace 1";
constexpr std::string_view kColumns = "time_s,power_db";

std::string shortest(double v, std::chars_format fmt)
{
    char buf[512];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v, fmt);
    if (ec != std::errc())
    {
        throw ArgumentError("trace value cannot be formatted");
    }
    return std::string(buf, ptr);
}

std::string number(double v) { return shortest(v, std::chars_format::general); }

std::optional<double> read_double(std::string_view s)
{
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v))
    {
        return std::nullopt;
    }
    return v;
}

std::string_view strip_cr(std::string_view s)
{
    if (!s.empty() && s.back() == '\r')
    {
        s.remove_suffix(1);
    }
    return s;
}

bool is_reserved(const std::string &key)
{
    for (const char *k : {"center_frequency_hz", "resolution_bandwidth_hz", "video_bandwidth_hz", "sweep_duration_s",
                          "sample_count", "scan_period_s", "scan_theta0_rad", "scan_jitter_rad", "shot_reference_db"})
    {
        if (key == k)
        {
            return true;
        }
    }
    return false;
}

struct HeaderKey
{
    const char *name;
    double AcquisitionSettings::*field;
};

} // namespace

std::string serialize_trace(const NoiseTrace &trace)
{
    trace.validate();
    const auto &a = trace.acquisition;
    std::string out;
    out += "# " + std::string(kMagic) + "\n";
    out += "# center_frequency_hz=" + number(a.center_frequency) + "\n";
    out += "# resolution_bandwidth_hz=" + number(a.resolution_bandwidth) + "\n";
    out += "# video_bandwidth_hz=" + number(a.video_bandwidth) + "\n";
    out += "# sweep_duration_s=" + number(a.sweep_duration) + "\n";
    out += "# sample_count=" + std::to_string(a.sample_count) + "\n";
    out += "# scan_period_s=" + number(a.lo_scan.period) + "\n";
    out += "# scan_theta0_rad=" + number(a.lo_scan.theta0) + "\n";
    out += "# scan_jitter_rad=" + number(a.lo_scan.jitter_sigma) + "\n";
    out += "# shot_reference_db=" + number(trace.shot_reference_db) + "\n";
    for (const auto &[key, value] : trace.annotations)
    {
        if (key.empty() || key.find_first_of("=\n\r") != std::string::npos ||
            value.find_first_of("\n\r") != std::string::npos || is_reserved(key))
        {
            throw ArgumentError("trace annotation '" + key + "' cannot be serialized");
        }
        out += "# " + key + "=" + value + "\n";
    }
    out += std::string(kColumns) + "\n";
    for (const auto &s : trace.samples)
    {
        out += shortest(s.time, std::chars_format::fixed);
        out += ',';
        out += shortest(s.power_db, std::chars_format::fixed);
        out += '\n';
    }
    return out;
}

NoiseTrace parse_trace(std::string_view text)
{
    NoiseTrace trace;
    auto &a = trace.acquisition;
    const HeaderKey doubles[] = {
        {"center_frequency_hz", &AcquisitionSettings::center_frequency},
        {"resolution_bandwidth_hz", &AcquisitionSettings::resolution_bandwidth},
        {"video_bandwidth_hz", &AcquisitionSettings::video_bandwidth},
        {"sweep_duration_s", &AcquisitionSettings::sweep_duration},
    };
    std::vector<std::string> seen;
    bool magic = false;
    bool columns = false;
    std::size_t line_no = 0;
    std::size_t sample_count_line = 0;
    std::size_t pos = 0;

    while (pos < text.size())
    {
        const std::size_t nl = text.find('\n', pos);
        const std::string_view line =
            strip_cr(text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos));
        pos = nl == std::string_view::npos ? text.size() : nl + 1;
        ++line_no;

        if (!columns)
        {
            if (line.empty())
            {
                continue;
            }
            if (line.front() != '#')
            {
                if (line != kColumns)
                {
                    throw ParseError(line_no, "", "expected column header '" + std::string(kColumns) + "'");
                }
                if (!magic)
                {
                    throw ParseError(line_no, "", "missing '# " + std::string(kMagic) + "' header");
                }
                columns = true;
                continue;
            }
            std::string_view body = line.substr(1);
            if (!body.empty() && body.front() == ' ')
            {
                body.remove_prefix(1);
            }
            if (!magic)
            {
                if (body != kMagic)
                {
                    throw ParseError(line_no, "", "not a trace file: first header must be '# " + std::string(kMagic) + "'");
                }
                magic = true;
                continue;
            }
            const auto eq = body.find('=');
            if (eq == std::string_view::npos || eq == 0)
            {
                throw ParseError(line_no, "", "header line is not key=value");
            }
            const std::string key(body.substr(0, eq));
            const std::string_view value = body.substr(eq + 1);
            for (const auto &k : seen)
            {
                if (k == key)
                {
                    throw ParseError(line_no, key, "duplicate header key '" + key + "'");
                }
            }
            seen.push_back(key);

            bool known = false;
            const auto numeric = [&]() {
                const auto v = read_double(value);
                if (!v)
                {
                    throw ParseError(line_no, key, "header '" + key + "' is not a finite number");
                }
                known = true;
                return *v;
            };
            for (const auto &k : doubles)
            {
                if (key == k.name)
                {
                    a.*(k.field) = numeric();
                }
            }
            if (key == "sample_count")
            {
                const double v = numeric();
                if (v < 2.0 || v != std::floor(v) || v > 1e9)
                {
                    throw ParseError(line_no, key, "sample_count must be an integer >= 2");
                }
                a.sample_count = static_cast<std::size_t>(v);
                sample_count_line = line_no;
            }
            else if (key == "scan_period_s")
            {
                a.lo_scan.period = numeric();
            }
            else if (key == "scan_theta0_rad")
            {
                a.lo_scan.theta0 = numeric();
            }
            else if (key == "scan_jitter_rad")
            {
                a.lo_scan.jitter_sigma = numeric();
            }
            else if (key == "shot_reference_db")
            {
                trace.shot_reference_db = numeric();
            }
            if (!known)
            {
                trace.annotations.emplace_back(key, std::string(value));
            }
            continue;
        }

        if (line.empty())
        {
            continue;
        }
        const auto comma = line.find(',');
        const auto t = comma == std::string_view::npos ? std::nullopt : read_double(line.substr(0, comma));
        const auto p = comma == std::string_view::npos ? std::nullopt : read_double(line.substr(comma + 1));
        if (!t || !p)
        {
            throw ParseError(line_no, "", "data row must be 'time_s,power_db' with finite numbers");
        }
        if (!trace.samples.empty() && !(*t > trace.samples.back().time))
        {
            throw ParseError(line_no, "time_s", "sample times must be strictly increasing");
        }
        trace.samples.push_back({*t, *p});
    }

    if (!columns)
    {
        throw ParseError(0, "", magic ? "missing column header '" + std::string(kColumns) + "'" : "empty trace file");
    }
    for (const char *required : {"center_frequency_hz", "resolution_bandwidth_hz", "video_bandwidth_hz",
                                 "sweep_duration_s", "sample_count", "scan_period_s"})
    {
        bool found = false;
        for (const auto &k : seen)
        {
            found = found || k == required;
        }
        if (!found)
        {
            throw ParseError(0, required, std::string("missing header key '") + required + "'");
        }
    }
    if (trace.samples.size() != a.sample_count)
    {
        throw ParseError(sample_count_line, "sample_count", "sample_count=" + std::to_string(a.sample_count) + " but " +
                                                std::to_string(trace.samples.size()) + " data rows");
    }
    try
    {
        trace.validate();
    }
    catch (const DomainError &e)
    {
        throw ParseError(0, "", e.what());
    }
    return trace;
}

NoiseTrace load_trace(const std::filesystem::path &path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
    {
        throw ParseError(0, "", "cannot open trace file '" + path.string() + "'");
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_trace(buffer.str());
}

void save_trace(const std::filesystem::path &path, const NoiseTrace &trace)
{
    const std::string text = serialize_trace(trace);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out || !(out << text))
    {
        throw ArgumentError("cannot write trace file '" + path.string() + "'");
    }
}

bool operator==(const NoiseTrace &a, const NoiseTrace &b)
{
    const auto &x = a.acquisition;
    const auto &y = b.acquisition;
    return a.samples == b.samples && a.shot_reference_db == b.shot_reference_db && a.annotations == b.annotations &&
           x.center_frequency == y.center_frequency && x.resolution_bandwidth == y.resolution_bandwidth &&
           x.video_bandwidth == y.video_bandwidth && x.sweep_duration == y.sweep_duration &&
           x.sample_count == y.sample_count && x.lo_scan.period == y.lo_scan.period &&
           x.lo_scan.theta0 == y.lo_scan.theta0 && x.lo_scan.jitter_sigma == y.lo_scan.jitter_sigma;
}

} // namespace sqz
