#pragma once

#include "sqz/detection.hpp"
#include "sqz/inference.hpp"
#include "sqz/opo_model.hpp"

#include <filesystem>
#include <string>
#include <string_view>

namespace sqz
{

// Parsed experiment description. Values are SI internally; the text format
// requires explicit unit suffixes for every dimensional quantity:
//
//   [cavity]       l=600mm T=0.10 L=0.0173 Enl=0.023/W
//   [detection]    eta=0.99 xi=0.91 clearance=14.0dB   (propagation=1.0 optional)
//   [pump]         gain=5.3 | power=61mW | x=0.57
//   [acquisition]  f=1MHz rbw=100kHz vbw=30Hz sweep=10s samples=300
//   [scan]         period=2.5s theta0=0rad jitter=0rad  (optional block)
//
// '#' and ';' start comments. Several key=value pairs may share a line.
struct ExperimentConfig
{
    CavityParams cavity;
    DetectionChain detection;
    PumpSpec pump = ParametricGain{1.0};
    AcquisitionSettings acquisition;

    Nominal nominal() const { return {cavity, detection, pump, acquisition.center_frequency}; }
};

// Throws ParseError naming line, key, and violated constraint. Never throws anything else
// for malformed text.
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path &path);

// Canonical text in SI units; parse_config(serialize_config(c)) reproduces c exactly.
std::string serialize_config(const ExperimentConfig &config);

} // namespace sqz
