#pragma once

#include "sdl/elements.hpp"
#include "sdl/touchstone.hpp"

#include <complex>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace sdl {

struct TouchstoneLine {
    std::string path; // as written in the config, relative paths resolved against it
    TouchstoneData data;
    std::size_t ir_len = 4096;
    double band_center = 155e6;
    double band_width = 30e6;
};

using LineModel = std::variant<DelayLineSpec, TouchstoneLine>;

struct ScheduleParams {
    double period = 1.14e-6;
    double duty = 0.5;
    double offset_fraction = 0.25;
    bool frozen = false;
};

struct AnalysisDefaults {
    double f_start = 150e6;
    double f_stop = 160e6;
    std::size_t points = 51;
    std::size_t settle_periods = 10;
    std::size_t measure_periods = 10;
    double drive_dbm = -10.0;
    double iso_threshold_db = 27.0;
    std::size_t sidebands = 5;
    double spectrum_f0 = 155e6;
    std::size_t spectrum_periods = 16;
    double fmod_start = 0.5e6;
    double fmod_stop = 1.5e6;
    std::size_t fmod_points = 41;
};

struct CirculatorConfig {
    double sample_rate = 4e9;
    LineModel line_a = DelayLineSpec{};
    LineModel line_b = DelayLineSpec{};
    SwitchSpec switch_spec;
    ScheduleParams schedule;
    std::optional<MatchSpec> matching;
    /// Load impedance the matching section was synthesized for, when it was.
    std::optional<std::complex<double>> matching_z_load;
    AnalysisDefaults analysis;

    /// Centre frequency used for pre-warping and band checks (line A).
    double band_center() const;
    /// Nominal group delay of line A.
    double line_tau() const;
};

/// Serialized form: JSON with the key schema documented in README.md.
std::string config_to_json(const CirculatorConfig& config);

/// Parses and cross-validates. Touchstone references are resolved relative to `base_dir`.
/// Throws ConfigError listing every violation found.
CirculatorConfig config_from_json(const std::string& text, const std::string& base_dir = ".");

/// Reads a config file; validation warnings are appended to `warnings`.
CirculatorConfig load_config(const std::string& path, std::vector<std::string>* warnings = nullptr);

/// Cross-field checks (Nyquist, schedule quantization, element specs). Empty when valid.
std::vector<std::string> config_violations(const CirculatorConfig& config);

/// Advisory notes (delay mismatch, quantization) for a valid config.
std::vector<std::string> config_warnings(const CirculatorConfig& config);

/// Stable 64-bit FNV-1a digest of the canonical serialization, as 16 hex digits.
std::string config_digest(const CirculatorConfig& config);

/// The shipped configuration reproducing the hardware setup (1.14 us control period,
/// 280 ns / 4 dB lines, 0.8 dB switches with 2 ns transitions).
CirculatorConfig paper_config();

/// Lossless lines and switches, flat band, delta matched to the full path delay.
CirculatorConfig ideal_config();

} // namespace sdl
