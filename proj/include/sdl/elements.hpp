#pragma once

#include "sdl/filters.hpp"
#include "sdl/touchstone.hpp"

#include <complex>
#include <cstddef>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace sdl {

/// Per-sample scattering element. `step` consumes one incident wave sample per port and
/// returns, through `emitted`, one outgoing sample per port for the same instant.
/// Elements are causal, linear in the incident waves, and own their memory.
class ScatteringElement {
public:
    virtual ~ScatteringElement() = default;

    virtual std::size_t port_count() const noexcept = 0;
    virtual std::string_view kind() const noexcept = 0;

    /// `control` is only meaningful for switching elements; others ignore it.
    virtual void step(std::span<const double> incident, double control, std::span<double> emitted) = 0;

    /// Clears all internal memory.
    virtual void reset() = 0;

    /// Non-fatal diagnostics gathered at construction.
    const std::vector<std::string>& warnings() const noexcept { return warnings_; }

protected:
    std::vector<std::string> warnings_;
};

inline constexpr double kInfiniteDb = std::numeric_limits<double>::infinity();

/// Amplitude gain for a loss in dB; +inf dB maps to exactly zero.
double db_loss_to_gain(double loss_db) noexcept;

struct Echo {
    /// Odd multiples exit the far port; even multiples return through the launch port.
    int transit_multiple = 3;
    double level_db = -30.0; // relative to the main transit
};

struct DelayLineSpec {
    double tau = 280e-9;
    double il_db = 4.0;
    double f_center = 155e6;
    double bandwidth = 30e6;
    int band_order = 2; // 0 selects a flat band
    std::vector<Echo> echoes;
    double port_return_db = 15.0; // +inf: reflectionless ports
};

struct SwitchSpec {
    double il_on_db = 0.8;
    double iso_off_db = 30.0;
    double t_transition = 2e-9;
    double gamma_off = 0.9;
};

enum class MatchOrientation { l_toward_line, l_toward_port };

/// Series-L / shunt-C section. Port 1 faces the switch ("port"), port 2 the delay line.
struct MatchSpec {
    double series_l = 0.0;
    double shunt_c = 0.0;
    MatchOrientation orientation = MatchOrientation::l_toward_line;
    double z0 = 50.0;
};

// -----------------------------------------------------------------------------

class DelayLine final : public ScatteringElement {
public:
    DelayLine(const DelayLineSpec& spec, double sample_rate);

    std::size_t port_count() const noexcept override { return 2; }
    std::string_view kind() const noexcept override { return "delay_line"; }
    void step(std::span<const double> incident, double control, std::span<double> emitted) override;
    void reset() override;

    const DelayLineSpec& spec() const noexcept { return spec_; }

    /// Integer part of the transit, in samples. The band filter supplies the rest of tau.
    std::size_t delay_samples() const noexcept { return delay_; }
    double band_group_delay() const noexcept { return band_delay_; }

    /// |D / fs + band group delay - tau|, seconds.
    double quantization_error() const noexcept { return quantization_error_; }

    /// Analytic 2x2 response at f (for diagnostics and tests).
    SMatrix2 response(double f) const;

private:
    struct Tap {
        std::size_t delay;
        double gain;
    };

    DelayLineSpec spec_;
    double sample_rate_;
    std::size_t delay_ = 0;
    double band_delay_ = 0.0;
    double quantization_error_ = 0.0;

    std::vector<Tap> through_taps_; // applied to the opposite port's history
    std::vector<Tap> return_taps_;  // applied to the same port's history (includes the instant reflection)

    std::size_t history_len_ = 1;
    std::vector<double> history_[2];
    std::size_t head_ = 0;

    BiquadCascade band_[2]; // one per output port
};

/// One side's switching module: a 2x2 crossbar between two external ports and two line ends.
/// Port order: PortTop, PortBot, LineA, LineB. `control` is the bar fraction g in [0, 1].
class Crossbar final : public ScatteringElement {
public:
    enum Port : std::size_t { port_top = 0, port_bot = 1, line_a = 2, line_b = 3 };

    explicit Crossbar(const SwitchSpec& spec);

    std::size_t port_count() const noexcept override { return 4; }
    std::string_view kind() const noexcept override { return "crossbar"; }
    void step(std::span<const double> incident, double control, std::span<double> emitted) override;
    void reset() override {}

    struct Gains {
        double bar;     // PortTop<->LineA, PortBot<->LineB
        double cross;   // PortTop<->LineB, PortBot<->LineA
        double reflect; // seen by a wave arriving at a line port
    };

    /// Instantaneous gains at bar fraction g.
    Gains gains(double g) const;

    const SwitchSpec& spec() const noexcept { return spec_; }

private:
    SwitchSpec spec_;
    double s_on_;
    double leak_;
    double last_g_ = -1.0;
    Gains cached_{};
};

/// Lossless LC two-port realized with bilinear-mapped sections pre-warped at f_warp.
class MatchingNetwork final : public ScatteringElement {
public:
    MatchingNetwork(const MatchSpec& spec, double sample_rate, double f_warp);

    std::size_t port_count() const noexcept override { return 2; }
    std::string_view kind() const noexcept override { return "matching"; }
    void step(std::span<const double> incident, double control, std::span<double> emitted) override;
    void reset() override;

    /// Digital response at f.
    SMatrix2 response(double f) const;

    const MatchSpec& spec() const noexcept { return spec_; }

private:
    MatchSpec spec_;
    double sample_rate_;
    Biquad s_[2][2]; // [out][in]
};

struct TouchstoneImportOptions {
    double sample_rate = 4e9;
    std::size_t ir_len = 4096;
    double band_center = 155e6;
    double band_width = 30e6;
};

/// FIR two-port synthesized from tabulated S-parameters by frequency sampling.
class FirTwoPort final : public ScatteringElement {
public:
    FirTwoPort(const TouchstoneData& data, const TouchstoneImportOptions& options);

    std::size_t port_count() const noexcept override { return 2; }
    std::string_view kind() const noexcept override { return "touchstone_fir"; }
    void step(std::span<const double> incident, double control, std::span<double> emitted) override;
    void reset() override;

    /// Fraction of impulse-response energy discarded by truncation to ir_len.
    double truncation_energy_loss() const noexcept { return energy_loss_; }

    /// Impulse response of path [out][in], ir_len taps.
    const std::vector<double>& impulse_response(std::size_t out, std::size_t in) const
    {
        return ir_[out][in];
    }

    SMatrix2 response(double f) const;

private:
    double sample_rate_;
    std::vector<double> ir_[2][2];
    std::size_t first_tap_ = 0; // leading taps below numerical significance are skipped
    std::size_t last_tap_ = 0;
    double energy_loss_ = 0.0;
    std::vector<double> history_[2];
    std::size_t head_ = 0;
};

std::unique_ptr<DelayLine> delay_line_element(const DelayLineSpec& spec, double sample_rate);
std::unique_ptr<Crossbar> crossbar_element(const SwitchSpec& spec);
std::unique_ptr<MatchingNetwork> matching_element(const MatchSpec& spec, double sample_rate,
                                                  double f_warp);
std::unique_ptr<FirTwoPort> element_from_touchstone(const TouchstoneData& data,
                                                    const TouchstoneImportOptions& options);

/// L-section that presents z0 at f0 when loaded by z_load.
MatchSpec synth_lmatch(std::complex<double> z_load, double z0, double f0);

/// Closed-form S-parameters of the analog LC section at f.
SMatrix2 match_analog_response(const MatchSpec& spec, double f);

} // namespace sdl
