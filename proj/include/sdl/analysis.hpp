#pragma once

#include "sdl/config.hpp"
#include "sdl/schedule.hpp"

#include <array>
#include <complex>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace sdl {

/// Same-frequency scattering parameters on a frequency grid. Ports are numbered from 1.
struct SParamGrid {
    std::size_t ports = 4;
    std::vector<double> frequencies;           // as measured (after snapping), strictly increasing
    std::vector<double> requested_frequencies; // as asked for
    std::vector<std::vector<std::complex<double>>> s; // per frequency, row-major [out][in]
    double drive_dbm = -10.0;
    std::string schedule_summary;
    std::vector<std::string> warnings;

    std::size_t size() const noexcept { return frequencies.size(); }

    std::complex<double>& at(std::size_t k, std::size_t out, std::size_t in)
    {
        return s[k][(out - 1) * ports + (in - 1)];
    }
    std::complex<double> at(std::size_t k, std::size_t out, std::size_t in) const
    {
        return s[k][(out - 1) * ports + (in - 1)];
    }

    /// Grid of `n_ports` with zeroed matrices at the given frequencies.
    static SParamGrid zeros(std::size_t n_ports, std::vector<double> frequencies);
};

struct SweepOptions {
    std::size_t settle_periods = 10;
    std::size_t measure_periods = 10;
    double drive_dbm = -10.0;
    /// Move every frequency onto the measurement window's bin grid so that all
    /// intermodulation products are orthogonal to the measured line.
    bool snap = true;
    /// Worker threads; 0 reads SDLSIM_THREADS, falling back to the hardware count.
    std::size_t threads = 0;
};

/// Drives each port in turn with a single tone and records the steady-state same-frequency
/// response at all four ports.
SParamGrid sparams_sweep(const CirculatorConfig& config, const std::vector<double>& frequencies,
                         const SweepOptions& options = {});

/// As above with an explicit schedule (overrides the config's).
SParamGrid sparams_sweep(const CirculatorConfig& config, const ControlSchedule& schedule,
                         const std::vector<double>& frequencies, const SweepOptions& options = {});

/// `count` points from `start` to `stop` inclusive.
std::vector<double> linspace(double start, double stop, std::size_t count);

struct GroupDelayPoint {
    double frequency;
    double delay; // seconds
};

struct GroupDelayResult {
    std::vector<GroupDelayPoint> points;
    bool aliasing = false;
    std::vector<std::string> warnings;
};

/// -d(phase)/d(omega) by central differences on the unwrapped phase of path out <- in.
/// `delay_hint` (seconds), when given, also flags grids too coarse for that delay.
GroupDelayResult group_delay(const SParamGrid& grid, std::size_t out_port, std::size_t in_port,
                             std::optional<double> delay_hint = std::nullopt);

/// Forward paths 2<-1, 3<-2, 4<-3, 1<-4 and their reverses, in that order.
inline constexpr std::array<std::pair<int, int>, 4> kForwardPaths{{{2, 1}, {3, 2}, {4, 3}, {1, 4}}};
inline constexpr std::array<std::pair<int, int>, 4> kReversePaths{{{1, 2}, {2, 3}, {3, 4}, {4, 1}}};

struct CirculatorMetrics {
    std::array<double, 4> il_db{};          // per forward path; +inf when the path is dead
    std::array<double, 4> iso_db{};         // per reverse path, worst over the band used
    std::array<double, 4> directivity_db{}; // iso - il per pair
    std::array<double, 4> rl_db{};          // per port, worst over the grid
    double iso_threshold_db = 27.0;
    std::optional<double> il_window_db; // forward flatness bound on the band, when set
    double center_frequency = 0.0;
    double band_start = 0.0;
    double band_stop = 0.0;
    double bandwidth = 0.0;
    double fbw = 0.0;
    double worst_iso_db = 0.0;
    double best_directivity_db = 0.0;
    int best_pair = 0; // index into kForwardPaths
    std::vector<std::string> flags;
};

/// The band qualifies where every reverse isolation exceeds the threshold and every forward
/// path beats its reverse; with `il_window_db` each forward loss must also stay within that
/// many dB of its best value. Isolation is evaluated over the band when there is one.
CirculatorMetrics metrics(const SParamGrid& grid, double iso_threshold_db,
                          std::optional<double> il_window_db = std::nullopt);

struct SpectrumLine {
    int order;        // k in f0 + k * f_mod
    double frequency;
    double power_dbm;
};

struct PortSpectrum {
    int port;
    double main_dbm;
    std::vector<SpectrumLine> lines; // k = -K..K
};

struct SpectrumReport {
    double f0 = 0.0;          // as driven, after snapping
    double requested_f0 = 0.0;
    double f_mod = 0.0;
    double drive_dbm = 0.0;
    std::size_t window_periods = 0;
    std::array<PortSpectrum, 4> ports; // port 1 is the incident wave, 2..4 what leaves
    double reflected_dbm = 0.0;        // main tone leaving port 1
    double il_port2_db = 0.0;
    double iso_port3_db = 0.0;
    double iso_port4_db = 0.0;
};

inline constexpr std::size_t kMinSpectrumPeriods = 16;

/// Single tone into port 1; line levels at f0 + k f_mod for |k| <= sidebands at every port.
SpectrumReport spectrum_probe(const CirculatorConfig& config, double f0, double drive_dbm,
                              std::size_t window_periods, std::size_t sidebands = 5,
                              std::size_t settle_periods = 10);

struct ModPoint {
    double requested_f_mod = 0.0;
    double f_mod = 0.0; // achieved after period quantization; 0 for the static case
    double f0 = 0.0;
    double il_db = 0.0;  // worst forward path
    double iso_db = 0.0; // worst reverse path
    bool ok = false;
    std::string error;
};

/// S-parameters at f0 for each modulation frequency. A zero entry selects static switches.
std::vector<ModPoint> modfreq_sweep(const CirculatorConfig& config, const std::vector<double>& f_mod_values,
                                    double f0, const SweepOptions& options = {});

/// Index of the point with the largest isolation among the successful ones.
std::optional<std::size_t> modfreq_optimum(const std::vector<ModPoint>& points);

struct LineCheck {
    SParamGrid line_a; // 2-port
    SParamGrid line_b;
    GroupDelayResult delay_a;
    GroupDelayResult delay_b;
    std::vector<std::string> notes;
};

/// Delay lines alone (through their matching sections when configured), simulated in
/// isolation; S-parameters and group delay of each.
LineCheck linecheck(const CirculatorConfig& config, const std::vector<double>& frequencies,
                    std::size_t threads = 0);

/// Threads to use for a given job count (SDLSIM_THREADS, else hardware concurrency).
std::size_t worker_count(std::size_t requested, std::size_t jobs);

} // namespace sdl
