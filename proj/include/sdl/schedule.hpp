#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace sdl {

enum class Side { left, right };

/// Periodic control of the two crossbars. The left crossbar is in bar state from t = 0 for
/// duty * period; the right crossbar repeats the left trace `delta` later.
struct ControlSchedule {
    double period = 0.0;           // quantized: period_samples / sample_rate
    double requested_period = 0.0; // as asked for
    double delta = 0.0;            // side-to-side offset, period / 4 by default
    double duty = 0.5;
    double t_transition = 0.0;
    double left_phase = 0.0;
    double sample_rate = 0.0;

    std::size_t period_samples = 0;
    std::size_t offset_samples = 0;
    std::size_t bar_samples = 0;

    /// Both crossbars held in bar state (no switching). The period only sets window lengths.
    bool frozen = false;

    double switching_frequency() const noexcept { return 1.0 / period; }
};

struct ControlTrace {
    Side side = Side::left;
    std::vector<double> values; // bar fraction per sample, from sample 0
};

/// Nearest period whose sample count is a positive multiple of four.
double nearest_valid_period(double period, double sample_rate);

/// Canonical schedule. `offset_fraction` is delta / period (0.25 in the circulator;
/// 0 makes both sides switch together).
ControlSchedule build_schedule(double period, double t_transition, double duty, double sample_rate,
                               double offset_fraction = 0.25);

/// Schedule with both crossbars permanently in bar state.
ControlSchedule frozen_schedule(double nominal_period, double sample_rate);

/// Bar fraction of one side at absolute sample n (any integer, periodic).
double bar_fraction(const ControlSchedule& schedule, Side side, std::int64_t n);

ControlTrace trace_for(const ControlSchedule& schedule, Side side, std::size_t n_samples);

struct ScheduleReport {
    double mismatch = 0.0;          // delta - (tau + path latency), seconds
    double mismatch_fraction = 0.0; // relative to tau
    double period_residue = 0.0;    // requested - achieved period, in samples
    double delta_residue = 0.0;     // delta * fs - offset_samples
    double transition_residue = 0.0;
    bool isolation_degradation = false; // |mismatch| > t_transition
    std::vector<std::string> notes;
};

/// Advisory comparison of the switching offset against the line delay.
ScheduleReport validate_schedule(const ControlSchedule& schedule, double line_tau,
                                 double path_latency = 0.0);

/// Four per-switch control signals (c1 = left bar, c2 = 1 - c1, c3 = right bar, c4 = 1 - c3)
/// as CSV with columns time_s,c1,c2,c3,c4.
std::string schedule_csv(const ControlSchedule& schedule, std::size_t n_samples,
                         const std::string& header_comment = {});

} // namespace sdl
