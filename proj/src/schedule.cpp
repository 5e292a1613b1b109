#include "sdl/schedule.hpp"

#include "sdl/errors.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace sdl {

double nearest_valid_period(double period, double sample_rate)
{
    const double quarters = std::max(1.0, std::round(period * sample_rate / 4.0));
    return 4.0 * quarters / sample_rate;
}

ControlSchedule build_schedule(double period, double t_transition, double duty, double sample_rate,
                               double offset_fraction)
{
    if (!(sample_rate > 0.0))
        throw RangeError("schedule: sample_rate must be positive");
    if (!(period > 0.0))
        throw RangeError("schedule: period must be positive");
    if (!(duty > 0.0 && duty < 1.0))
        throw RangeError("schedule: duty must lie in (0, 1)");
    if (!(t_transition >= 0.0))
        throw RangeError("schedule: t_transition must be >= 0");
    if (!(offset_fraction >= 0.0 && offset_fraction < 1.0))
        throw RangeError("schedule: offset fraction must lie in [0, 1)");

    const double samples = period * sample_rate;
    const double quarters = std::round(samples / 4.0);
    if (quarters < 1.0 || std::abs(samples - 4.0 * quarters) > 0.25) {
        const double nearest = nearest_valid_period(period, sample_rate);
        throw QuantizationError("schedule: period is " + std::to_string(samples)
                                    + " samples, not within 0.25 sample of a multiple of 4; nearest "
                                    + std::to_string(nearest) + " s",
                                nearest);
    }

    ControlSchedule s;
    s.sample_rate = sample_rate;
    s.period_samples = static_cast<std::size_t>(4.0 * quarters);
    s.period = static_cast<double>(s.period_samples) / sample_rate;
    s.requested_period = period;
    s.duty = duty;
    s.t_transition = t_transition;
    s.bar_samples = static_cast<std::size_t>(std::llround(duty * static_cast<double>(s.period_samples)));
    s.offset_samples =
        static_cast<std::size_t>(std::llround(offset_fraction * static_cast<double>(s.period_samples)));
    s.delta = static_cast<double>(s.offset_samples) / sample_rate;

    const double tr = t_transition * sample_rate;
    if (!(tr < static_cast<double>(s.bar_samples))
        || !(tr < static_cast<double>(s.period_samples - s.bar_samples)))
        throw RangeError("schedule: t_transition must be shorter than both switch states");
    return s;
}

ControlSchedule frozen_schedule(double nominal_period, double sample_rate)
{
    ControlSchedule s = build_schedule(nearest_valid_period(nominal_period, sample_rate), 0.0, 0.5,
                                       sample_rate, 0.25);
    s.frozen = true;
    return s;
}

double bar_fraction(const ControlSchedule& s, Side side, std::int64_t n)
{
    if (s.frozen)
        return 1.0;
    const auto p = static_cast<std::int64_t>(s.period_samples);
    if (side == Side::right)
        n -= static_cast<std::int64_t>(s.offset_samples);
    std::int64_t m = n % p;
    if (m < 0)
        m += p;

    const auto b = static_cast<double>(s.bar_samples);
    const auto x = static_cast<double>(m);
    const double ramp = s.t_transition * s.sample_rate;
    if (ramp <= 0.0)
        return m < static_cast<std::int64_t>(s.bar_samples) ? 1.0 : 0.0;

    // Linear bar fraction over the ramp; the sin^2 conduction law turns it into a
    // raised-cosine conduction edge. Ramps end at t = 0 (rise) and at b (fall).
    const auto pd = static_cast<double>(p);
    if (x <= b - ramp)
        return 1.0;
    if (x < b)
        return (b - x) / ramp;
    if (x <= pd - ramp)
        return 0.0;
    return (x - (pd - ramp)) / ramp;
}

ControlTrace trace_for(const ControlSchedule& schedule, Side side, std::size_t n_samples)
{
    ControlTrace t;
    t.side = side;
    t.values.resize(n_samples);
    for (std::size_t n = 0; n < n_samples; ++n)
        t.values[n] = bar_fraction(schedule, side, static_cast<std::int64_t>(n));
    return t;
}

ScheduleReport validate_schedule(const ControlSchedule& s, double line_tau, double path_latency)
{
    ScheduleReport r;
    const double target = line_tau + path_latency;
    r.mismatch = s.delta - target;
    r.mismatch_fraction = line_tau > 0.0 ? r.mismatch / line_tau : 0.0;
    r.period_residue = s.requested_period * s.sample_rate - static_cast<double>(s.period_samples);
    r.delta_residue = s.delta * s.sample_rate - static_cast<double>(s.offset_samples);
    const double tr = s.t_transition * s.sample_rate;
    r.transition_residue = tr - std::round(tr);
    r.isolation_degradation = !s.frozen && std::abs(r.mismatch) > s.t_transition + 1e-15;

    char buf[200];
    if (path_latency != 0.0)
        std::snprintf(buf, sizeof buf, "delta - tau = %+.3f ns (%+.2f%% of tau), %+.3f ns beyond the %.3g ns path latency",
                      (s.delta - line_tau) * 1e9, 100.0 * (s.delta - line_tau) / line_tau, r.mismatch * 1e9,
                      path_latency * 1e9);
    else
        std::snprintf(buf, sizeof buf, "delta - tau = %+.3f ns (%+.2f%% of tau)", r.mismatch * 1e9,
                      100.0 * r.mismatch_fraction);
    r.notes.emplace_back(buf);
    if (r.isolation_degradation)
        r.notes.emplace_back("delay mismatch exceeds the switch transition time; "
                             "expect first-order isolation degradation");
    if (std::abs(r.period_residue) > 1e-9) {
        std::snprintf(buf, sizeof buf, "period quantized by %+.4f samples", r.period_residue);
        r.notes.emplace_back(buf);
    }
    if (std::abs(r.transition_residue) > 1e-9) {
        std::snprintf(buf, sizeof buf, "transition spans a non-integer %.4f samples", tr);
        r.notes.emplace_back(buf);
    }
    return r;
}

std::string schedule_csv(const ControlSchedule& schedule, std::size_t n_samples,
                         const std::string& header_comment)
{
    std::ostringstream os;
    if (!header_comment.empty())
        os << header_comment;
    os << "time_s,c1,c2,c3,c4\n";
    char buf[160];
    for (std::size_t n = 0; n < n_samples; ++n) {
        const auto i = static_cast<std::int64_t>(n);
        const double l = bar_fraction(schedule, Side::left, i);
        const double r = bar_fraction(schedule, Side::right, i);
        std::snprintf(buf, sizeof buf, "%.12g,%.12g,%.12g,%.12g,%.12g\n",
                      static_cast<double>(n) / schedule.sample_rate, l, 1.0 - l, r, 1.0 - r);
        os << buf;
    }
    return os.str();
}

} // namespace sdl
