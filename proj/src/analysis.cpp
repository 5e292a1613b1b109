#include "sdl/analysis.hpp"

#include "sdl/engine.hpp"
#include "sdl/errors.hpp"
#include "sdl/signal.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <limits>
#include <mutex>
#include <numbers>
#include <thread>

namespace sdl {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kInf = std::numeric_limits<double>::infinity();

double loss_db(double magnitude) { return -20.0 * std::log10(magnitude); }

// Runs fn(i) for i in [0, jobs) on `threads` workers; rethrows the first failure.
template <class F>
void parallel_for(std::size_t jobs, std::size_t threads, F&& fn)
{
    threads = std::max<std::size_t>(1, std::min(threads, jobs));
    if (threads == 1) {
        for (std::size_t i = 0; i < jobs; ++i)
            fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t)
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= jobs)
                    return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure)
                        failure = std::current_exception();
                    next = jobs;
                }
            }
        });
    for (auto& th : pool)
        th.join();
    if (failure)
        std::rethrow_exception(failure);
}

double snap_to_grid(double f, double fs, std::size_t window)
{
    const double bin = fs / static_cast<double>(window);
    return std::max(1.0, std::round(f / bin)) * bin;
}

struct Column {
    std::array<std::complex<double>, 4> s{};
    std::vector<std::string> drift;
};

// One drive port at one frequency, steady state over the last of two measure windows.
Column measure_column(const CirculatorConfig& config, const ControlSchedule& schedule, double f,
                      int drive_port, std::size_t settle_periods, std::size_t measure_periods,
                      double amplitude)
{
    auto net = build_circulator(config, schedule);
    const std::size_t p = schedule.period_samples;
    const std::size_t w = measure_periods * p;
    const std::size_t s0 = settle_periods * p;
    const std::size_t n = s0 + 2 * w;

    std::array<SampleBuffer, 4> stim;
    for (auto& b : stim)
        b.sample_rate = config.sample_rate;
    stim[static_cast<std::size_t>(drive_port - 1)] = make_tone(f, amplitude, 0.0, n, config.sample_rate);
    const auto rec = run(net, stim, n);

    const auto in = coherent_phasor(rec.incident[static_cast<std::size_t>(drive_port - 1)], f, s0 + w, w);
    Column c;
    for (std::size_t j = 0; j < 4; ++j) {
        const auto early = coherent_phasor(rec.emitted[j], f, s0, w);
        const auto late = coherent_phasor(rec.emitted[j], f, s0 + w, w);
        c.s[j] = late / in;
        // Drift only matters for outputs that are not already far below the drive.
        if (std::abs(late) > 1e-3 * std::abs(in) && std::abs(early) > 0.0) {
            const double d = 20.0 * std::log10(std::abs(late) / std::abs(early));
            if (std::abs(d) > 0.1) {
                char buf[160];
                std::snprintf(buf, sizeof buf,
                              "not settled: |S%zu%d| drifted %+.3f dB between measure windows at %.6g Hz",
                              j + 1, drive_port, d, f);
                c.drift.emplace_back(buf);
            }
        }
    }
    return c;
}

std::string summarize(const ControlSchedule& s)
{
    char buf[200];
    if (s.frozen)
        std::snprintf(buf, sizeof buf, "static (both crossbars in bar state)");
    else
        std::snprintf(buf, sizeof buf, "period %.6g s (%zu samples), delta %.6g s, duty %.3g, transition %.3g s",
                      s.period, s.period_samples, s.delta, s.duty, s.t_transition);
    return buf;
}

} // namespace

std::size_t worker_count(std::size_t requested, std::size_t jobs)
{
    std::size_t n = requested;
    if (n == 0) {
        if (const char* env = std::getenv("SDLSIM_THREADS")) {
            char* end = nullptr;
            const long v = std::strtol(env, &end, 10);
            if (end != env && v > 0)
                n = static_cast<std::size_t>(v);
        }
    }
    if (n == 0)
        n = std::max(1u, std::thread::hardware_concurrency());
    return std::max<std::size_t>(1, std::min(n, jobs));
}

SParamGrid SParamGrid::zeros(std::size_t n_ports, std::vector<double> frequencies)
{
    SParamGrid g;
    g.ports = n_ports;
    g.requested_frequencies = frequencies;
    g.frequencies = std::move(frequencies);
    g.s.assign(g.frequencies.size(), std::vector<std::complex<double>>(n_ports * n_ports));
    return g;
}

std::vector<double> linspace(double start, double stop, std::size_t count)
{
    if (count == 0)
        return {};
    if (count == 1)
        return {start};
    std::vector<double> v(count);
    for (std::size_t i = 0; i < count; ++i)
        v[i] = start + (stop - start) * static_cast<double>(i) / static_cast<double>(count - 1);
    return v;
}

SParamGrid sparams_sweep(const CirculatorConfig& config, const std::vector<double>& frequencies,
                         const SweepOptions& options)
{
    return sparams_sweep(config, schedule_from_config(config), frequencies, options);
}

SParamGrid sparams_sweep(const CirculatorConfig& config, const ControlSchedule& schedule,
                         const std::vector<double>& frequencies, const SweepOptions& opt)
{
    if (frequencies.empty())
        throw RangeError("sweep: no frequencies");
    if (opt.measure_periods == 0)
        throw RangeError("sweep: measure window must span at least one period");
    const double fs = config.sample_rate;
    const std::size_t window = opt.measure_periods * schedule.period_samples;

    SParamGrid grid;
    grid.ports = 4;
    grid.drive_dbm = opt.drive_dbm;
    grid.schedule_summary = summarize(schedule);
    for (double f : frequencies) {
        if (!(f > 0.0 && f < fs / 2.0))
            throw RangeError("sweep: frequency " + std::to_string(f) + " Hz outside (0, fs/2)");
        const double actual = opt.snap ? snap_to_grid(f, fs, window) : f;
        if (!grid.frequencies.empty() && actual <= grid.frequencies.back()) {
            grid.warnings.push_back("frequency " + std::to_string(f) + " Hz dropped: grid spacing finer than the "
                                    "measurement resolution or not increasing");
            continue;
        }
        grid.requested_frequencies.push_back(f);
        grid.frequencies.push_back(actual);
    }
    grid.s.assign(grid.frequencies.size(), std::vector<std::complex<double>>(16));

    const double amplitude = dbm_to_wave(opt.drive_dbm);
    const std::size_t jobs = grid.frequencies.size() * 4;
    std::vector<std::vector<std::string>> drift(jobs);
    parallel_for(jobs, worker_count(opt.threads, jobs), [&](std::size_t job) {
        const std::size_t k = job / 4;
        const int port = static_cast<int>(job % 4) + 1;
        auto col = measure_column(config, schedule, grid.frequencies[k], port, opt.settle_periods,
                                  opt.measure_periods, amplitude);
        for (std::size_t j = 0; j < 4; ++j)
            grid.at(k, j + 1, static_cast<std::size_t>(port)) = col.s[j];
        drift[job] = std::move(col.drift);
    });
    for (auto& d : drift)
        for (auto& m : d)
            grid.warnings.push_back(std::move(m));
    return grid;
}

GroupDelayResult group_delay(const SParamGrid& grid, std::size_t out_port, std::size_t in_port,
                             std::optional<double> delay_hint)
{
    const std::size_t n = grid.size();
    if (n < 2)
        throw RangeError("group delay: need at least two frequency points");
    if (out_port < 1 || in_port < 1 || out_port > grid.ports || in_port > grid.ports)
        throw RangeError("group delay: port out of range");

    GroupDelayResult r;
    std::vector<double> phase(n);
    phase[0] = std::arg(grid.at(0, out_port, in_port));
    double worst_step = 0.0;
    double widest = 0.0;
    for (std::size_t k = 1; k < n; ++k) {
        const double step = wrap_phase(std::arg(grid.at(k, out_port, in_port)) - std::arg(grid.at(k - 1, out_port, in_port)));
        phase[k] = phase[k - 1] + step;
        worst_step = std::max(worst_step, std::abs(step));
        widest = std::max(widest, grid.frequencies[k] - grid.frequencies[k - 1]);
    }

    r.points.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t lo = k == 0 ? 0 : k - 1;
        const std::size_t hi = k + 1 == n ? n - 1 : k + 1;
        const double dw = 2.0 * kPi * (grid.frequencies[hi] - grid.frequencies[lo]);
        r.points[k] = {grid.frequencies[k], -(phase[hi] - phase[lo]) / dw};
    }

    // Steps near pi are indistinguishable from their aliases.
    if (worst_step > 0.75 * kPi) {
        r.aliasing = true;
        char buf[160];
        std::snprintf(buf, sizeof buf, "phase step of %.2f rad between adjacent points: grid too coarse, "
                                       "delay may be aliased", worst_step);
        r.warnings.emplace_back(buf);
    }
    if (delay_hint && *delay_hint > 0.0 && widest > 1.0 / (2.0 * *delay_hint)) {
        r.aliasing = true;
        char buf[160];
        std::snprintf(buf, sizeof buf, "grid spacing %.4g Hz exceeds 1/(2 x %.4g s) = %.4g Hz: "
                                       "delay is ambiguous", widest, *delay_hint, 1.0 / (2.0 * *delay_hint));
        r.warnings.emplace_back(buf);
    }
    return r;
}

CirculatorMetrics metrics(const SParamGrid& grid, double iso_threshold_db, std::optional<double> il_window_db)
{
    if (grid.size() == 0)
        throw RangeError("metrics: empty grid");
    if (grid.ports != 4)
        throw RangeError("metrics: need a 4-port grid");
    const std::size_t n = grid.size();
    CirculatorMetrics m;
    m.iso_threshold_db = iso_threshold_db;
    m.il_window_db = il_window_db;

    auto mag = [&](std::size_t k, std::pair<int, int> p) {
        return std::abs(grid.at(k, static_cast<std::size_t>(p.first), static_cast<std::size_t>(p.second)));
    };

    std::array<double, 4> peak{};
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t k = 0; k < n; ++k)
            peak[i] = std::max(peak[i], mag(k, kForwardPaths[i]));

    std::vector<bool> ok(n);
    for (std::size_t k = 0; k < n; ++k) {
        bool q = true;
        for (std::size_t i = 0; i < 4; ++i) {
            const double fwd = mag(k, kForwardPaths[i]), rev = mag(k, kReversePaths[i]);
            q = q && loss_db(rev) > iso_threshold_db && fwd > rev;
            if (il_window_db)
                q = q && loss_db(fwd) - loss_db(peak[i]) <= *il_window_db;
        }
        ok[k] = q;
    }

    // Widest contiguous qualifying run.
    std::size_t best_lo = 0, best_hi = 0;
    bool found = false;
    double best_width = -1.0;
    for (std::size_t k = 0; k < n;) {
        if (!ok[k]) {
            ++k;
            continue;
        }
        std::size_t e = k;
        while (e + 1 < n && ok[e + 1])
            ++e;
        const double width = grid.frequencies[e] - grid.frequencies[k];
        if (width > best_width) {
            best_width = width;
            best_lo = k;
            best_hi = e;
            found = true;
        }
        k = e + 1;
    }

    std::size_t lo = 0, hi = n - 1;
    if (found) {
        lo = best_lo;
        hi = best_hi;
        m.band_start = grid.frequencies[lo];
        m.band_stop = grid.frequencies[hi];
        m.bandwidth = m.band_stop - m.band_start;
        m.center_frequency = 0.5 * (m.band_start + m.band_stop);
        if (m.bandwidth == 0.0)
            m.flags.emplace_back("only a single grid point meets the isolation threshold");
    } else {
        m.center_frequency = 0.5 * (grid.frequencies.front() + grid.frequencies.back());
        char buf[160];
        std::snprintf(buf, sizeof buf, "no frequency has every reverse isolation above %.3g dB "
                                       "with forward transmission dominant: bandwidth 0", iso_threshold_db);
        m.flags.emplace_back(buf);
    }
    m.fbw = m.center_frequency > 0.0 ? m.bandwidth / m.center_frequency : 0.0;

    for (std::size_t i = 0; i < 4; ++i) {
        m.il_db[i] = loss_db(peak[i]);
        if (std::isinf(m.il_db[i]))
            m.flags.push_back("forward path S" + std::to_string(kForwardPaths[i].first)
                              + std::to_string(kForwardPaths[i].second) + " carries no signal");

        double worst = 0.0;
        for (std::size_t k = lo; k <= hi; ++k)
            worst = std::max(worst, mag(k, kReversePaths[i]));
        m.iso_db[i] = loss_db(worst);
        m.directivity_db[i] = m.iso_db[i] - m.il_db[i];

        double refl = 0.0;
        for (std::size_t k = 0; k < n; ++k)
            refl = std::max(refl, std::abs(grid.at(k, i + 1, i + 1)));
        m.rl_db[i] = loss_db(refl);
    }
    m.worst_iso_db = *std::min_element(m.iso_db.begin(), m.iso_db.end());
    m.best_directivity_db = -kInf;
    for (std::size_t i = 0; i < 4; ++i)
        if (!std::isnan(m.directivity_db[i]) && m.directivity_db[i] > m.best_directivity_db) {
            m.best_directivity_db = m.directivity_db[i];
            m.best_pair = static_cast<int>(i);
        }
    if (std::isfinite(m.best_directivity_db)) {
        const auto [o, i] = kForwardPaths[static_cast<std::size_t>(m.best_pair)];
        char buf[160];
        std::snprintf(buf, sizeof buf, "largest contrast on S%d%d vs S%d%d: %.2f dB", o, i, i, o,
                      m.best_directivity_db);
        m.flags.emplace_back(buf);
    }
    return m;
}

SpectrumReport spectrum_probe(const CirculatorConfig& config, double f0, double drive_dbm,
                              std::size_t window_periods, std::size_t sidebands, std::size_t settle_periods)
{
    if (window_periods < kMinSpectrumPeriods)
        throw ResolutionError("spectrum: window of " + std::to_string(window_periods)
                              + " periods cannot resolve the modulation sidebands (need at least "
                              + std::to_string(kMinSpectrumPeriods) + ")");
    const double fs = config.sample_rate;
    if (!(f0 > 0.0 && f0 < fs / 2.0))
        throw RangeError("spectrum: f0 outside (0, fs/2)");

    const auto schedule = schedule_from_config(config);
    const std::size_t p = schedule.period_samples;
    const std::size_t w = window_periods * p;
    const std::size_t s0 = settle_periods * p;

    SpectrumReport r;
    r.requested_f0 = f0;
    r.f0 = snap_to_grid(f0, fs, w);
    r.f_mod = schedule.frozen ? 0.0 : fs / static_cast<double>(p);
    r.drive_dbm = drive_dbm;
    r.window_periods = window_periods;

    auto net = build_circulator(config, schedule);
    std::array<SampleBuffer, 4> stim;
    for (auto& b : stim)
        b.sample_rate = fs;
    stim[0] = make_tone(r.f0, dbm_to_wave(drive_dbm), 0.0, s0 + w, fs);
    const auto rec = run(net, stim, s0 + w);

    const auto k_max = static_cast<int>(sidebands);
    auto level = [&](const SampleBuffer& b, double f) {
        if (!(f > 0.0 && f < fs / 2.0))
            return kPowerFloorDbm;
        const double a = std::abs(coherent_phasor(b, f, s0, w));
        return a > 0.0 ? wave_to_dbm(a) : kPowerFloorDbm;
    };
    for (int port = 1; port <= 4; ++port) {
        const SampleBuffer& b = port == 1 ? rec.incident[0] : rec.emitted[static_cast<std::size_t>(port - 1)];
        PortSpectrum ps;
        ps.port = port;
        for (int k = -k_max; k <= k_max; ++k) {
            const double f = r.f0 + k * r.f_mod;
            ps.lines.push_back({k, f, level(b, f)});
        }
        ps.main_dbm = ps.lines[static_cast<std::size_t>(k_max)].power_dbm;
        r.ports[static_cast<std::size_t>(port - 1)] = std::move(ps);
    }
    r.reflected_dbm = level(rec.emitted[0], r.f0);
    const double in = r.ports[0].main_dbm;
    r.il_port2_db = in - r.ports[1].main_dbm;
    r.iso_port3_db = in - r.ports[2].main_dbm;
    r.iso_port4_db = in - r.ports[3].main_dbm;
    return r;
}

std::vector<ModPoint> modfreq_sweep(const CirculatorConfig& config, const std::vector<double>& f_mod_values,
                                    double f0, const SweepOptions& opt)
{
    const double fs = config.sample_rate;
    std::vector<ModPoint> points(f_mod_values.size());
    std::vector<std::optional<ControlSchedule>> schedules(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
        auto& pt = points[i];
        pt.requested_f_mod = f_mod_values[i];
        try {
            if (f_mod_values[i] == 0.0) {
                schedules[i] = frozen_schedule(config.schedule.period, fs);
                pt.f_mod = 0.0;
            } else {
                if (!(f_mod_values[i] > 0.0))
                    throw RangeError("modulation frequency must be positive");
                const double period = nearest_valid_period(1.0 / f_mod_values[i], fs);
                schedules[i] = build_schedule(period, config.switch_spec.t_transition, config.schedule.duty, fs,
                                              config.schedule.offset_fraction);
                pt.f_mod = 1.0 / schedules[i]->period;
            }
            pt.f0 = snap_to_grid(f0, fs, opt.measure_periods * schedules[i]->period_samples);
        } catch (const Error& e) {
            pt.error = e.what();
            schedules[i].reset();
        }
    }

    const double amplitude = dbm_to_wave(opt.drive_dbm);
    const std::size_t jobs = points.size() * 4;
    std::vector<std::array<std::complex<double>, 4>> cols(jobs);
    std::vector<std::string> errors(jobs);
    parallel_for(jobs, worker_count(opt.threads, jobs), [&](std::size_t job) {
        const std::size_t i = job / 4;
        if (!schedules[i])
            return;
        try {
            cols[job] = measure_column(config, *schedules[i], points[i].f0, static_cast<int>(job % 4) + 1,
                                       opt.settle_periods, opt.measure_periods, amplitude)
                            .s;
        } catch (const Error& e) {
            errors[job] = e.what();
        }
    });

    for (std::size_t i = 0; i < points.size(); ++i) {
        auto& pt = points[i];
        if (!schedules[i])
            continue;
        for (std::size_t c = 0; c < 4; ++c)
            if (!errors[4 * i + c].empty())
                pt.error = errors[4 * i + c];
        if (!pt.error.empty())
            continue;
        auto s = [&](int out, int in) { return std::abs(cols[4 * i + static_cast<std::size_t>(in - 1)][static_cast<std::size_t>(out - 1)]); };
        pt.il_db = -kInf;
        pt.iso_db = kInf;
        for (std::size_t p = 0; p < 4; ++p) {
            pt.il_db = std::max(pt.il_db, loss_db(s(kForwardPaths[p].first, kForwardPaths[p].second)));
            pt.iso_db = std::min(pt.iso_db, loss_db(s(kReversePaths[p].first, kReversePaths[p].second)));
        }
        pt.ok = true;
    }
    return points;
}

std::optional<std::size_t> modfreq_optimum(const std::vector<ModPoint>& points)
{
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < points.size(); ++i)
        if (points[i].ok && points[i].f_mod > 0.0 && (!best || points[i].iso_db > points[*best].iso_db))
            best = i;
    return best;
}

// ------------------------------------------------------------------ line check

namespace {

// A chain of two-ports joined by one-sample links. flip[i] means the element's port 1 faces
// the chain input.
struct Chain {
    std::vector<std::unique_ptr<ScatteringElement>> parts;
    std::vector<bool> flip;
};

Chain line_chain(const CirculatorConfig& config, const LineModel& model)
{
    Chain c;
    const double fs = config.sample_rate;
    auto add = [&](std::unique_ptr<ScatteringElement> e, bool flip) {
        c.parts.push_back(std::move(e));
        c.flip.push_back(flip);
    };
    if (config.matching)
        add(matching_element(*config.matching, fs, config.band_center()), false);
    if (const auto* d = std::get_if<DelayLineSpec>(&model))
        add(delay_line_element(*d, fs), false);
    else {
        const auto& t = std::get<TouchstoneLine>(model);
        add(element_from_touchstone(t.data, {fs, t.ir_len, t.band_center, t.band_width}), false);
    }
    if (config.matching)
        add(matching_element(*config.matching, fs, config.band_center()), true);
    return c;
}

// Two-port response of a chain at f by driving `drive` (0 or 1) and reading both ends.
std::array<std::complex<double>, 2> chain_column(Chain& c, double f, int drive, std::size_t settle,
                                                 std::size_t window, double fs)
{
    for (auto& e : c.parts)
        e->reset();
    const std::size_t m = c.parts.size();
    const std::size_t n = settle + window;
    const auto tone = make_tone(f, 1.0, 0.0, n, fs);
    // out[i][side]: wave element i emitted last sample on its left (0) / right (1) side.
    std::vector<std::array<double, 2>> prev(m, {0.0, 0.0}), cur(m, {0.0, 0.0});
    SampleBuffer left{fs, std::vector<double>(n), 0}, right{fs, std::vector<double>(n), 0};
    for (std::size_t t = 0; t < n; ++t) {
        for (std::size_t i = 0; i < m; ++i) {
            std::array<double, 2> inc{};
            inc[0] = i == 0 ? (drive == 0 ? tone.samples[t] : 0.0) : prev[i - 1][1];
            inc[1] = i + 1 == m ? (drive == 1 ? tone.samples[t] : 0.0) : prev[i + 1][0];
            std::array<double, 2> ports{c.flip[i] ? inc[1] : inc[0], c.flip[i] ? inc[0] : inc[1]};
            std::array<double, 2> out{};
            c.parts[i]->step(ports, 0.0, out);
            cur[i] = c.flip[i] ? std::array<double, 2>{out[1], out[0]} : out;
        }
        left.samples[t] = cur[0][0];
        right.samples[t] = cur[m - 1][1];
        std::swap(prev, cur);
    }
    const auto in = coherent_phasor(tone, f, settle, window);
    return {coherent_phasor(left, f, settle, window) / in, coherent_phasor(right, f, settle, window) / in};
}

double longest_memory(const LineModel& model, double fs)
{
    if (const auto* d = std::get_if<DelayLineSpec>(&model)) {
        int mult = 1;
        for (const auto& e : d->echoes)
            mult = std::max(mult, e.transit_multiple);
        return mult * d->tau * fs;
    }
    return static_cast<double>(std::get<TouchstoneLine>(model).ir_len);
}

} // namespace

LineCheck linecheck(const CirculatorConfig& config, const std::vector<double>& frequencies, std::size_t threads)
{
    if (frequencies.size() < 2)
        throw RangeError("linecheck: need at least two frequencies");
    const double fs = config.sample_rate;
    constexpr std::size_t window = 1 << 16;

    LineCheck lc;
    std::vector<double> snapped;
    for (double f : frequencies) {
        if (!(f > 0.0 && f < fs / 2.0))
            throw RangeError("linecheck: frequency outside (0, fs/2)");
        const double a = snap_to_grid(f, fs, window);
        if (snapped.empty() || a > snapped.back())
            snapped.push_back(a);
        else
            lc.notes.push_back("frequency " + std::to_string(f) + " Hz dropped after snapping");
    }
    lc.line_a = SParamGrid::zeros(2, snapped);
    lc.line_b = SParamGrid::zeros(2, snapped);
    lc.line_a.requested_frequencies = lc.line_b.requested_frequencies = frequencies;
    lc.line_a.schedule_summary = lc.line_b.schedule_summary = "none (line only)";

    const LineModel* models[2] = {&config.line_a, &config.line_b};
    SParamGrid* grids[2] = {&lc.line_a, &lc.line_b};
    const std::size_t jobs = snapped.size() * 4;
    parallel_for(jobs, worker_count(threads, jobs), [&](std::size_t job) {
        const std::size_t k = job / 4;
        const int line = static_cast<int>((job / 2) % 2);
        const int drive = static_cast<int>(job % 2);
        auto chain = line_chain(config, *models[line]);
        const auto settle = static_cast<std::size_t>(4.0 * longest_memory(*models[line], fs)) + 8192;
        const auto col = chain_column(chain, snapped[k], drive, settle, window, fs);
        grids[line]->at(k, 1, static_cast<std::size_t>(drive + 1)) = col[0];
        grids[line]->at(k, 2, static_cast<std::size_t>(drive + 1)) = col[1];
    });

    auto hint = [](const LineModel& m) -> std::optional<double> {
        if (const auto* d = std::get_if<DelayLineSpec>(&m))
            return d->tau;
        return std::nullopt;
    };
    lc.delay_a = group_delay(lc.line_a, 2, 1, hint(config.line_a));
    lc.delay_b = group_delay(lc.line_b, 2, 1, hint(config.line_b));
    if (config.matching)
        lc.notes.emplace_back("matching sections joined by one-sample links add 2 samples to the through delay");
    return lc;
}

} // namespace sdl
