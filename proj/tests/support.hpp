#pragma once

// Randomized scenarios shared by the unit tests and the acceptance suite.

#include "sdl/config.hpp"
#include "sdl/engine.hpp"
#include "sdl/event_walk.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>
#include <vector>

namespace sdl::testing {

inline double uniform(std::mt19937& rng, double lo, double hi)
{
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline int uniform_int(std::mt19937& rng, int lo, int hi)
{
    return std::uniform_int_distribution<int>(lo, hi)(rng);
}

/// Raises the line loss until the tap gains cannot exceed unity.
inline void make_taps_passive(DelayLineSpec& line)
{
    const double rho = db_loss_to_gain(line.port_return_db);
    double rel = 1.0;
    for (const auto& e : line.echoes)
        rel += std::pow(10.0, e.level_db / 20.0);
    const double g_max = (1.0 - rho) / rel;
    line.il_db = std::max(line.il_db, -20.0 * std::log10(g_max));
}

/// Raise the on-state loss so that on gain plus leakage stays within unity.
inline void make_switch_passive(SwitchSpec& sw)
{
    const double leak = std::isinf(sw.iso_off_db) ? 0.0 : std::pow(10.0, -sw.iso_off_db / 20.0);
    sw.il_on_db = std::max(sw.il_on_db, -20.0 * std::log10(1.0 - leak));
}

/// Flat-band, instantaneously switched circulator with random losses, leakage,
/// port reflections and echoes. Short lines keep runs cheap.
inline CirculatorConfig random_flat_config(std::mt19937& rng)
{
    CirculatorConfig c;
    c.sample_rate = 4e9;
    DelayLineSpec line;
    line.band_order = 0;
    line.tau = uniform_int(rng, 60, 400) / c.sample_rate;
    line.il_db = uniform(rng, 0.0, 6.0);
    line.port_return_db = uniform(rng, 0.0, 1.0) < 0.3 ? kInfiniteDb : uniform(rng, 10.0, 40.0);
    if (uniform(rng, 0.0, 1.0) < 0.7)
        line.echoes.push_back({2, uniform(rng, -40.0, -15.0)});
    if (uniform(rng, 0.0, 1.0) < 0.7)
        line.echoes.push_back({3, uniform(rng, -50.0, -25.0)});
    make_taps_passive(line);
    c.line_a = line;
    DelayLineSpec other = line;
    other.il_db = line.il_db + uniform(rng, 0.0, 0.5);
    c.line_b = other;
    c.switch_spec.il_on_db = uniform(rng, 0.0, 1.5);
    c.switch_spec.iso_off_db = uniform(rng, 0.0, 1.0) < 0.25 ? kInfiniteDb : uniform(rng, 20.0, 60.0);
    c.switch_spec.t_transition = 0.0;
    make_switch_passive(c.switch_spec);
    // Quarter period near the loop delay, sometimes deliberately off.
    const long d = std::lround(line.tau * c.sample_rate);
    const long quarter = d + 2 + uniform_int(rng, -6, 6);
    c.schedule.period = 4.0 * static_cast<double>(quarter) / c.sample_rate;
    return c;
}

struct OracleComparison {
    bool supported = false;
    std::size_t arrivals = 0;
    double max_relative_error = 0.0; // waveform residual over the strongest arrival
    bool timing_exact = true;        // every strong arrival sits exactly at oracle + link latency
    std::size_t timing_checked = 0;
};

/// One random burst through a random flat config, engine versus oracle.
inline OracleComparison compare_with_oracle(std::mt19937& rng)
{
    const auto config = random_flat_config(rng);
    const auto schedule = schedule_from_config(config);
    const auto p = static_cast<std::int64_t>(schedule.period_samples);

    Injection inj;
    inj.port = uniform_int(rng, 1, 4);
    inj.length = static_cast<std::size_t>(uniform_int(rng, 8, 60));
    inj.start = uniform_int(rng, 0, static_cast<int>(2 * p));

    const std::int64_t n_samples = 5 * p;
    EventWalkOptions opt;
    opt.threshold = 1e-12;
    opt.horizon = n_samples - 1;
    opt.link_latency = kLinkLatencySamples;
    const auto arrivals = event_walk_oracle(config, schedule, inj, opt);

    OracleComparison r;
    if (!arrivals)
        return r;
    r.supported = true;
    r.arrivals = arrivals->size();

    std::vector<double> burst(inj.length);
    for (auto& x : burst)
        x = uniform(rng, -1.0, 1.0);
    std::array<SampleBuffer, 4> stim;
    for (auto& b : stim)
        b.sample_rate = config.sample_rate;
    auto& drive = stim[static_cast<std::size_t>(inj.port - 1)];
    drive.samples = burst;
    drive.start_index = inj.start;

    auto net = build_circulator(config, schedule);
    const auto rec = run(net, stim, static_cast<std::size_t>(n_samples));

    std::array<std::vector<double>, 4> predicted;
    for (auto& v : predicted)
        v.assign(static_cast<std::size_t>(n_samples), 0.0);
    double strongest = 0.0;
    for (const auto& a : *arrivals) {
        strongest = std::max(strongest, std::abs(a.amplitude));
        const std::int64_t at = a.engine_sample(kLinkLatencySamples);
        for (std::size_t i = 0; i < burst.size(); ++i) {
            const std::int64_t n = at + static_cast<std::int64_t>(i);
            if (n < n_samples)
                predicted[static_cast<std::size_t>(a.port - 1)][static_cast<std::size_t>(n)] += a.amplitude * burst[i];
        }
    }
    double worst = 0.0;
    for (std::size_t k = 0; k < 4; ++k)
        for (std::int64_t n = 0; n < n_samples; ++n)
            worst = std::max(worst, std::abs(rec.emitted[k].samples[static_cast<std::size_t>(n)]
                                             - predicted[k][static_cast<std::size_t>(n)]));
    r.max_relative_error = strongest > 0.0 ? worst / strongest : worst;

    // Timing: the strongest arrival must line up exactly; one sample either way must not.
    const auto& main = *std::max_element(arrivals->begin(), arrivals->end(),
                                         [](const Arrival& a, const Arrival& b) { return std::abs(a.amplitude) < std::abs(b.amplitude); });
    const auto& out = rec.emitted[static_cast<std::size_t>(main.port - 1)].samples;
    auto projection = [&](std::int64_t shift) {
        double acc = 0.0, norm = 0.0;
        for (std::size_t i = 0; i < burst.size(); ++i) {
            const std::int64_t n = main.engine_sample(kLinkLatencySamples) + shift + static_cast<std::int64_t>(i);
            if (n >= 0 && n < n_samples)
                acc += out[static_cast<std::size_t>(n)] * burst[i];
            norm += burst[i] * burst[i];
        }
        return acc / norm;
    };
    const double at0 = projection(0);
    r.timing_checked = 1;
    r.timing_exact = std::abs(at0 - main.amplitude) <= 1e-6 * std::abs(main.amplitude) + 1e-12
                     && std::abs(projection(1)) < std::abs(at0) && std::abs(projection(-1)) < std::abs(at0);
    return r;
}

/// Random passive circulator: any line model, optional matching, any transition.
inline CirculatorConfig random_passive_config(std::mt19937& rng)
{
    CirculatorConfig c;
    c.sample_rate = 4e9;
    DelayLineSpec line;
    line.tau = uniform_int(rng, 80, 300) / c.sample_rate;
    line.il_db = uniform(rng, 0.0, 6.0);
    line.band_order = 2 * uniform_int(rng, 0, 2);
    line.f_center = 155e6;
    line.bandwidth = uniform(rng, 10e6, 60e6);
    line.port_return_db = uniform(rng, 10.0, 40.0);
    line.echoes = {{2, uniform(rng, -40.0, -15.0)}, {3, uniform(rng, -50.0, -25.0)}};
    make_taps_passive(line);
    c.line_a = line;
    c.line_b = line;
    c.switch_spec = SwitchSpec{uniform(rng, 0.0, 1.5), uniform(rng, 20.0, 50.0),
                               uniform_int(rng, 0, 16) / c.sample_rate, uniform(rng, -1.0, 1.0)};
    make_switch_passive(c.switch_spec);
    if (uniform(rng, 0.0, 1.0) < 0.4)
        c.matching = MatchSpec{uniform(rng, 10e-9, 80e-9), uniform(rng, 2e-12, 20e-12),
                               uniform(rng, 0.0, 1.0) < 0.5 ? MatchOrientation::l_toward_line
                                                            : MatchOrientation::l_toward_port,
                               50.0};
    const long d = std::lround(line.tau * c.sample_rate);
    c.schedule.period = 4.0 * static_cast<double>(d + uniform_int(rng, -8, 12)) / c.sample_rate;
    return c;
}

/// Emitted over injected energy for random noise stimuli at every port.
inline double energy_ratio(const CirculatorConfig& config, std::mt19937& rng)
{
    auto net = build_circulator(config);
    const std::size_t n = 6 * net.schedule().period_samples;
    std::array<SampleBuffer, 4> stim;
    for (auto& b : stim) {
        b.sample_rate = config.sample_rate;
        const auto len = static_cast<std::size_t>(uniform_int(rng, 50, static_cast<int>(n / 2)));
        b.start_index = uniform_int(rng, 0, static_cast<int>(n - len));
        b.samples.resize(len);
        for (auto& x : b.samples)
            x = uniform(rng, -1.0, 1.0);
    }
    const auto rec = run(net, stim, n);
    double in = 0.0, out = 0.0;
    for (std::size_t k = 0; k < 4; ++k) {
        in += rec.incident[k].energy();
        out += rec.emitted[k].energy();
    }
    return out / in;
}

} // namespace sdl::testing
