#include "sdl/event_walk.hpp"

#include <cmath>
#include <map>
#include <tuple>
#include <variant>

namespace sdl {

namespace {

// Places a packet can wait: a crossbar input port or a line input port.
enum class Site { left_top, left_bot, left_a, left_b, right_top, right_bot, right_a, right_b, line_a0, line_a1, line_b0, line_b1 };

struct Key {
    std::int64_t time; // engine sample at which the burst's first sample enters the site
    int site;
    std::size_t links;
    auto operator<=>(const Key&) const = default;
};

double gain_of(double db) { return std::isinf(db) && db > 0 ? 0.0 : std::pow(10.0, -db / 20.0); }

} // namespace

std::optional<std::vector<Arrival>> event_walk_oracle(const CirculatorConfig& config,
                                                      const ControlSchedule& schedule,
                                                      const Injection& inj,
                                                      const EventWalkOptions& opt)
{
    if (config.matching || config.switch_spec.t_transition != 0.0 || inj.length == 0 || inj.port < 1
        || inj.port > 4)
        return std::nullopt;
    const auto* la = std::get_if<DelayLineSpec>(&config.line_a);
    const auto* lb = std::get_if<DelayLineSpec>(&config.line_b);
    if (!la || !lb || la->band_order != 0 || lb->band_order != 0)
        return std::nullopt;

    const double fs = config.sample_rate;
    const double s_on = gain_of(config.switch_spec.il_on_db);
    const double leak = gain_of(config.switch_spec.iso_off_db);
    const auto lat = static_cast<std::int64_t>(opt.link_latency);

    struct LineModel {
        std::int64_t d;
        double g;
        double rho;
        std::vector<std::pair<int, double>> echoes;
    };
    auto line_model = [&](const DelayLineSpec& s) {
        LineModel m{std::llround(s.tau * fs), gain_of(s.il_db), gain_of(s.port_return_db), {}};
        for (const auto& e : s.echoes)
            m.echoes.emplace_back(e.transit_multiple, m.g * std::pow(10.0, e.level_db / 20.0));
        return m;
    };
    const LineModel lines[2] = {line_model(*la), line_model(*lb)};

    std::map<Key, double> queue;
    std::map<std::tuple<int, std::int64_t, std::size_t>, double> out;
    auto push = [&](std::int64_t t, Site s, std::size_t links, double a) {
        if (std::abs(a) < opt.threshold || t > opt.horizon)
            return;
        queue[{t, static_cast<int>(s), links}] += a;
    };

    // External ports: 1 left top, 3 left bottom, 2 right top, 4 right bottom.
    static constexpr Site entry[4] = {Site::left_top, Site::right_top, Site::left_bot, Site::right_bot};
    push(inj.start, entry[inj.port - 1], 0, 1.0);

    const auto len = static_cast<std::int64_t>(inj.length);
    while (!queue.empty()) {
        const auto [key, a] = *queue.begin();
        queue.erase(queue.begin());
        if (std::abs(a) < opt.threshold)
            continue;
        const auto site = static_cast<Site>(key.site);
        const std::int64_t t = key.time;
        const std::size_t k = key.links;

        if (site >= Site::line_a0) {
            // Line input: end 0 faces the left crossbar, end 1 the right.
            const int idx = site <= Site::line_a1 ? 0 : 1;
            const int end = (site == Site::line_a1 || site == Site::line_b1) ? 1 : 0;
            const LineModel& m = lines[idx];
            const Site far_xbar = end == 0 ? (idx == 0 ? Site::right_a : Site::right_b)
                                           : (idx == 0 ? Site::left_a : Site::left_b);
            const Site near_xbar = end == 0 ? (idx == 0 ? Site::left_a : Site::left_b)
                                            : (idx == 0 ? Site::right_a : Site::right_b);
            push(t + m.d + lat, far_xbar, k + 1, a * m.g);
            push(t + lat, near_xbar, k + 1, -a * m.rho);
            for (const auto& [mult, g] : m.echoes)
                push(t + mult * m.d + lat, mult % 2 ? far_xbar : near_xbar, k + 1, a * g);
            continue;
        }

        const bool left = site <= Site::left_b;
        const Side side = left ? Side::left : Side::right;
        const double g0 = bar_fraction(schedule, side, t);
        for (std::int64_t n = t + 1; n < t + len; ++n)
            if (bar_fraction(schedule, side, n) != g0)
                return std::nullopt;
        if (g0 != 0.0 && g0 != 1.0)
            return std::nullopt;
        const double bar = g0 == 1.0 ? s_on : leak;
        const double cross = g0 == 1.0 ? leak : s_on;

        const int base = left ? 0 : 4;
        const int local = key.site - base; // 0 top, 1 bot, 2 line a, 3 line b
        const Site line_a_in = left ? Site::line_a0 : Site::line_a1;
        const Site line_b_in = left ? Site::line_b0 : Site::line_b1;
        const int top_port = left ? 1 : 2;
        const int bot_port = left ? 3 : 4;
        auto emit = [&](int port, double amp) {
            if (std::abs(amp) >= opt.threshold && t <= opt.horizon)
                out[{port, t - static_cast<std::int64_t>(k) * lat, k}] += amp;
        };
        switch (local) {
        case 0:
            push(t + lat, line_a_in, k + 1, a * bar);
            push(t + lat, line_b_in, k + 1, a * cross);
            break;
        case 1:
            push(t + lat, line_a_in, k + 1, a * cross);
            push(t + lat, line_b_in, k + 1, a * bar);
            break;
        case 2:
            emit(top_port, a * bar);
            emit(bot_port, a * cross);
            break;
        default:
            emit(top_port, a * cross);
            emit(bot_port, a * bar);
            break;
        }
    }

    std::vector<Arrival> arrivals;
    for (const auto& [key, a] : out) {
        if (std::abs(a) < opt.threshold)
            continue;
        const auto& [port, sample, links] = key;
        arrivals.push_back({port, sample, links, a});
    }
    return arrivals;
}

} // namespace sdl
