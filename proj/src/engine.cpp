#include "sdl/engine.hpp"

#include "sdl/errors.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace sdl {

std::string_view role_name(Role role) noexcept
{
    switch (role) {
    case Role::left_crossbar:
        return "left_crossbar";
    case Role::right_crossbar:
        return "right_crossbar";
    case Role::line_a:
        return "line_a";
    case Role::line_b:
        return "line_b";
    case Role::match_1:
        return "match_1";
    case Role::match_2:
        return "match_2";
    case Role::match_3:
        return "match_3";
    case Role::match_4:
        return "match_4";
    }
    return "?";
}

NetworkTopology::NetworkTopology(double sample_rate, ControlSchedule schedule)
    : sample_rate_(sample_rate), schedule_(std::move(schedule))
{
}

std::size_t NetworkTopology::add_element(Role role, std::unique_ptr<ScatteringElement> element,
                                         std::optional<Side> control)
{
    elements_.push_back(std::move(element));
    roles_.push_back(role);
    controls_.push_back(control);
    return elements_.size() - 1;
}

void NetworkTopology::connect(PortRef a, PortRef b)
{
    links_.push_back({a, b});
    links_.push_back({b, a});
}

void NetworkTopology::bind_external(int port_number, PortRef where)
{
    if (port_number < 1 || port_number > 4)
        throw RangeError("external port number must be 1..4");
    external_[static_cast<std::size_t>(port_number - 1)] = where;
}

std::optional<std::size_t> NetworkTopology::find(Role role) const
{
    for (std::size_t i = 0; i < roles_.size(); ++i)
        if (roles_[i] == role)
            return i;
    return std::nullopt;
}

std::size_t NetworkTopology::links_per_traversal() const noexcept
{
    return find(Role::match_1) ? 4 : 2;
}

void NetworkTopology::validate() const
{
    std::vector<std::string> problems;
    for (std::size_t e = 0; e < elements_.size(); ++e) {
        for (std::size_t p = 0; p < elements_[e]->port_count(); ++p) {
            const PortRef ref{e, p};
            int sources = 0, sinks = 0;
            for (const auto& l : links_) {
                sources += l.to == ref;
                sinks += l.from == ref;
            }
            for (const auto& x : external_)
                if (x && *x == ref) {
                    ++sources;
                    ++sinks;
                }
            if (sources != 1 || sinks != 1)
                problems.push_back(std::string(role_name(roles_[e])) + " port " + std::to_string(p)
                                   + " has " + std::to_string(sources) + " sources and "
                                   + std::to_string(sinks) + " sinks");
        }
    }
    for (std::size_t k = 0; k < 4; ++k)
        if (!external_[k])
            problems.push_back("external port " + std::to_string(k + 1) + " is unbound");
    if (!problems.empty())
        throw ConfigError(std::move(problems));
}

ControlSchedule schedule_from_config(const CirculatorConfig& c)
{
    if (c.schedule.frozen)
        return frozen_schedule(c.schedule.period, c.sample_rate);
    return build_schedule(c.schedule.period, c.switch_spec.t_transition, c.schedule.duty, c.sample_rate,
                          c.schedule.offset_fraction);
}

NetworkTopology build_circulator(const CirculatorConfig& config)
{
    return build_circulator(config, schedule_from_config(config));
}

NetworkTopology build_circulator(const CirculatorConfig& config, const ControlSchedule& schedule)
{
    if (schedule.sample_rate != config.sample_rate)
        throw ConfigError({"schedule sample rate " + std::to_string(schedule.sample_rate)
                           + " Hz differs from the network's " + std::to_string(config.sample_rate) + " Hz"});

    NetworkTopology net(config.sample_rate, schedule);
    net.digest = config_digest(config);

    auto make_line = [&](const LineModel& m) -> std::unique_ptr<ScatteringElement> {
        if (const auto* d = std::get_if<DelayLineSpec>(&m))
            return delay_line_element(*d, config.sample_rate);
        const auto& ts = std::get<TouchstoneLine>(m);
        return element_from_touchstone(
            ts.data, TouchstoneImportOptions{config.sample_rate, ts.ir_len, ts.band_center, ts.band_width});
    };

    const auto left = net.add_element(Role::left_crossbar, crossbar_element(config.switch_spec), Side::left);
    const auto right = net.add_element(Role::right_crossbar, crossbar_element(config.switch_spec), Side::right);
    const auto la = net.add_element(Role::line_a, make_line(config.line_a));
    const auto lb = net.add_element(Role::line_b, make_line(config.line_b));

    net.bind_external(1, {left, Crossbar::port_top});
    net.bind_external(3, {left, Crossbar::port_bot});
    net.bind_external(2, {right, Crossbar::port_top});
    net.bind_external(4, {right, Crossbar::port_bot});

    // Joins a crossbar line port to a line end, through a matching section when configured.
    // Matching sections face the crossbar with port 0 and the line with port 1.
    auto join = [&](PortRef switch_port, PortRef line_port, Role match_role) {
        if (!config.matching) {
            net.connect(switch_port, line_port);
            return;
        }
        const auto m = net.add_element(
            match_role, matching_element(*config.matching, config.sample_rate, config.band_center()));
        net.connect(switch_port, {m, 0});
        net.connect({m, 1}, line_port);
    };
    join({left, Crossbar::line_a}, {la, 0}, Role::match_1);
    join({right, Crossbar::line_a}, {la, 1}, Role::match_2);
    join({left, Crossbar::line_b}, {lb, 0}, Role::match_3);
    join({right, Crossbar::line_b}, {lb, 1}, Role::match_4);

    net.validate();
    return net;
}

RunRecord run(NetworkTopology& net, std::span<const SampleBuffer> stimuli, std::size_t n_samples)
{
    if (stimuli.size() != 4)
        throw RangeError("run: expected one stimulus buffer per external port");
    for (const auto& s : stimuli) {
        if (!s.empty() && s.sample_rate != net.sample_rate())
            throw ConfigError({"run: stimulus sample rate differs from the network's"});
        if (s.start_index < 0 || static_cast<std::size_t>(s.start_index) + s.size() > n_samples)
            if (!s.empty())
                throw RangeError("run: stimulus extends beyond n_samples");
    }
    net.validate();

    // Flatten element ports into one index space.
    const std::size_t n_elem = net.element_count();
    std::vector<std::size_t> offset(n_elem + 1, 0);
    for (std::size_t e = 0; e < n_elem; ++e)
        offset[e + 1] = offset[e] + net.element(e).port_count();
    const std::size_t n_ports = offset[n_elem];
    auto flat = [&](PortRef r) { return offset[r.element] + r.port; };

    // source[p] >= 0: global port whose previous emission feeds p; < 0: external port -(k+1).
    std::vector<long long> source(n_ports, 0);
    for (const auto& l : net.links())
        source[flat(l.to)] = static_cast<long long>(flat(l.from));
    std::array<std::size_t, 4> ext{};
    for (std::size_t k = 0; k < 4; ++k) {
        ext[k] = flat(*net.external_ports()[k]);
        source[ext[k]] = -static_cast<long long>(k) - 1;
    }
    std::vector<std::size_t> link_src(net.links().size());
    for (std::size_t i = 0; i < net.links().size(); ++i)
        link_src[i] = flat(net.links()[i].from);

    // One period of each control trace.
    const auto& sched = net.schedule();
    const std::size_t period = sched.period_samples;
    std::vector<double> trace[2];
    for (int s = 0; s < 2; ++s) {
        trace[s].resize(period);
        for (std::size_t n = 0; n < period; ++n)
            trace[s][n] = bar_fraction(sched, s == 0 ? Side::left : Side::right, static_cast<std::int64_t>(n));
    }
    std::vector<const std::vector<double>*> ctrl(n_elem, nullptr);
    for (std::size_t e = 0; e < n_elem; ++e)
        if (auto side = net.control(e))
            ctrl[e] = &trace[*side == Side::left ? 0 : 1];

    RunRecord rec;
    rec.sample_rate = net.sample_rate();
    rec.schedule = sched;
    rec.config_digest = net.digest;
    rec.link_energy.assign(net.links().size(), 0.0);
    for (std::size_t k = 0; k < 4; ++k) {
        rec.incident[k].sample_rate = rec.emitted[k].sample_rate = net.sample_rate();
        rec.incident[k].samples.assign(n_samples, 0.0);
        rec.emitted[k].samples.assign(n_samples, 0.0);
        const auto& s = stimuli[k];
        for (std::size_t i = 0; i < s.size(); ++i)
            rec.incident[k].samples[static_cast<std::size_t>(s.start_index) + i] = s.samples[i];
    }

    for (std::size_t e = 0; e < n_elem; ++e)
        net.element(e).reset();

    std::vector<double> prev(n_ports, 0.0), cur(n_ports, 0.0), inc(n_ports, 0.0);
    std::size_t phase = 0;
    for (std::size_t n = 0; n < n_samples; ++n) {
        for (std::size_t p = 0; p < n_ports; ++p) {
            const long long s = source[p];
            inc[p] = s >= 0 ? prev[static_cast<std::size_t>(s)]
                            : rec.incident[static_cast<std::size_t>(-s - 1)].samples[n];
        }
        for (std::size_t e = 0; e < n_elem; ++e) {
            const std::size_t o = offset[e];
            const std::size_t np = offset[e + 1] - o;
            const double g = ctrl[e] ? (*ctrl[e])[phase] : 0.0;
            net.element(e).step(std::span<const double>(inc.data() + o, np), g,
                                std::span<double>(cur.data() + o, np));
        }
        for (std::size_t p = 0; p < n_ports; ++p)
            if (!std::isfinite(cur[p]))
                throw NumericalFault("run: non-finite wave", static_cast<std::int64_t>(n));
        for (std::size_t i = 0; i < link_src.size(); ++i)
            rec.link_energy[i] += prev[link_src[i]] * prev[link_src[i]];
        for (std::size_t k = 0; k < 4; ++k)
            rec.emitted[k].samples[n] = cur[ext[k]];
        std::swap(prev, cur);
        if (++phase == period)
            phase = 0;
    }
    return rec;
}

std::string run_record_csv(const RunRecord& r, const std::string& header_comment)
{
    std::ostringstream os;
    os << header_comment;
    os << "sample,time_s,p1_in,p1_out,p2_in,p2_out,p3_in,p3_out,p4_in,p4_out\n";
    const std::size_t n = r.emitted[0].size();
    char buf[64];
    for (std::size_t i = 0; i < n; ++i) {
        os << i;
        std::snprintf(buf, sizeof buf, ",%.12g", static_cast<double>(i) / r.sample_rate);
        os << buf;
        for (std::size_t k = 0; k < 4; ++k) {
            std::snprintf(buf, sizeof buf, ",%.12g,%.12g", r.incident[k].samples[i], r.emitted[k].samples[i]);
            os << buf;
        }
        os << '\n';
    }
    return os.str();
}

} // namespace sdl
