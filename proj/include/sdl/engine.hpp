#pragma once

#include "sdl/config.hpp"
#include "sdl/elements.hpp"
#include "sdl/schedule.hpp"
#include "sdl/signal.hpp"

#include <array>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace sdl {

/// Every directed link delays its wave by this many samples.
inline constexpr std::size_t kLinkLatencySamples = 1;

enum class Role { left_crossbar, right_crossbar, line_a, line_b, match_1, match_2, match_3, match_4 };

std::string_view role_name(Role role) noexcept;

struct PortRef {
    std::size_t element = 0;
    std::size_t port = 0;
    bool operator==(const PortRef&) const = default;
};

/// Directed wave connection: what `from` emits at sample n reaches `to` at n + 1.
struct Link {
    PortRef from;
    PortRef to;
};

class NetworkTopology {
public:
    NetworkTopology(double sample_rate, ControlSchedule schedule);

    std::size_t add_element(Role role, std::unique_ptr<ScatteringElement> element,
                            std::optional<Side> control = std::nullopt);

    /// Two directed links, one each way.
    void connect(PortRef a, PortRef b);

    /// External ports are numbered 1..4.
    void bind_external(int port_number, PortRef where);

    /// Every element port must have exactly one wave source and one sink.
    void validate() const;

    std::size_t element_count() const noexcept { return elements_.size(); }
    ScatteringElement& element(std::size_t i) { return *elements_[i]; }
    const ScatteringElement& element(std::size_t i) const { return *elements_[i]; }
    Role role(std::size_t i) const { return roles_[i]; }
    std::optional<Side> control(std::size_t i) const { return controls_[i]; }
    std::optional<std::size_t> find(Role role) const;

    const std::vector<Link>& links() const noexcept { return links_; }
    const std::array<std::optional<PortRef>, 4>& external_ports() const noexcept { return external_; }

    const ControlSchedule& schedule() const noexcept { return schedule_; }
    double sample_rate() const noexcept { return sample_rate_; }

    /// Links crossed going from one crossbar, through a line, to the other crossbar.
    std::size_t links_per_traversal() const noexcept;

    std::string digest;

private:
    double sample_rate_;
    ControlSchedule schedule_;
    std::vector<std::unique_ptr<ScatteringElement>> elements_;
    std::vector<Role> roles_;
    std::vector<std::optional<Side>> controls_;
    std::vector<Link> links_;
    std::array<std::optional<PortRef>, 4> external_;
};

struct RunRecord {
    double sample_rate = 0.0;
    std::array<SampleBuffer, 4> incident; // wave injected at each external port
    std::array<SampleBuffer, 4> emitted;  // wave leaving each external port
    std::vector<double> link_energy;      // per directed link, same order as NetworkTopology::links()
    ControlSchedule schedule;
    std::string config_digest;
};

/// Schedule described by the config (frozen or switching).
ControlSchedule schedule_from_config(const CirculatorConfig& config);

/// Canonical four-port circulator:
///   Port1 - left.PortTop, Port3 - left.PortBot, Port2 - right.PortTop, Port4 - right.PortBot,
///   left.LineA - line_a - right.LineA, left.LineB - line_b - right.LineB,
/// with optional matching sections between every crossbar line port and its line.
NetworkTopology build_circulator(const CirculatorConfig& config);
NetworkTopology build_circulator(const CirculatorConfig& config, const ControlSchedule& schedule);

/// Sample-stepped simulation from rest. `stimuli` holds four buffers (empty means silent).
/// Throws NumericalFault if any wave turns non-finite.
RunRecord run(NetworkTopology& network, std::span<const SampleBuffer> stimuli, std::size_t n_samples);

/// CSV with columns sample,time_s,p1_in,p1_out,...,p4_out.
std::string run_record_csv(const RunRecord& record, const std::string& header_comment = {});

} // namespace sdl
