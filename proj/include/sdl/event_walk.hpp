#pragma once

#include "sdl/config.hpp"
#include "sdl/schedule.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

namespace sdl {

/// A short stimulus burst entering external port `port` (1..4).
struct Injection {
    int port = 1;
    std::int64_t start = 0;  // first sample of the burst
    std::size_t length = 1;  // samples
};

/// A delayed, scaled copy of the injected burst leaving an external port.
struct Arrival {
    int port = 0;
    std::int64_t sample = 0; // propagation delay only, link latency excluded
    std::size_t links = 0;   // links crossed on the way
    double amplitude = 0.0;

    /// Where a sample-stepped simulation with one-sample links sees the first burst sample.
    std::int64_t engine_sample(std::size_t link_latency) const noexcept
    {
        return sample + static_cast<std::int64_t>(links * link_latency);
    }
};

struct EventWalkOptions {
    double threshold = 1e-10;         // drop paths weaker than this (relative to the injection)
    std::int64_t horizon = 1 << 20;   // ignore arrivals later than this engine sample
    std::size_t link_latency = 1;     // samples per link, mirrored from the engine under test
};

/// Walks the burst through the circulator symbolically: switch states from the schedule,
/// gains from the switch spec, delays and echoes from the line specs. Only flat-band lines,
/// instantaneous switching and configurations without matching sections are supported.
/// Returns nullopt when the case is unsupported, including any encounter of the burst with
/// a switch whose state changes during the burst.
std::optional<std::vector<Arrival>> event_walk_oracle(const CirculatorConfig& config,
                                                      const ControlSchedule& schedule,
                                                      const Injection& injection,
                                                      const EventWalkOptions& options = {});

} // namespace sdl
