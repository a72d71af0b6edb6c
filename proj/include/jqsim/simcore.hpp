#ifndef JQSIM_SIMCORE_HPP
#define JQSIM_SIMCORE_HPP

#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <string_view>
#include <vector>

#include "jqsim/scenario.hpp"
#include "jqsim/wfq.hpp"

namespace jqsim {

/// Names the pseudo-random construction so traces stay reproducible across
/// platforms: one mt19937_64 per declared flow, seeded with
/// splitmix64(seed ^ golden * (flow index + 1)); uniforms take the top 53
/// bits; exponential gaps use -mean * log1p(-u).
inline constexpr std::string_view kRngDescription = "mt19937_64/splitmix64/exp-inverse-cdf";

std::uint64_t splitmix64(std::uint64_t x);

/// Traffic source for one declared flow.
class TrafficGenerator {
public:
    struct Emission {
        FlowId flow;
        Seconds at;
    };

    TrafficGenerator(const FlowSpec& spec, Seconds duration, std::uint64_t stream_seed);

    /// Next emission, or nullopt once the source has stopped.
    std::optional<Emission> next_packet();

    const FlowSpec& spec() const { return spec_; }

private:
    double uniform();
    Seconds exponential(Seconds mean);

    FlowSpec spec_;
    Seconds stop_;
    Seconds interval_;
    std::mt19937_64 rng_;
    std::uint64_t count_ = 0;
    Seconds clock_ = 0.0;
};

/// Every arrival of the scenario, sorted by (arrival, flow, seq).
std::vector<Packet> generate_arrivals(const Scenario& scenario);

enum class EventKind { enqueue, dequeue, drop };

std::string_view to_string(EventKind kind);

struct TraceEvent {
    EventKind kind = EventKind::enqueue;
    Seconds time = 0.0;
    FlowId flow;
    UserId user;
    std::uint64_t seq = 0;
    std::uint32_t length = 0;
    std::optional<Timestamps> tags;  ///< absent for drops

    friend bool operator==(const TraceEvent&, const TraceEvent&) = default;
};

struct RunResult {
    SchedulerKind scheduler = SchedulerKind::wfq;
    std::vector<TraceEvent> events;
    std::uint64_t residual_packets = 0;
    std::uint64_t residual_bytes = 0;
};

std::unique_ptr<WfqScheduler> make_scheduler(const Scenario& scenario, SchedulerKind kind);

/*
 * Feed `arrivals` through `kind` over one link of scenario.link_rate.
 *
 * Events at equal times are handled arrivals first (by flow, then seq), then
 * the link. The link is non-preemptive and work conserving; a dequeue event
 * marks the start of transmission. Nothing after scenario.duration is
 * processed.
 */
RunResult replay(const Scenario& scenario, SchedulerKind kind, const std::vector<Packet>& arrivals);

/// Same loop over a caller-built scheduler (flows already added).
RunResult replay(WfqScheduler& scheduler, const std::vector<Packet>& arrivals, Seconds duration);

/// generate_arrivals + replay with the scenario's own scheduler.
RunResult run(const Scenario& scenario);

}  // namespace jqsim

#endif
