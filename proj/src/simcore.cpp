#include "jqsim/simcore.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "jqsim/jq.hpp"

namespace jqsim {

std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

std::string_view to_string(EventKind kind)
{
    switch (kind) {
    case EventKind::enqueue: return "enqueue";
    case EventKind::dequeue: return "dequeue";
    case EventKind::drop: return "drop";
    }
    return "?";
}

TrafficGenerator::TrafficGenerator(const FlowSpec& spec, Seconds duration, std::uint64_t stream_seed)
    : spec_(spec),
      stop_(std::min(spec.stop_or(duration), duration)),
      interval_(spec.generator.packet_size / spec.generator.rate),
      rng_(stream_seed),
      clock_(spec.start)
{
}

double TrafficGenerator::uniform()
{
    return static_cast<double>(rng_() >> 11) * 0x1.0p-53;
}

Seconds TrafficGenerator::exponential(Seconds mean)
{
    return -mean * std::log1p(-uniform());
}

std::optional<TrafficGenerator::Emission> TrafficGenerator::next_packet()
{
    const GeneratorSpec& g = spec_.generator;
    Seconds at = 0.0;
    FlowId flow = spec_.id;

    switch (g.kind) {
    case GeneratorKind::cbr:
        at = spec_.start + static_cast<double>(count_) * interval_;
        break;
    case GeneratorKind::poisson:
        clock_ += exponential(interval_);
        at = clock_;
        break;
    case GeneratorKind::onoff: {
        // count_ indexes packets within the current on period
        const Seconds cycle = g.on + g.off;
        const auto per_on = static_cast<std::uint64_t>(std::ceil(g.on / interval_));
        const std::uint64_t period = count_ / std::max<std::uint64_t>(per_on, 1);
        const std::uint64_t k = count_ % std::max<std::uint64_t>(per_on, 1);
        at = spec_.start + static_cast<double>(period) * cycle + static_cast<double>(k) * interval_;
        break;
    }
    case GeneratorKind::flood:
        clock_ += exponential(interval_);
        at = clock_;
        flow = FlowId{spec_.id.value + static_cast<std::uint32_t>(count_ % g.sessions)};
        break;
    }

    if (!(at < stop_))
        return std::nullopt;
    ++count_;
    return Emission{flow, at};
}

std::vector<Packet> generate_arrivals(const Scenario& sc)
{
    sc.validate();
    PacketFactory factory;
    std::vector<Packet> out;
    for (std::size_t i = 0; i < sc.flows.size(); ++i) {
        const FlowSpec& f = sc.flows[i];
        TrafficGenerator gen(f, sc.duration, splitmix64(sc.seed ^ (0x9E3779B97F4A7C15ULL * (i + 1))));
        while (auto e = gen.next_packet())
            out.push_back(factory.make_packet(e->flow, f.user, f.generator.packet_size, f.tos, e->at));
    }
    std::sort(out.begin(), out.end(), [](const Packet& a, const Packet& b) {
        return std::tie(a.arrival, a.flow, a.seq) < std::tie(b.arrival, b.flow, b.seq);
    });
    return out;
}

std::unique_ptr<WfqScheduler> make_scheduler(const Scenario& sc, SchedulerKind kind)
{
    std::unique_ptr<WfqScheduler> s;
    if (kind == SchedulerKind::jq)
        s = std::make_unique<JqScheduler>(sc.link_rate, sc.jq, sc.classify);
    else
        s = std::make_unique<WfqScheduler>(sc.link_rate, sc.buffer_capacity);
    for (const auto& [id, w] : sc.scheduler_flows())
        s->add_flow(id, w);
    return s;
}

RunResult replay(WfqScheduler& sched, const std::vector<Packet>& arrivals, Seconds duration)
{
    RunResult result;
    result.scheduler = sched.name() == "jq" ? SchedulerKind::jq : SchedulerKind::wfq;
    auto& events = result.events;
    events.reserve(arrivals.size() * 2);

    const double rate = sched.link_rate();
    constexpr Seconds never = std::numeric_limits<Seconds>::infinity();
    std::size_t next = 0;
    bool link_busy = false;
    Seconds link_free_at = 0.0;

    auto try_transmit = [&](Seconds now) {
        auto qp = sched.dequeue(now);
        if (!qp) {
            link_busy = false;
            return;
        }
        const Packet& p = qp->packet;
        events.push_back({EventKind::dequeue, now, p.flow, p.user, p.seq, p.length, qp->tags});
        link_busy = true;
        link_free_at = now + p.length / rate;
    };

    for (;;) {
        const Seconds t_arrival = next < arrivals.size() ? arrivals[next].arrival : never;
        const Seconds t_link = link_busy ? link_free_at : never;
        const Seconds now = std::min(t_arrival, t_link);
        if (now == never || !(now <= duration))
            break;

        while (next < arrivals.size() && arrivals[next].arrival == now) {
            const Packet& p = arrivals[next++];
            if (auto tags = sched.enqueue(p))
                events.push_back({EventKind::enqueue, now, p.flow, p.user, p.seq, p.length, *tags});
            else
                events.push_back({EventKind::drop, now, p.flow, p.user, p.seq, p.length, std::nullopt});
        }
        if (!link_busy || link_free_at == now)
            try_transmit(now);
    }

    result.residual_packets = sched.queued_packets();
    result.residual_bytes = sched.total_backlog();
    return result;
}

RunResult replay(const Scenario& sc, SchedulerKind kind, const std::vector<Packet>& arrivals)
{
    sc.validate();
    auto sched = make_scheduler(sc, kind);
    return replay(*sched, arrivals, sc.duration);
}

RunResult run(const Scenario& sc)
{
    return replay(sc, sc.scheduler, generate_arrivals(sc));
}

}  // namespace jqsim
