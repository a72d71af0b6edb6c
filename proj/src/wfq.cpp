#include "jqsim/wfq.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace jqsim {

WfqScheduler::WfqScheduler(double link_rate, std::uint64_t buffer_capacity)
    : link_rate_(link_rate), buffer_capacity_(buffer_capacity), fluid_(link_rate)
{
}

void WfqScheduler::add_flow(FlowId flow, double weight)
{
    fluid_.add_flow(flow, weight);
    FlowState fs;
    fs.flow = flow;
    fs.weight = weight;
    flows_.emplace(flow, fs);
}

FlowState& WfqScheduler::mutable_flow(FlowId flow)
{
    auto it = flows_.find(flow);
    if (it == flows_.end())
        throw std::invalid_argument("unknown flow " + std::to_string(flow.value));
    return it->second;
}

const FlowState& WfqScheduler::flow_state(FlowId flow) const
{
    auto it = flows_.find(flow);
    if (it == flows_.end())
        throw std::invalid_argument("unknown flow " + std::to_string(flow.value));
    return it->second;
}

std::uint64_t WfqScheduler::backlog(FlowId flow) const { return flow_state(flow).backlog_bytes; }

Timestamps WfqScheduler::wfq_tags(const Packet& p, const FlowState& flow, VirtualTime arrival_v)
{
    Timestamps ts;
    ts.start = max(flow.last_finish, arrival_v);
    ts.finish = ts.start + static_cast<double>(p.length) / flow.weight;
    return ts;
}

Timestamps WfqScheduler::stamp(const Packet& p, const FlowState& flow, VirtualTime arrival_v)
{
    return wfq_tags(p, flow, arrival_v);
}

std::optional<Timestamps> WfqScheduler::enqueue(const Packet& p)
{
    FlowState& fs = mutable_flow(p.flow);
    if (p.arrival < last_arrival_)
        throw std::invalid_argument("non-monotone arrival at t=" + std::to_string(p.arrival));
    last_arrival_ = p.arrival;
    on_arrival(p);

    if (buffer_capacity_ - total_backlog_ < p.length) {
        on_drop(p);
        return std::nullopt;
    }

    const auto in = fluid_.ingest(p);
    // Queued packets keep their tags; restarting the flow tags under them
    // would let later packets overtake, so only restart on an empty queue.
    if (in.new_busy_period && queue_.empty())
        for (auto& [id, f] : flows_)
            f.last_finish = VirtualTime{};

    before_stamp(p);
    fs.flow_level = dscp_to_flow_level(p.tos);
    const Timestamps ts = stamp(p, fs, in.arrival_v);
    fs.last_finish = ts.finish;
    fs.backlog_bytes += p.length;
    total_backlog_ += p.length;
    queue_.emplace(Key{ts.finish.units, p.flow.value, p.seq}, QueuedPacket{p, ts});
    return ts;
}

std::optional<QueuedPacket> WfqScheduler::dequeue(Seconds now)
{
    if (queue_.empty())
        return std::nullopt;
    auto node = queue_.extract(queue_.begin());
    QueuedPacket out = std::move(node.mapped());
    FlowState& fs = mutable_flow(out.packet.flow);
    fs.backlog_bytes -= out.packet.length;
    total_backlog_ -= out.packet.length;
    after_dequeue(now);
    return out;
}

}  // namespace jqsim
