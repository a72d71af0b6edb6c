#ifndef JQSIM_WFQ_HPP
#define JQSIM_WFQ_HPP

#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string_view>
#include <tuple>

#include "jqsim/core_model.hpp"
#include "jqsim/gps_fluid.hpp"

namespace jqsim {

struct QueuedPacket {
    Packet packet;
    Timestamps tags;
};

inline constexpr std::uint64_t kUnlimitedBuffer = std::numeric_limits<std::uint64_t>::max();

/*
 * Packetized WFQ over a single shared tail-drop buffer.
 *
 * On arrival a packet of flow i is stamped
 *     S = max(F_prev(i), V(a)),   F = S + L / w_i
 * with V taken from an internal GPS fluid clock fed the same admitted
 * packets, and the link is offered the queued packet with the smallest
 * (F, flow id, seq). Tags are computed once and never revised. Flow finish
 * tags restart from zero with the fluid clock at each busy-period start.
 */
class WfqScheduler {
public:
    explicit WfqScheduler(double link_rate, std::uint64_t buffer_capacity = kUnlimitedBuffer);
    virtual ~WfqScheduler() = default;

    WfqScheduler(const WfqScheduler&) = delete;
    WfqScheduler& operator=(const WfqScheduler&) = delete;

    void add_flow(FlowId flow, double weight);

    /// Stamp and queue `p`. Returns nullopt if the shared buffer cannot hold it
    /// (tail drop). Throws std::invalid_argument on an unknown flow or an
    /// arrival earlier than the previous one.
    std::optional<Timestamps> enqueue(const Packet& p);

    /// Remove the packet with the smallest (finish, flow, seq), if any.
    std::optional<QueuedPacket> dequeue(Seconds now);

    std::uint64_t backlog(FlowId flow) const;
    std::uint64_t total_backlog() const { return total_backlog_; }
    std::size_t queued_packets() const { return queue_.size(); }
    bool empty() const { return queue_.empty(); }

    const FlowState& flow_state(FlowId flow) const;
    const FluidSystem& fluid() const { return fluid_; }
    double link_rate() const { return link_rate_; }
    std::uint64_t buffer_capacity() const { return buffer_capacity_; }

    virtual std::string_view name() const { return "wfq"; }

protected:
    /// Plain WFQ tags for `p` given the flow's state and V at arrival.
    static Timestamps wfq_tags(const Packet& p, const FlowState& flow, VirtualTime arrival_v);

    virtual Timestamps stamp(const Packet& p, const FlowState& flow, VirtualTime arrival_v);
    virtual void on_arrival(const Packet&) {}
    virtual void before_stamp(const Packet&) {}
    virtual void after_dequeue(Seconds) {}
    virtual void on_drop(const Packet&) {}

private:
    FlowState& mutable_flow(FlowId flow);

    using Key = std::tuple<double, std::uint32_t, std::uint64_t>;

    double link_rate_;
    std::uint64_t buffer_capacity_;
    FluidSystem fluid_;
    std::map<FlowId, FlowState> flows_;
    std::map<Key, QueuedPacket> queue_;
    std::uint64_t total_backlog_ = 0;
    Seconds last_arrival_ = 0.0;
};

}  // namespace jqsim

#endif
