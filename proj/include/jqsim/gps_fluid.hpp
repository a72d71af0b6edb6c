#ifndef JQSIM_GPS_FLUID_HPP
#define JQSIM_GPS_FLUID_HPP

#include <deque>
#include <functional>
#include <limits>
#include <map>
#include <span>
#include <vector>

#include "jqsim/core_model.hpp"

namespace jqsim {

/*
 * Fluid Generalized Processor Sharing reference.
 *
 * Every backlogged flow i is served at link_rate * w_i / sum(w_backlogged),
 * so the system virtual time advances as dV/dt = link_rate / sum(w_backlogged).
 * A flow is fluid-backlogged exactly while V is below the virtual finish of its
 * last ingested packet, which makes both V and the per-flow backlogs exact
 * between events (arrivals and flow-empty instants). V holds while idle and
 * restarts from zero, together with every flow's finish tag, when the first
 * packet of a new busy period arrives.
 */
class FluidSystem {
public:
    struct Ingested {
        VirtualTime arrival_v;  ///< V(a) after any busy-period restart
        VirtualTime finish_v;   ///< GPS virtual finish of this packet
        bool new_busy_period = false;
    };

    /// One constant-rate stretch of fluid service between two events.
    struct Segment {
        Seconds t0 = 0, t1 = 0;
        VirtualTime v0, v1;
        std::vector<FlowId> active;
    };

    struct Completion {
        std::size_t index;  ///< caller-supplied packet index
        Seconds finish;
    };

    explicit FluidSystem(double link_rate, bool track_completions = false);

    void add_flow(FlowId flow, double weight);
    bool has_flow(FlowId flow) const { return flows_.contains(flow); }

    /// Advance to p.arrival and add p's bytes to its flow. `index` identifies the
    /// packet in completions. Throws on unknown flow or time regression.
    Ingested ingest(const Packet& p, std::size_t index = 0);

    /// Advance to `t` and return V(t). Queries must be monotone.
    VirtualTime virtual_time_at(Seconds t);

    /// Serve fluid until every backlog is empty.
    void drain();

    std::vector<Completion> take_completions();

    void on_segment(std::function<void(const Segment&)> hook) { segment_hook_ = std::move(hook); }

    double fluid_backlog(FlowId flow) const;
    double served_bytes(FlowId flow) const;
    double ingested_bytes(FlowId flow) const;
    std::vector<FlowId> backlogged_set() const;
    bool idle() const;

    Seconds t_now() const { return t_now_; }
    VirtualTime v_now() const { return v_now_; }
    double link_rate() const { return link_rate_; }
    std::uint64_t busy_periods() const { return busy_periods_; }

private:
    struct Pending {
        VirtualTime finish;
        std::size_t index;
    };
    struct Flow {
        double weight = 1.0;
        VirtualTime finish;
        double served = 0.0;
        double ingested = 0.0;
        std::deque<Pending> pending;
    };

    void advance(Seconds t);
    void serve(VirtualTime v_end, Seconds t_end, double weight_sum,
               const std::vector<FlowId>& active);
    const Flow& flow(FlowId id) const;

    double link_rate_;
    bool track_completions_;
    Seconds t_now_ = 0.0;
    Seconds idle_since_ = -std::numeric_limits<Seconds>::infinity();
    VirtualTime v_now_;
    std::uint64_t busy_periods_ = 0;
    std::map<FlowId, Flow> flows_;
    std::vector<Completion> completions_;
    std::function<void(const Segment&)> segment_hook_;
};

/// Exact GPS departure time of the last bit of every packet, in input order.
/// The trace must be sorted by arrival; every flow needs a weight.
std::vector<Seconds> gps_finish_times(std::span<const Packet> trace,
                                      const std::map<FlowId, double>& weights, double link_rate);

}  // namespace jqsim

#endif
