#include "jqsim/gps_fluid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace jqsim {

FluidSystem::FluidSystem(double link_rate, bool track_completions)
    : link_rate_(link_rate), track_completions_(track_completions)
{
    if (!(link_rate > 0.0) || !std::isfinite(link_rate))
        throw std::invalid_argument("fluid link rate must be positive");
}

void FluidSystem::add_flow(FlowId id, double weight)
{
    if (!(weight > 0.0) || !std::isfinite(weight))
        throw std::invalid_argument("flow " + std::to_string(id.value) + ": weight must be positive");
    if (!flows_.try_emplace(id, Flow{weight, {}, 0.0, 0.0, {}}).second)
        throw std::invalid_argument("flow " + std::to_string(id.value) + " registered twice");
}

const FluidSystem::Flow& FluidSystem::flow(FlowId id) const
{
    auto it = flows_.find(id);
    if (it == flows_.end())
        throw std::invalid_argument("unknown flow " + std::to_string(id.value));
    return it->second;
}

FluidSystem::Ingested FluidSystem::ingest(const Packet& p, std::size_t index)
{
    auto it = flows_.find(p.flow);
    if (it == flows_.end())
        throw std::invalid_argument("unknown flow " + std::to_string(p.flow.value));
    if (p.arrival < t_now_)
        throw std::invalid_argument("out-of-order arrival at t=" + std::to_string(p.arrival));

    advance(p.arrival);

    Ingested out;
    // An arrival coinciding with the instant the system empties belongs to the
    // busy period that is ending.
    if (idle() && idle_since_ < p.arrival) {
        v_now_ = VirtualTime{};
        for (auto& [id, f] : flows_)
            f.finish = VirtualTime{};
        ++busy_periods_;
        out.new_busy_period = true;
    }

    Flow& f = it->second;
    out.arrival_v = v_now_;
    f.finish = max(f.finish, v_now_) + static_cast<double>(p.length) / f.weight;
    f.ingested += p.length;
    out.finish_v = f.finish;
    if (track_completions_)
        f.pending.push_back({f.finish, index});
    return out;
}

VirtualTime FluidSystem::virtual_time_at(Seconds t)
{
    if (t < t_now_)
        throw std::invalid_argument("non-monotone virtual time query");
    advance(t);
    return v_now_;
}

void FluidSystem::drain()
{
    advance(std::numeric_limits<Seconds>::infinity());
}

std::vector<FluidSystem::Completion> FluidSystem::take_completions()
{
    std::vector<Completion> out;
    out.swap(completions_);
    return out;
}

void FluidSystem::advance(Seconds t)
{
    std::vector<FlowId> active;
    while (t_now_ < t) {
        active.clear();
        double weight_sum = 0.0;
        VirtualTime next_empty{std::numeric_limits<double>::infinity()};
        for (const auto& [id, f] : flows_) {
            if (f.finish > v_now_) {
                active.push_back(id);
                weight_sum += f.weight;
                next_empty = std::min(next_empty, f.finish);
            }
        }
        if (active.empty()) {
            if (std::isfinite(t))
                t_now_ = t;
            return;
        }

        const Seconds t_empty = t_now_ + (next_empty - v_now_) * weight_sum / link_rate_;
        if (t_empty <= t) {
            serve(next_empty, t_empty, weight_sum, active);
        } else {
            VirtualTime v_end = v_now_ + (t - t_now_) * link_rate_ / weight_sum;
            v_end = std::min(v_end, next_empty);
            serve(v_end, t, weight_sum, active);
        }
    }
}

void FluidSystem::serve(VirtualTime v_end, Seconds t_end, double weight_sum,
                        const std::vector<FlowId>& active)
{
    const VirtualTime v0 = v_now_;
    const Seconds t0 = t_now_;
    for (FlowId id : active) {
        Flow& f = flows_.at(id);
        f.served += f.weight * (v_end - v0);
        while (!f.pending.empty() && f.pending.front().finish <= v_end) {
            const Pending& done = f.pending.front();
            Seconds at = done.finish == v_end ? t_end
                                              : t0 + (done.finish - v0) * weight_sum / link_rate_;
            completions_.push_back({done.index, std::min(at, t_end)});
            f.pending.pop_front();
        }
    }
    v_now_ = v_end;
    t_now_ = t_end;
    if (idle())
        idle_since_ = t_end;
    if (segment_hook_)
        segment_hook_(Segment{t0, t_end, v0, v_end, active});
}

double FluidSystem::fluid_backlog(FlowId id) const
{
    const Flow& f = flow(id);
    return f.finish > v_now_ ? f.weight * (f.finish - v_now_) : 0.0;
}

double FluidSystem::served_bytes(FlowId id) const { return flow(id).served; }

double FluidSystem::ingested_bytes(FlowId id) const { return flow(id).ingested; }

std::vector<FlowId> FluidSystem::backlogged_set() const
{
    std::vector<FlowId> out;
    for (const auto& [id, f] : flows_)
        if (f.finish > v_now_)
            out.push_back(id);
    return out;
}

bool FluidSystem::idle() const
{
    return std::none_of(flows_.begin(), flows_.end(),
                        [this](const auto& kv) { return kv.second.finish > v_now_; });
}

std::vector<Seconds> gps_finish_times(std::span<const Packet> trace,
                                      const std::map<FlowId, double>& weights, double link_rate)
{
    FluidSystem fluid(link_rate, true);
    for (const auto& [id, w] : weights)
        fluid.add_flow(id, w);

    std::vector<Seconds> finish(trace.size(), 0.0);
    for (std::size_t i = 0; i < trace.size(); ++i) {
        if (i > 0 && trace[i].arrival < trace[i - 1].arrival)
            throw std::invalid_argument("trace not sorted by arrival at index " + std::to_string(i));
        fluid.ingest(trace[i], i);
    }
    fluid.drain();
    for (const auto& c : fluid.take_completions())
        finish[c.index] = c.finish;
    return finish;
}

}  // namespace jqsim
