#include "jqsim/jq.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace jqsim {

void JqConfig::validate() const
{
    if (!(delta_v >= 0.0) || !std::isfinite(delta_v))
        throw std::invalid_argument("delta_v must be a finite non-negative number");
    if (!(high_watermark > 0.0 && high_watermark <= 1.0))
        throw std::invalid_argument("high_watermark must be in (0, 1]");
    if (!(low_watermark >= 0.0 && low_watermark < high_watermark))
        throw std::invalid_argument("low_watermark must be in [0, high_watermark)");
    if (buffer_capacity == 0)
        throw std::invalid_argument("buffer_capacity must be positive");
}

double fl_offset(int flow_level, const JqConfig& cfg)
{
    if (flow_level < kMinFlowLevel || flow_level > kMaxFlowLevel)
        throw std::invalid_argument("flow level out of range: " + std::to_string(flow_level));
    return (flow_level - 1) * cfg.delta_v;
}

std::uint64_t usr_penalty(int user_level, const JqConfig& cfg)
{
    if (user_level < 0)
        throw std::invalid_argument("negative user level: " + std::to_string(user_level));
    return static_cast<std::uint64_t>(user_level) * cfg.beta_bytes;
}

CongestionState update_congestion(const CongestionState& prev, std::uint64_t total_backlog_bytes,
                                  const JqConfig& cfg, Seconds now)
{
    const double backlog = static_cast<double>(total_backlog_bytes);
    const double capacity = static_cast<double>(cfg.buffer_capacity);
    CongestionState next = prev;
    if (!prev.congested && backlog > cfg.high_watermark * capacity) {
        next.congested = true;
        next.since = now;
    } else if (prev.congested && backlog < cfg.low_watermark * capacity) {
        next.congested = false;
        next.since.reset();
    }
    return next;
}

JqScheduler::JqScheduler(double link_rate, JqConfig cfg, EstimatorConfig estimator)
    : WfqScheduler(link_rate, cfg.buffer_capacity), cfg_(cfg), estimator_(link_rate, estimator)
{
    cfg_.validate();
}

void JqScheduler::set_user_level_override(UserId user, int level)
{
    if (level < 0)
        throw std::invalid_argument("negative user level override");
    overrides_[user] = level;
}

int JqScheduler::user_level(UserId user) const
{
    auto it = overrides_.find(user);
    return it != overrides_.end() ? it->second : estimator_.user_level(user);
}

void JqScheduler::on_arrival(const Packet& p)
{
    estimator_.observe(p.user, p.length, p.arrival);
}

void JqScheduler::on_drop(const Packet& p)
{
    congestion_ = update_congestion(congestion_, total_backlog(), cfg_, p.arrival);
}

void JqScheduler::before_stamp(const Packet& p)
{
    congestion_ = update_congestion(congestion_, total_backlog() + p.length, cfg_, p.arrival);
}

void JqScheduler::after_dequeue(Seconds now)
{
    congestion_ = update_congestion(congestion_, total_backlog(), cfg_, now);
}

Timestamps JqScheduler::stamp(const Packet& p, const FlowState& flow, VirtualTime arrival_v)
{
    if (!congestion_.congested)
        return wfq_tags(p, flow, arrival_v);

    Timestamps ts;
    ts.start = max(flow.last_finish, arrival_v) + fl_offset(flow.flow_level, cfg_);
    const double charged = static_cast<double>(p.length) +
                           static_cast<double>(usr_penalty(user_level(p.user), cfg_));
    ts.finish = ts.start + charged / flow.weight;
    return ts;
}

}  // namespace jqsim
