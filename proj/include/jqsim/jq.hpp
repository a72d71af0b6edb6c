#ifndef JQSIM_JQ_HPP
#define JQSIM_JQ_HPP

#include <map>
#include <optional>

#include "jqsim/classify.hpp"
#include "jqsim/wfq.hpp"

namespace jqsim {

struct JqConfig {
    double delta_v = 10.0;          ///< virtual-time units per flow-level step
    std::uint64_t beta_bytes = 500; ///< penalty bytes per user-level step
    double high_watermark = 0.8;    ///< fraction of buffer_capacity
    double low_watermark = 0.5;
    std::uint64_t buffer_capacity = 0;

    /// Throws std::invalid_argument naming the offending field.
    void validate() const;
};

struct CongestionState {
    bool congested = false;
    std::optional<Seconds> since;
};

/// (flow_level - 1) * delta_v; throws for a level outside 1..4.
double fl_offset(int flow_level, const JqConfig& cfg);

/// user_level * beta_bytes; throws for a negative level.
std::uint64_t usr_penalty(int user_level, const JqConfig& cfg);

/// Backlog hysteresis: enter above high_watermark * capacity, leave below
/// low_watermark * capacity, hold in between.
CongestionState update_congestion(const CongestionState& prev, std::uint64_t total_backlog_bytes,
                                  const JqConfig& cfg, Seconds now = 0.0);

/*
 * Just Queueing.
 *
 * Uncongested arrivals get WFQ tags. While congested,
 *     S = max(F_prev, V(a)) + fl_offset(flow level)
 *     F = S + (L + usr_penalty(user level)) / w
 * so bulk classes and greedy users absorb the delay. Flow level comes from
 * the packet ToS byte, user level from a GreedyEstimator fed every arrival
 * (dropped ones included).
 */
class JqScheduler final : public WfqScheduler {
public:
    JqScheduler(double link_rate, JqConfig cfg, EstimatorConfig estimator = {});

    const JqConfig& config() const { return cfg_; }
    const CongestionState& congestion() const { return congestion_; }
    const GreedyEstimator& estimator() const { return estimator_; }

    /// Pin a user's level, bypassing the estimator.
    void set_user_level_override(UserId user, int level);
    int user_level(UserId user) const;

    std::string_view name() const override { return "jq"; }

private:
    Timestamps stamp(const Packet& p, const FlowState& flow, VirtualTime arrival_v) override;
    void on_arrival(const Packet& p) override;
    void before_stamp(const Packet& p) override;
    void after_dequeue(Seconds now) override;
    void on_drop(const Packet& p) override;

    JqConfig cfg_;
    GreedyEstimator estimator_;
    CongestionState congestion_;
    std::map<UserId, int> overrides_;
};

}  // namespace jqsim

#endif
