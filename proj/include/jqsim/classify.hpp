#ifndef JQSIM_CLASSIFY_HPP
#define JQSIM_CLASSIFY_HPP

#include <map>
#include <span>

#include "jqsim/core_model.hpp"

namespace jqsim {

struct EstimatorConfig {
    Seconds halflife = 1.0;
    int max_user_level = 4;
    /// A user counts toward the fair-share divisor while its last packet is
    /// at most this many half-lives older than the newest observation.
    double activity_halflives = 4.0;

    void validate() const;
};

/// clamp(floor(ratio) - 1, 0, max_level), where ratio = user rate / fair share.
int quantize_user_level(double ratio, int max_level);

/*
 * Per-user arrival-rate estimator used to grade greediness.
 *
 * Rates follow an exponentially weighted average with base-2 half-life h:
 *     w = 2^(-dt/h),   rate <- w * rate + (1 - w) * bytes / dt
 * which settles at exactly L/T for a steady stream of L bytes every T
 * seconds. The dt -> 0 limit, bytes * ln2 / h, is used for back-to-back
 * packets and for a user's first packet. Accounting is keyed by user, so
 * spreading traffic across more flows leaves the estimate unchanged.
 */
class GreedyEstimator {
public:
    GreedyEstimator(double link_rate, EstimatorConfig config = {});

    /// Throws std::invalid_argument if `now` precedes this user's last update.
    void observe(UserId user, std::uint64_t bytes, Seconds now);

    /// Rate as of the user's last observation; 0 for an unseen user.
    double ewma_rate(UserId user) const;
    /// Rate decayed, without new bytes, to `now`.
    double rate_at(UserId user, Seconds now) const;

    /// link_rate / number of currently active users.
    double fair_share() const;
    std::size_t active_users() const;

    /// 0 for a user that was never observed.
    int user_level(UserId user) const;
    UserState state(UserId user) const;

    const EstimatorConfig& config() const { return config_; }

private:
    struct Entry {
        double rate = 0.0;
        Seconds last_update = 0.0;
    };

    double link_rate_;
    EstimatorConfig config_;
    Seconds latest_ = 0.0;
    std::map<UserId, Entry> users_;
};

/// Feed every packet (sorted by arrival) to a fresh estimator and report the
/// resulting per-user state.
std::map<UserId, UserState> session_aggregation(std::span<const Packet> packets, double link_rate,
                                                const EstimatorConfig& config = {});

}  // namespace jqsim

#endif
