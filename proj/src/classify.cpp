#include "jqsim/classify.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace jqsim {

void EstimatorConfig::validate() const
{
    if (!(halflife > 0.0) || !std::isfinite(halflife))
        throw std::invalid_argument("halflife must be positive");
    if (max_user_level < 0)
        throw std::invalid_argument("max_user_level must be non-negative");
    if (!(activity_halflives > 0.0))
        throw std::invalid_argument("activity_halflives must be positive");
}

int quantize_user_level(double ratio, int max_level)
{
    if (!(ratio >= 0.0))
        return 0;
    const double level = std::floor(ratio) - 1.0;
    return static_cast<int>(std::clamp(level, 0.0, static_cast<double>(max_level)));
}

GreedyEstimator::GreedyEstimator(double link_rate, EstimatorConfig config)
    : link_rate_(link_rate), config_(config)
{
    if (!(link_rate > 0.0))
        throw std::invalid_argument("estimator link rate must be positive");
    config_.validate();
}

void GreedyEstimator::observe(UserId user, std::uint64_t bytes, Seconds now)
{
    const double k = std::numbers::ln2 / config_.halflife;
    auto [it, fresh] = users_.try_emplace(user);
    Entry& e = it->second;
    if (fresh) {
        e.rate = static_cast<double>(bytes) * k;
    } else {
        const Seconds dt = now - e.last_update;
        if (dt < 0.0)
            throw std::invalid_argument("user " + std::to_string(user.value) +
                                        ": observation time went backwards");
        if (dt == 0.0) {
            e.rate += static_cast<double>(bytes) * k;
        } else {
            const double keep = std::exp2(-dt / config_.halflife);
            // (1 - keep) / dt, accurate for small dt
            const double gain = -std::expm1(-dt * k) / dt;
            e.rate = keep * e.rate + gain * static_cast<double>(bytes);
        }
    }
    e.last_update = now;
    latest_ = std::max(latest_, now);
}

double GreedyEstimator::ewma_rate(UserId user) const
{
    auto it = users_.find(user);
    return it == users_.end() ? 0.0 : it->second.rate;
}

double GreedyEstimator::rate_at(UserId user, Seconds now) const
{
    auto it = users_.find(user);
    if (it == users_.end())
        return 0.0;
    const Seconds dt = std::max(0.0, now - it->second.last_update);
    return it->second.rate * std::exp2(-dt / config_.halflife);
}

std::size_t GreedyEstimator::active_users() const
{
    const Seconds horizon = config_.activity_halflives * config_.halflife;
    return static_cast<std::size_t>(std::count_if(users_.begin(), users_.end(), [&](const auto& kv) {
        return latest_ - kv.second.last_update <= horizon;
    }));
}

double GreedyEstimator::fair_share() const
{
    const std::size_t n = active_users();
    return link_rate_ / static_cast<double>(std::max<std::size_t>(n, 1));
}

int GreedyEstimator::user_level(UserId user) const
{
    auto it = users_.find(user);
    if (it == users_.end())
        return 0;
    return quantize_user_level(it->second.rate / fair_share(), config_.max_user_level);
}

UserState GreedyEstimator::state(UserId user) const
{
    return UserState{user, ewma_rate(user), user_level(user)};
}

std::map<UserId, UserState> session_aggregation(std::span<const Packet> packets, double link_rate,
                                                const EstimatorConfig& config)
{
    GreedyEstimator est(link_rate, config);
    for (const Packet& p : packets)
        est.observe(p.user, p.length, p.arrival);
    std::map<UserId, UserState> out;
    for (const Packet& p : packets)
        out.try_emplace(p.user, est.state(p.user));
    return out;
}

}  // namespace jqsim
