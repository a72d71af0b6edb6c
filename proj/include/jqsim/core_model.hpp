#ifndef JQSIM_CORE_MODEL_HPP
#define JQSIM_CORE_MODEL_HPP

#include <compare>
#include <cstdint>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>

namespace jqsim {

/// Real (wall) simulation time, in seconds.
using Seconds = double;

template <class Tag>
struct Id {
    std::uint32_t value = 0;
    friend auto operator<=>(const Id&, const Id&) = default;
};

struct FlowTag;
struct UserTag;
using FlowId = Id<FlowTag>;
using UserId = Id<UserTag>;

/// Virtual time in dimensionless service units (bytes per unit weight).
/// Kept distinct from Seconds so the two clocks cannot be mixed by accident.
struct VirtualTime {
    double units = 0.0;

    friend auto operator<=>(const VirtualTime&, const VirtualTime&) = default;
    friend VirtualTime operator+(VirtualTime v, double service) { return {v.units + service}; }
    friend double operator-(VirtualTime a, VirtualTime b) { return a.units - b.units; }
};

inline VirtualTime max(VirtualTime a, VirtualTime b) { return a < b ? b : a; }

struct Packet {
    std::uint64_t seq = 0;
    FlowId flow;
    UserId user;
    std::uint32_t length = 0;  // bytes
    std::uint8_t tos = 0;
    Seconds arrival = 0.0;
};

struct Timestamps {
    VirtualTime start;
    VirtualTime finish;
    friend bool operator==(const Timestamps&, const Timestamps&) = default;
};

struct FlowState {
    FlowId flow;
    double weight = 1.0;
    VirtualTime last_finish;
    std::uint64_t backlog_bytes = 0;
    int flow_level = 4;
};

struct UserState {
    UserId user;
    double ewma_rate = 0.0;  // bytes/second
    int user_level = 0;
};

/// Delay-sensitivity class of a ToS / Traffic Class byte, 1 (voice) .. 4 (bulk).
///
/// Classification uses the DSCP (upper six bits) precedence group:
/// EF and the other precedence-5 code points, plus network control
/// (precedence 6 and 7), are level 1; AF4x/AF3x (precedence 4, 3) are
/// level 2; AF2x/AF1x (precedence 2, 1) are level 3; the default class is 4.
int dscp_to_flow_level(std::uint8_t tos) noexcept;

inline constexpr int kMinFlowLevel = 1;
inline constexpr int kMaxFlowLevel = 4;

/// Hands out packets with strictly increasing per-flow sequence numbers,
/// starting at 1.
class PacketFactory {
public:
    /// Throws std::invalid_argument for length < 1, a length that does not
    /// fit in 32 bits, or a negative / non-finite arrival time.
    Packet make_packet(FlowId flow, UserId user, std::int64_t length, std::uint8_t tos,
                       Seconds arrival);

    std::uint64_t issued(FlowId flow) const;

private:
    std::map<FlowId, std::uint64_t> next_seq_;
};

}  // namespace jqsim

template <class Tag>
struct std::hash<jqsim::Id<Tag>> {
    std::size_t operator()(const jqsim::Id<Tag>& id) const noexcept
    {
        return std::hash<std::uint32_t>{}(id.value);
    }
};

#endif
