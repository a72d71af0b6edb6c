#include "jqsim/core_model.hpp"

#include <cmath>
#include <limits>

namespace jqsim {

int dscp_to_flow_level(std::uint8_t tos) noexcept
{
    const unsigned dscp = tos >> 2;
    switch (dscp >> 3) {
    case 5:
    case 6:
    case 7:
        return 1;
    case 4:
    case 3:
        return 2;
    case 2:
    case 1:
        return 3;
    default:
        return 4;
    }
}

Packet PacketFactory::make_packet(FlowId flow, UserId user, std::int64_t length, std::uint8_t tos,
                                  Seconds arrival)
{
    if (length < 1 || length > std::numeric_limits<std::uint32_t>::max())
        throw std::invalid_argument("packet length must be in [1, 2^32): got " +
                                    std::to_string(length));
    if (!std::isfinite(arrival) || arrival < 0.0)
        throw std::invalid_argument("packet arrival must be a finite non-negative time");

    Packet p;
    p.seq = ++next_seq_[flow];
    p.flow = flow;
    p.user = user;
    p.length = static_cast<std::uint32_t>(length);
    p.tos = tos;
    p.arrival = arrival;
    return p;
}

std::uint64_t PacketFactory::issued(FlowId flow) const
{
    auto it = next_seq_.find(flow);
    return it == next_seq_.end() ? 0 : it->second;
}

}  // namespace jqsim
