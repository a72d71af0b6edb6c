#include <doctest.h>

#include "fluid_oracle.hpp"
#include "jqsim/jq.hpp"
#include "jqsim/simcore.hpp"
#include "jqsim/trace.hpp"

using namespace jqsim;

namespace {

Packet pkt(std::uint32_t flow, std::uint32_t len, double t, std::uint64_t seq = 1, std::uint8_t tos = 0)
{
    Packet p;
    p.flow = FlowId{flow};
    p.user = UserId{flow};
    p.length = len;
    p.arrival = t;
    p.seq = seq;
    p.tos = tos;
    return p;
}

// Congested from the first byte onward.
JqConfig eager(double delta_v = 10.0, std::uint64_t beta = 500)
{
    JqConfig c;
    c.delta_v = delta_v;
    c.beta_bytes = beta;
    c.buffer_capacity = 1'000'000;
    c.high_watermark = 1e-9;
    c.low_watermark = 0.0;
    return c;
}

// Never congested.
JqConfig never_congested()
{
    JqConfig c;
    c.buffer_capacity = std::uint64_t{1} << 50;
    c.high_watermark = 1.0;
    c.low_watermark = 0.5;
    return c;
}

}  // namespace

TEST_CASE("fl_offset")
{
    JqConfig c;
    CHECK(fl_offset(1, c) == 0.0);
    CHECK(fl_offset(4, c) == 30.0);
    c.delta_v = 0.0;
    for (int l = 1; l <= 4; ++l)
        CHECK(fl_offset(l, c) == 0.0);
    CHECK_THROWS_AS(fl_offset(0, c), std::invalid_argument);
    CHECK_THROWS_AS(fl_offset(5, c), std::invalid_argument);
}

TEST_CASE("usr_penalty")
{
    JqConfig c;
    CHECK(usr_penalty(0, c) == 0);
    CHECK(usr_penalty(2, c) == 1000);
    c.beta_bytes = 0;
    CHECK(usr_penalty(2, c) == 0);
    CHECK_THROWS_AS(usr_penalty(-1, c), std::invalid_argument);
}

TEST_CASE("congested tag examples")
{
    SUBCASE("bulk class pays the flow-level offset")
    {
        JqScheduler s(100.0, eager());
        s.add_flow(FlowId{1}, 1.0);
        s.set_user_level_override(UserId{1}, 0);
        const auto ts = s.enqueue(pkt(1, 100, 0.0, 1, 0x00));
        REQUIRE(s.congestion().congested);
        CHECK(ts->start.units == 30.0);
        CHECK(ts->finish.units == 130.0);
    }
    SUBCASE("voice from a greedy user pays only the user penalty")
    {
        JqScheduler s(100.0, eager());
        s.add_flow(FlowId{1}, 1.0);
        s.set_user_level_override(UserId{1}, 2);
        const auto ts = s.enqueue(pkt(1, 100, 0.0, 1, 0xB8));
        CHECK(ts->start.units == 0.0);
        CHECK(ts->finish.units == 1100.0);
    }
}

TEST_CASE("update_congestion hysteresis")
{
    JqConfig c;
    c.buffer_capacity = 1000;
    CHECK(update_congestion({false, {}}, 900, c, 1.0).congested);
    CHECK(update_congestion({false, {}}, 900, c, 1.0).since == 1.0);
    CHECK(update_congestion({true, 0.0}, 600, c).congested);
    CHECK_FALSE(update_congestion({true, 0.0}, 400, c).congested);
    CHECK_FALSE(update_congestion({false, {}}, 600, c).congested);
}

TEST_CASE("config validation")
{
    JqConfig c;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);  // no capacity
    c.buffer_capacity = 100;
    CHECK_NOTHROW(c.validate());
    c.low_watermark = 0.9;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c.low_watermark = 0.5;
    c.delta_v = -1.0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}

TEST_CASE("uncongested JQ stamps exactly like WFQ")
{
    for (unsigned seed = 1; seed <= 60; ++seed) {
        const auto rt = oracle::random_trace(seed, 5, 150);
        WfqScheduler w(rt.link_rate);
        JqScheduler j(rt.link_rate, never_congested());
        for (const auto& [id, wt] : rt.weights) {
            w.add_flow(id, wt);
            j.add_flow(id, wt);
        }
        const RunResult a = replay(w, rt.packets, 1e300);
        const RunResult b = replay(j, rt.packets, 1e300);
        CHECK_FALSE(j.congestion().congested);
        CHECK(format_records(a.events) == format_records(b.events));
    }
}

TEST_CASE("zero charges are neutral even while congested")
{
    for (unsigned seed = 1; seed <= 60; ++seed) {
        const auto rt = oracle::random_trace(seed, 5, 150);
        WfqScheduler w(rt.link_rate);
        JqScheduler j(rt.link_rate, eager(0.0, 0));
        for (const auto& [id, wt] : rt.weights) {
            w.add_flow(id, wt);
            j.add_flow(id, wt);
        }
        const RunResult a = replay(w, rt.packets, 1e300);
        const RunResult b = replay(j, rt.packets, 1e300);
        CHECK(format_records(a.events) == format_records(b.events));
    }
}

TEST_CASE("charged flows keep FIFO order")
{
    for (unsigned seed = 1; seed <= 40; ++seed) {
        auto rt = oracle::random_trace(seed, 5, 150);
        for (std::size_t i = 0; i < rt.packets.size(); ++i)
            rt.packets[i].tos = static_cast<std::uint8_t>((i * 37) & 0xFF);  // levels change mid-flow
        JqScheduler j(rt.link_rate, eager());
        for (const auto& [id, wt] : rt.weights)
            j.add_flow(id, wt);
        const RunResult r = replay(j, rt.packets, 1e300);
        std::map<std::uint32_t, std::uint64_t> last;
        for (const TraceEvent& e : r.events)
            if (e.kind == EventKind::dequeue) {
                CHECK(e.seq > last[e.flow.value]);
                last[e.flow.value] = e.seq;
            }
    }
}

TEST_CASE("raising a user's level never raises its departed bytes")
{
    for (unsigned seed = 1; seed <= 30; ++seed) {
        const auto rt = oracle::random_trace(seed, 4, 200);
        // a fixed horizon that leaves part of the offered load unserved
        double last = 0.0;
        for (const Packet& p : rt.packets)
            last = std::max(last, p.arrival);
        const double horizon = last * 0.6;
        const UserId target = rt.packets.front().user;

        std::uint64_t prev = std::numeric_limits<std::uint64_t>::max();
        for (int level = 0; level <= 4; ++level) {
            JqScheduler j(rt.link_rate, eager());
            for (const auto& [id, wt] : rt.weights)
                j.add_flow(id, wt);
            for (const auto& [id, wt] : rt.weights)
                j.set_user_level_override(UserId{id.value}, 0);
            j.set_user_level_override(target, level);
            const RunResult r = replay(j, rt.packets, horizon);
            std::uint64_t bytes = 0;
            for (const TraceEvent& e : r.events)
                if (e.kind == EventKind::dequeue && e.user == target)
                    bytes += e.length;
            CHECK(bytes <= prev);
            prev = bytes;
        }
    }
}

TEST_CASE("user levels come from the estimator unless overridden")
{
    JqScheduler j(1000.0, eager());
    j.add_flow(FlowId{1}, 1.0);
    j.add_flow(FlowId{2}, 1.0);
    for (int i = 0; i < 400; ++i) {
        j.enqueue(pkt(1, 40, i * 0.01, 2 * i + 1));  // 4000 B/s each on a 1000 B/s link
        j.enqueue(pkt(2, 40, i * 0.01, 2 * i + 2));
    }
    CHECK(j.user_level(UserId{1}) == j.estimator().user_level(UserId{1}));
    CHECK(j.user_level(UserId{1}) >= 2);
    j.set_user_level_override(UserId{1}, 0);
    CHECK(j.user_level(UserId{1}) == 0);
    CHECK_THROWS_AS(j.set_user_level_override(UserId{1}, -1), std::invalid_argument);
}
