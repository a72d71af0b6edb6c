#include <doctest.h>

#include <algorithm>

#include "fluid_oracle.hpp"
#include "jqsim/simcore.hpp"
#include "jqsim/wfq.hpp"

using namespace jqsim;

namespace {

Packet pkt(std::uint32_t flow, std::uint32_t len, double t, std::uint64_t seq = 1)
{
    Packet p;
    p.flow = FlowId{flow};
    p.user = UserId{flow};
    p.length = len;
    p.arrival = t;
    p.seq = seq;
    return p;
}

}  // namespace

TEST_CASE("enqueue tag examples")
{
    SUBCASE("idle system")
    {
        WfqScheduler s(100.0);
        s.add_flow(FlowId{1}, 1.0);
        const auto ts = s.enqueue(pkt(1, 100, 0.0));
        REQUIRE(ts);
        CHECK(ts->start.units == 0.0);
        CHECK(ts->finish.units == 100.0);
    }
    SUBCASE("backlogged flow starts at its previous finish")
    {
        WfqScheduler s(100.0);
        s.add_flow(FlowId{1}, 1.0);
        s.enqueue(pkt(1, 100, 0.0));
        const auto ts = s.enqueue(pkt(1, 50, 0.3, 2));  // V(0.3) = 30
        REQUIRE(ts);
        CHECK(ts->start.units == doctest::Approx(100.0));
        CHECK(ts->finish.units == doctest::Approx(150.0));
        CHECK(s.flow_state(FlowId{1}).last_finish.units == doctest::Approx(150.0));
    }
    SUBCASE("weight three")
    {
        WfqScheduler s(100.0);
        s.add_flow(FlowId{1}, 3.0);
        const auto ts = s.enqueue(pkt(1, 300, 0.0));
        CHECK(ts->start.units == 0.0);
        CHECK(ts->finish.units == 100.0);
    }
}

TEST_CASE("dequeue order")
{
    SUBCASE("smallest finish wins")
    {
        WfqScheduler s(100.0);
        s.add_flow(FlowId{1}, 1.0);
        s.add_flow(FlowId{2}, 1.0);
        s.enqueue(pkt(2, 300, 0.0));
        s.enqueue(pkt(1, 100, 0.0));
        CHECK(s.dequeue(0.0)->packet.flow == FlowId{1});
    }
    SUBCASE("ties go to the lower flow id")
    {
        WfqScheduler s(100.0);
        s.add_flow(FlowId{1}, 1.0);
        s.add_flow(FlowId{2}, 1.0);
        s.enqueue(pkt(2, 100, 0.0));
        s.enqueue(pkt(1, 100, 0.0));
        CHECK(s.dequeue(0.0)->packet.flow == FlowId{1});
        CHECK(s.dequeue(1.0)->packet.flow == FlowId{2});
        CHECK_FALSE(s.dequeue(2.0));
    }
    SUBCASE("two back-to-back packets against one large one")
    {
        WfqScheduler s(100.0);
        s.add_flow(FlowId{1}, 1.0);
        s.add_flow(FlowId{2}, 1.0);
        s.enqueue(pkt(1, 100, 0.0, 1));
        s.enqueue(pkt(1, 100, 0.0, 2));
        s.enqueue(pkt(2, 300, 0.0, 1));
        const auto a = s.dequeue(0.0);
        const auto b = s.dequeue(1.0);
        const auto c = s.dequeue(2.0);
        CHECK(a->packet.seq == 1);
        CHECK(a->tags.finish.units == 100.0);
        CHECK(b->packet.flow == FlowId{1});
        CHECK(b->tags.finish.units == 200.0);
        CHECK(c->packet.flow == FlowId{2});
        CHECK(c->tags.finish.units == 300.0);

        // the fluid reference finishes them in the same order
        const auto gps = gps_finish_times(
            std::vector<Packet>{pkt(1, 100, 0.0, 1), pkt(1, 100, 0.0, 2), pkt(2, 300, 0.0, 1)},
            {{FlowId{1}, 1.0}, {FlowId{2}, 1.0}}, 100.0);
        CHECK(gps[0] < gps[1]);
        CHECK(gps[1] < gps[2]);
    }
}

TEST_CASE("backlog accounting")
{
    WfqScheduler s(100.0);
    s.add_flow(FlowId{1}, 1.0);
    CHECK(s.backlog(FlowId{1}) == 0);
    s.enqueue(pkt(1, 100, 0.0));
    CHECK(s.backlog(FlowId{1}) == 100);
    CHECK(s.total_backlog() == 100);
    s.dequeue(0.0);
    CHECK(s.backlog(FlowId{1}) == 0);
    CHECK(s.empty());
}

TEST_CASE("shared buffer tail drop")
{
    WfqScheduler s(100.0, 250);
    s.add_flow(FlowId{1}, 1.0);
    s.add_flow(FlowId{2}, 1.0);
    CHECK(s.enqueue(pkt(1, 100, 0.0)));
    CHECK(s.enqueue(pkt(2, 100, 0.0)));
    CHECK_FALSE(s.enqueue(pkt(1, 100, 0.0, 2)));
    CHECK(s.total_backlog() == 200);
    CHECK(s.enqueue(pkt(2, 50, 0.0, 2)));
    CHECK(s.total_backlog() == 250);
    // a dropped packet leaves the flow's tag untouched
    CHECK(s.flow_state(FlowId{1}).last_finish.units == 100.0);
}

TEST_CASE("enqueue errors")
{
    WfqScheduler s(100.0);
    s.add_flow(FlowId{1}, 1.0);
    CHECK_THROWS_AS(s.add_flow(FlowId{1}, 2.0), std::invalid_argument);
    CHECK_THROWS_AS(s.add_flow(FlowId{3}, -1.0), std::invalid_argument);
    CHECK_THROWS_AS(s.enqueue(pkt(2, 10, 0.0)), std::invalid_argument);
    s.enqueue(pkt(1, 10, 1.0));
    CHECK_THROWS_AS(s.enqueue(pkt(1, 10, 0.5, 2)), std::invalid_argument);
    CHECK_THROWS_AS(s.flow_state(FlowId{9}), std::invalid_argument);
}

TEST_CASE("a new busy period restarts the tags")
{
    WfqScheduler s(100.0);
    s.add_flow(FlowId{1}, 1.0);
    s.enqueue(pkt(1, 100, 0.0));
    s.dequeue(0.0);
    const auto ts = s.enqueue(pkt(1, 100, 5.0, 2));
    CHECK(ts->start.units == 0.0);
    CHECK(ts->finish.units == 100.0);
}

TEST_CASE("flow level follows the packet ToS")
{
    WfqScheduler s(100.0);
    s.add_flow(FlowId{1}, 1.0);
    Packet p = pkt(1, 10, 0.0);
    p.tos = 0xB8;
    s.enqueue(p);
    CHECK(s.flow_state(FlowId{1}).flow_level == 1);
}

namespace {

struct Departure {
    Packet packet;
    Seconds at;  // end of transmission
    Timestamps tags;
};

std::vector<Departure> serve_all(WfqScheduler& s, const std::vector<Packet>& packets)
{
    const RunResult r = replay(s, packets, std::numeric_limits<double>::infinity());
    std::map<std::pair<std::uint32_t, std::uint64_t>, const Packet*> by_key;
    for (const Packet& p : packets)
        by_key[{p.flow.value, p.seq}] = &p;
    std::vector<Departure> out;
    for (const TraceEvent& e : r.events)
        if (e.kind == EventKind::dequeue)
            out.push_back({*by_key.at({e.flow.value, e.seq}), e.time + e.length / s.link_rate(), *e.tags});
    return out;
}

}  // namespace

TEST_CASE("per-flow FIFO and ordered tags on random traces")
{
    for (unsigned seed = 1; seed <= 80; ++seed) {
        const auto rt = oracle::random_trace(seed, 5, 150);
        WfqScheduler s(rt.link_rate);
        for (const auto& [id, w] : rt.weights)
            s.add_flow(id, w);
        const auto deps = serve_all(s, rt.packets);
        CHECK(deps.size() == rt.packets.size());
        std::map<FlowId, std::uint64_t> last_seq;
        double clock = 0.0;
        for (const Departure& d : deps) {
            CHECK(d.packet.seq > last_seq[d.packet.flow]);
            last_seq[d.packet.flow] = d.packet.seq;
            CHECK(d.at >= clock);
            clock = d.at;
            CHECK(d.tags.start.units <= d.tags.finish.units);
        }
    }
}

TEST_CASE("departures stay within one maximum packet time of the fluid reference")
{
    for (unsigned seed = 1; seed <= 80; ++seed) {
        const auto rt = oracle::random_trace(seed, 5, 150);
        WfqScheduler s(rt.link_rate);
        for (const auto& [id, w] : rt.weights)
            s.add_flow(id, w);
        const auto deps = serve_all(s, rt.packets);
        const auto ref = oracle::simulate_gps(rt.packets, rt.weights, rt.link_rate);
        std::uint32_t lmax = 0;
        std::map<std::pair<std::uint32_t, std::uint64_t>, double> gps;
        for (std::size_t i = 0; i < rt.packets.size(); ++i) {
            lmax = std::max(lmax, rt.packets[i].length);
            gps[{rt.packets[i].flow.value, rt.packets[i].seq}] = ref.finish[i];
        }
        for (const Departure& d : deps)
            CHECK(d.at <= gps.at({d.packet.flow.value, d.packet.seq}) + lmax / rt.link_rate + 1e-9);
    }
}
