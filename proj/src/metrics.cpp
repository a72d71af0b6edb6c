#include "jqsim/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <tuple>

#include <fmt/format.h>

#include "jqsim/gps_fluid.hpp"

namespace jqsim {

double jain_index(std::span<const double> xs)
{
    if (xs.empty())
        throw std::invalid_argument("jain_index of an empty list");
    double sum = 0.0, sum_sq = 0.0;
    for (double x : xs) {
        if (!(x >= 0.0))
            throw std::invalid_argument("jain_index needs non-negative values");
        sum += x;
        sum_sq += x * x;
    }
    if (sum_sq == 0.0)
        throw std::invalid_argument("jain_index of an all-zero list");
    return sum * sum / (static_cast<double>(xs.size()) * sum_sq);
}

Window default_window(Seconds duration)
{
    return Window{0.1 * duration, 0.9 * duration};
}

double nearest_rank(std::span<const double> sorted, double q)
{
    if (sorted.empty())
        throw std::invalid_argument("percentile of an empty sample");
    const auto n = static_cast<double>(sorted.size());
    auto rank = static_cast<std::size_t>(std::ceil(q * n));
    rank = std::clamp<std::size_t>(rank, 1, sorted.size());
    return sorted[rank - 1];
}

namespace {

using PacketKey = std::pair<std::uint32_t, std::uint64_t>;

PacketKey key_of(const TraceEvent& e) { return {e.flow.value, e.seq}; }

}  // namespace

std::map<FlowId, FlowMetrics> flow_metrics(const Trace& trace, Window window)
{
    std::map<FlowId, FlowMetrics> out;
    std::map<FlowId, std::vector<double>> delays;
    std::map<PacketKey, Seconds> enqueued_at;
    std::map<FlowId, std::uint64_t> window_bytes;

    for (std::size_t i = 0; i < trace.events.size(); ++i) {
        const TraceEvent& e = trace.events[i];
        FlowMetrics& m = out[e.flow];
        m.flow = e.flow;
        m.user = e.user;
        switch (e.kind) {
        case EventKind::enqueue:
            enqueued_at[key_of(e)] = e.time;
            break;
        case EventKind::drop:
            ++m.drops;
            m.dropped_bytes += e.length;
            break;
        case EventKind::dequeue: {
            auto it = enqueued_at.find(key_of(e));
            if (it == enqueued_at.end())
                throw InputError(0, fmt::format("event {}: flow {} seq {} dequeued without enqueue",
                                                i + 1, e.flow.value, e.seq));
            delays[e.flow].push_back(e.time - it->second);
            enqueued_at.erase(it);
            m.departed_bytes += e.length;
            ++m.departed_packets;
            if (e.time >= window.begin && e.time < window.end)
                window_bytes[e.flow] += e.length;
            break;
        }
        }
    }

    for (auto& [id, m] : out) {
        if (window.length() > 0.0)
            m.throughput = static_cast<double>(window_bytes[id]) / window.length();
        auto it = delays.find(id);
        if (it == delays.end() || it->second.empty())
            continue;
        std::vector<double>& d = it->second;
        std::sort(d.begin(), d.end());
        DelayStats s;
        s.mean = std::accumulate(d.begin(), d.end(), 0.0) / static_cast<double>(d.size());
        s.p50 = nearest_rank(d, 0.50);
        s.p99 = nearest_rank(d, 0.99);
        s.max = d.back();
        m.delay = s;
    }
    return out;
}

std::map<UserId, UserTotals> user_totals(const Trace& trace)
{
    std::map<UserId, UserTotals> out;
    for (const TraceEvent& e : trace.events) {
        UserTotals& u = out[e.user];
        if (e.kind == EventKind::dequeue)
            u.departed_bytes += e.length;
        else
            u.offered_bytes += e.length;
    }
    return out;
}

double departed_share(const std::map<UserId, UserTotals>& totals, UserId user)
{
    std::uint64_t all = 0;
    for (const auto& [id, u] : totals)
        all += u.departed_bytes;
    auto it = totals.find(user);
    if (all == 0 || it == totals.end())
        return 0.0;
    return static_cast<double>(it->second.departed_bytes) / static_cast<double>(all);
}

GpsDiscrepancy gps_discrepancy(const Trace& trace, const Scenario& scenario)
{
    Scenario as_run = scenario;
    as_run.scheduler = trace.header.scheduler;
    if (scenario_hash(as_run) != trace.header.scenario_hash)
        throw InputError(0, fmt::format("trace scenario hash {:016x} does not match scenario {:016x}",
                                        trace.header.scenario_hash, scenario_hash(as_run)));

    std::vector<Packet> admitted;
    std::map<PacketKey, std::size_t> index;
    for (const TraceEvent& e : trace.events) {
        if (e.kind != EventKind::enqueue)
            continue;
        Packet p;
        p.flow = e.flow;
        p.user = e.user;
        p.seq = e.seq;
        p.length = e.length;
        p.arrival = e.time;
        index[key_of(e)] = admitted.size();
        admitted.push_back(p);
    }

    std::map<FlowId, double> weights;
    for (const auto& [id, w] : scenario.scheduler_flows())
        weights[id] = w;
    const std::vector<Seconds> gps = gps_finish_times(admitted, weights, scenario.link_rate);

    GpsDiscrepancy out;
    bool first = true;
    for (const TraceEvent& e : trace.events) {
        if (e.kind != EventKind::dequeue)
            continue;
        auto it = index.find(key_of(e));
        if (it == index.end())
            throw InputError(0, fmt::format("flow {} seq {} dequeued without enqueue", e.flow.value, e.seq));
        GpsDiscrepancy::Entry entry;
        entry.flow = e.flow;
        entry.seq = e.seq;
        entry.packet_departure = e.time + e.length / scenario.link_rate;
        entry.gps_finish = gps[it->second];
        entry.discrepancy = entry.packet_departure - entry.gps_finish;
        out.max = first ? entry.discrepancy : std::max(out.max, entry.discrepancy);
        first = false;
        out.packets.push_back(entry);
    }
    return out;
}

RunSummary summarize(const Trace& trace, const Scenario& scenario, Window window)
{
    RunSummary s;
    s.scheduler = trace.header.scheduler;
    s.seed = trace.header.seed;
    const auto metrics = flow_metrics(trace, window);
    std::vector<double> tput;
    for (const auto& [id, weight] : scenario.scheduler_flows()) {
        auto it = metrics.find(id);
        tput.push_back(it == metrics.end() ? 0.0 : it->second.throughput);
    }
    if (std::any_of(tput.begin(), tput.end(), [](double x) { return x > 0.0; }))
        s.jain = jain_index(tput);
    if (trace.header.scheduler == SchedulerKind::wfq)
        s.max_gps_discrepancy = gps_discrepancy(trace, scenario).max;
    return s;
}

std::string flow_metrics_csv(const std::map<FlowId, FlowMetrics>& metrics)
{
    std::string out =
        "flow,user,departed_bytes,departed_packets,throughput,mean_delay,p50_delay,p99_delay,max_delay,drops,dropped_bytes\n";
    for (const auto& [id, m] : metrics) {
        if (m.delay)
            out += fmt::format("{},{},{},{},{},{},{},{},{},{},{}\n", id.value, m.user.value,
                               m.departed_bytes, m.departed_packets, m.throughput, m.delay->mean,
                               m.delay->p50, m.delay->p99, m.delay->max, m.drops, m.dropped_bytes);
        else
            out += fmt::format("{},{},{},{},{},,,,,{},{}\n", id.value, m.user.value, m.departed_bytes,
                               m.departed_packets, m.throughput, m.drops, m.dropped_bytes);
    }
    return out;
}

std::string summary_csv_header()
{
    return "scheduler,seed,jain,max_gps_discrepancy\n";
}

std::string summary_csv_row(const RunSummary& s)
{
    return fmt::format("{},{},{},{}\n", to_string(s.scheduler), s.seed,
                       s.jain ? fmt::format("{}", *s.jain) : std::string(),
                       s.max_gps_discrepancy ? fmt::format("{}", *s.max_gps_discrepancy) : std::string());
}

}  // namespace jqsim
