#include "jqsim/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>
#include <set>

#include <fmt/format.h>

#include "jqsim/simcore.hpp"

namespace jqsim {

namespace {

bool at_least(double a, double b)
{
    return a >= b - 1e-12 * std::max(1.0, std::abs(b));
}

}  // namespace

CheckReport check(const Trace& trace)
{
    CheckReport report;
    auto fail = [&report](std::string msg) { report.violations.push_back(std::move(msg)); };

    const double rate = trace.header.link_rate;
    using Key = std::pair<std::uint32_t, std::uint64_t>;
    std::map<Key, Seconds> enqueued_at;
    std::set<Key> arrived, departed;
    std::map<std::uint32_t, std::uint64_t> last_arrival_seq, last_departure_seq;
    std::uint64_t enq_bytes = 0, deq_bytes = 0, enq_packets = 0, deq_packets = 0;
    std::uint64_t queued = 0;
    Seconds prev_time = 0.0;
    std::optional<Seconds> link_free_at;

    for (const TraceEvent& e : trace.events) {
        const Key key{e.flow.value, e.seq};
        const std::string who = fmt::format("flow {} seq {}", e.flow.value, e.seq);

        if (e.time < 0.0 || e.time > trace.header.duration)
            fail(fmt::format("{}: {} at t={} outside [0, {}]", who, to_string(e.kind), e.time,
                             trace.header.duration));
        if (e.time < prev_time)
            fail(fmt::format("{}: event at t={} precedes the previous event at t={}", who, e.time,
                             prev_time));
        // Work conservation: the link may not sit idle while packets wait.
        if (queued > 0) {
            const Seconds idle_from = std::max(prev_time, link_free_at.value_or(prev_time));
            if (!at_least(idle_from, e.time))
                fail(fmt::format("link idle from t={} to t={} with {} packet(s) queued", idle_from,
                                 e.time, queued));
        }
        prev_time = std::max(prev_time, e.time);

        if (e.kind != EventKind::dequeue) {
            if (!arrived.insert(key).second)
                fail(fmt::format("{}: arrives more than once", who));
            auto& last = last_arrival_seq[e.flow.value];
            if (e.seq <= last)
                fail(fmt::format("{}: sequence number does not increase within its flow", who));
            last = std::max(last, e.seq);
        }

        switch (e.kind) {
        case EventKind::enqueue:
            enqueued_at[key] = e.time;
            enq_bytes += e.length;
            ++enq_packets;
            ++queued;
            break;
        case EventKind::drop:
            break;
        case EventKind::dequeue: {
            auto it = enqueued_at.find(key);
            if (it == enqueued_at.end()) {
                fail(fmt::format("{}: dequeued at t={} before any enqueue", who, e.time));
            } else if (e.time < it->second) {
                fail(fmt::format("{}: dequeued at t={} before its enqueue at t={}", who, e.time,
                                 it->second));
            }
            if (!departed.insert(key).second)
                fail(fmt::format("{}: dequeued more than once", who));
            auto& last = last_departure_seq[e.flow.value];
            if (e.seq < last)
                fail(fmt::format("{}: departs after seq {} of the same flow (FIFO violated)", who, last));
            last = std::max(last, e.seq);

            if (link_free_at && !at_least(e.time, *link_free_at))
                fail(fmt::format("{}: dequeued at t={} while the link is busy until t={}", who, e.time,
                                 *link_free_at));
            link_free_at = e.time + e.length / rate;
            deq_bytes += e.length;
            ++deq_packets;
            if (queued > 0)
                --queued;
            break;
        }
        }
    }

    if (enq_bytes != deq_bytes + trace.residual_bytes)
        fail(fmt::format("byte conservation: enqueued {} != dequeued {} + residual {} (delta {})",
                         enq_bytes, deq_bytes, trace.residual_bytes,
                         static_cast<std::int64_t>(enq_bytes) -
                             static_cast<std::int64_t>(deq_bytes + trace.residual_bytes)));
    if (enq_packets != deq_packets + trace.residual_packets)
        fail(fmt::format("packet conservation: enqueued {} != dequeued {} + residual {} (delta {})",
                         enq_packets, deq_packets, trace.residual_packets,
                         static_cast<std::int64_t>(enq_packets) -
                             static_cast<std::int64_t>(deq_packets + trace.residual_packets)));

    if (trace.header.scheduler == SchedulerKind::wfq && report.ok()) {
        const Scenario sc = scenario_of(trace);
        const double slack = sc.max_packet_size() / sc.link_rate + 1e-9;
        for (const auto& p : gps_discrepancy(trace, sc).packets)
            if (p.discrepancy > slack)
                fail(fmt::format("flow {} seq {}: departs {} s after its GPS finish (bound {})",
                                 p.flow.value, p.seq, p.discrepancy, slack));
    }
    return report;
}

SingleRun run_single(const Scenario& scenario, SchedulerKind kind, const std::vector<Packet>& arrivals)
{
    SingleRun r;
    r.trace = make_trace(scenario, replay(scenario, kind, arrivals));
    const Window w = default_window(scenario.duration);
    r.flows = flow_metrics(r.trace, w);
    r.summary = summarize(r.trace, scenario, w);
    return r;
}

PairedReport run_paired(const Scenario& scenario)
{
    PairedReport rep;
    rep.scenario = scenario;
    const std::vector<Packet> arrivals = generate_arrivals(scenario);
    rep.wfq = run_single(scenario, SchedulerKind::wfq, arrivals);
    rep.jq = run_single(scenario, SchedulerKind::jq, arrivals);
    rep.wfq_users = user_totals(rep.wfq.trace);
    rep.jq_users = user_totals(rep.jq.trace);
    return rep;
}

std::string PairedReport::flows_csv() const
{
    std::string out =
        "flow,user,wfq_departed_bytes,jq_departed_bytes,delta_departed_bytes,"
        "wfq_throughput,jq_throughput,delta_throughput,"
        "wfq_mean_delay,jq_mean_delay,delta_mean_delay,wfq_drops,jq_drops\n";
    std::set<FlowId> ids;
    for (const auto& [id, m] : wfq.flows)
        ids.insert(id);
    for (const auto& [id, m] : jq.flows)
        ids.insert(id);
    for (FlowId id : ids) {
        const FlowMetrics a = wfq.flows.contains(id) ? wfq.flows.at(id) : FlowMetrics{};
        const FlowMetrics b = jq.flows.contains(id) ? jq.flows.at(id) : FlowMetrics{};
        std::string delays = ",,";
        if (a.delay && b.delay)
            delays = fmt::format("{},{},{}", a.delay->mean, b.delay->mean, b.delay->mean - a.delay->mean);
        else if (a.delay)
            delays = fmt::format("{},,", a.delay->mean);
        else if (b.delay)
            delays = fmt::format(",{},", b.delay->mean);
        const UserId user = wfq.flows.contains(id) ? a.user : b.user;
        out += fmt::format("{},{},{},{},{},{},{},{},{},{},{}\n", id.value, user.value, a.departed_bytes,
                           b.departed_bytes,
                           static_cast<std::int64_t>(b.departed_bytes) -
                               static_cast<std::int64_t>(a.departed_bytes),
                           a.throughput, b.throughput, b.throughput - a.throughput, delays, a.drops,
                           b.drops);
    }
    return out;
}

std::string PairedReport::users_csv() const
{
    std::string out = "user,wfq_departed_bytes,jq_departed_bytes,wfq_share,jq_share,delta_share\n";
    std::set<UserId> ids;
    for (const auto& [id, u] : wfq_users)
        ids.insert(id);
    for (const auto& [id, u] : jq_users)
        ids.insert(id);
    for (UserId id : ids) {
        const auto a = wfq_users.contains(id) ? wfq_users.at(id).departed_bytes : 0;
        const auto b = jq_users.contains(id) ? jq_users.at(id).departed_bytes : 0;
        const double sa = departed_share(wfq_users, id);
        const double sb = departed_share(jq_users, id);
        out += fmt::format("{},{},{},{},{},{}\n", id.value, a, b, sa, sb, sb - sa);
    }
    return out;
}

namespace {

void write_file(const std::filesystem::path& path, const std::string& content)
{
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f)
        throw InputError(0, "cannot write '" + path.string() + "'");
    f << content;
    if (!f)
        throw InputError(0, "failed writing '" + path.string() + "'");
}

std::string summary_line(const RunSummary& s)
{
    return fmt::format("{}: jain={} max_gps_discrepancy={}", to_string(s.scheduler),
                       s.jain ? fmt::format("{:.6f}", *s.jain) : "n/a",
                       s.max_gps_discrepancy ? fmt::format("{:.3e}", *s.max_gps_discrepancy) : "n/a");
}

}  // namespace

int execute(const RunManifest& m, std::ostream& out, std::ostream& err)
{
    try {
        Scenario sc = load_scenario(m.scenario_path.string());
        if (m.seed_override)
            sc.seed = *m.seed_override;

        std::error_code ec;
        std::filesystem::create_directories(m.output_dir, ec);
        if (ec)
            throw InputError(0, "cannot create output directory '" + m.output_dir.string() + "'");
        const std::string stem = m.scenario_path.stem().string();
        auto path = [&](const std::string& suffix) { return m.output_dir / (stem + suffix); };

        std::vector<const SingleRun*> runs;
        PairedReport paired;
        SingleRun single;
        if (m.mode == RunMode::paired) {
            paired = run_paired(sc);
            runs = {&paired.wfq, &paired.jq};
            write_file(path(".paired.flows.csv"), paired.flows_csv());
            write_file(path(".paired.users.csv"), paired.users_csv());
        } else {
            single = run_single(sc, sc.scheduler, generate_arrivals(sc));
            runs = {&single};
        }

        std::string summary = summary_csv_header();
        for (const SingleRun* r : runs) {
            const std::string sched(to_string(r->summary.scheduler));
            write_file(path("." + sched + ".flows.csv"), flow_metrics_csv(r->flows));
            if (m.emit_trace)
                write_file(path("." + sched + ".trace"), format_trace(r->trace));
            summary += summary_csv_row(r->summary);
            out << summary_line(r->summary) << '\n';
        }
        write_file(path(".summary.csv"), summary);

        if (m.check_invariants) {
            bool ok = true;
            for (const SingleRun* r : runs) {
                const CheckReport rep = check(r->trace);
                for (const auto& v : rep.violations)
                    err << to_string(r->summary.scheduler) << ": " << v << '\n';
                ok = ok && rep.ok();
            }
            if (!ok)
                return kExitViolation;
            out << "invariants: ok\n";
        }
        return kExitOk;
    } catch (const InputError& e) {
        err << "error: " << e.what() << '\n';
        return kExitInputError;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << '\n';
        return kExitInputError;
    }
}

int execute_check(const std::filesystem::path& trace_path, std::ostream& out, std::ostream& err)
{
    try {
        const Trace t = load_trace(trace_path.string());
        const CheckReport rep = check(t);
        for (const auto& v : rep.violations)
            err << "violation: " << v << '\n';
        if (!rep.ok())
            return kExitViolation;
        out << "pass: " << t.events.size() << " events\n";
        return kExitOk;
    } catch (const InputError& e) {
        err << "error: " << e.what() << '\n';
        return kExitInputError;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << '\n';
        return kExitInputError;
    }
}

}  // namespace jqsim
