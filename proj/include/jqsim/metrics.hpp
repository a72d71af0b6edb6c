#ifndef JQSIM_METRICS_HPP
#define JQSIM_METRICS_HPP

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "jqsim/scenario.hpp"
#include "jqsim/trace.hpp"

namespace jqsim {

/// (sum x)^2 / (n * sum x^2). Throws on an empty or all-zero input, or on a
/// negative entry.
double jain_index(std::span<const double> xs);

struct Window {
    Seconds begin = 0.0;
    Seconds end = 0.0;
    Seconds length() const { return end - begin; }
};

/// Middle 80% of a run.
Window default_window(Seconds duration);

struct DelayStats {
    double mean = 0.0;
    double p50 = 0.0;
    double p99 = 0.0;
    double max = 0.0;
};

struct FlowMetrics {
    FlowId flow;
    UserId user;
    std::uint64_t departed_bytes = 0;    ///< whole run, by dequeue
    std::uint64_t departed_packets = 0;
    double throughput = 0.0;             ///< bytes/s dequeued inside the window
    std::optional<DelayStats> delay;     ///< empty when nothing departed
    std::uint64_t drops = 0;
    std::uint64_t dropped_bytes = 0;
};

/// Nearest-rank percentile of an ascending sample, q in (0, 1].
double nearest_rank(std::span<const double> sorted, double q);

/// Per-flow aggregation; queueing delay is dequeue time minus enqueue time.
/// Throws InputError for a dequeue without a preceding enqueue.
std::map<FlowId, FlowMetrics> flow_metrics(const Trace& trace, Window window);

struct UserTotals {
    std::uint64_t departed_bytes = 0;
    std::uint64_t offered_bytes = 0;  ///< enqueued + dropped
};
std::map<UserId, UserTotals> user_totals(const Trace& trace);

/// Share of all departed bytes that belongs to `user`.
double departed_share(const std::map<UserId, UserTotals>& totals, UserId user);

struct GpsDiscrepancy {
    struct Entry {
        FlowId flow;
        std::uint64_t seq = 0;
        Seconds packet_departure = 0.0;  ///< dequeue + length / link_rate
        Seconds gps_finish = 0.0;
        double discrepancy = 0.0;        ///< packet_departure - gps_finish
    };
    std::vector<Entry> packets;  ///< departed packets, in dequeue order
    double max = 0.0;
};

/// Compare each departed packet against the fluid GPS finish of the same
/// admitted arrivals. Throws InputError if the trace was not produced from
/// `scenario` (hash mismatch).
GpsDiscrepancy gps_discrepancy(const Trace& trace, const Scenario& scenario);

struct RunSummary {
    SchedulerKind scheduler = SchedulerKind::wfq;
    std::uint64_t seed = 0;
    std::optional<double> jain;  ///< over per-flow window throughputs
    std::optional<double> max_gps_discrepancy;
};

RunSummary summarize(const Trace& trace, const Scenario& scenario, Window window);

std::string flow_metrics_csv(const std::map<FlowId, FlowMetrics>& metrics);
std::string summary_csv_header();
std::string summary_csv_row(const RunSummary& summary);

}  // namespace jqsim

#endif
