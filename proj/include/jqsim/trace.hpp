#ifndef JQSIM_TRACE_HPP
#define JQSIM_TRACE_HPP

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "jqsim/scenario.hpp"
#include "jqsim/simcore.hpp"

namespace jqsim {

inline constexpr int kTraceSchemaVersion = 1;

/*
 * Trace file layout, one item per line:
 *
 *   # jqsim-trace v1 seed=<u64> scenario=<16 hex> scheduler=<wfq|jq> link_rate=<r> duration=<d> rng=<desc>
 *   #> <canonical scenario text, one line each>
 *   kind,time,flow,user,seq,length,start,finish
 *   <record>...
 *   # end residual_packets=<n> residual_bytes=<b>
 *
 * Reals use the shortest representation that round-trips exactly. Drops
 * leave start and finish empty.
 */
struct TraceHeader {
    int version = kTraceSchemaVersion;
    std::uint64_t seed = 0;
    std::uint64_t scenario_hash = 0;
    SchedulerKind scheduler = SchedulerKind::wfq;
    double link_rate = 0.0;
    Seconds duration = 0.0;
    std::string rng;
    std::string scenario_text;
};

struct Trace {
    TraceHeader header;
    std::vector<TraceEvent> events;
    std::uint64_t residual_packets = 0;
    std::uint64_t residual_bytes = 0;
};

Trace make_trace(const Scenario& scenario, const RunResult& run);

std::string format_record(const TraceEvent& e);
/// Records only (no header or trailer); what scheduler comparisons diff.
std::string format_records(const std::vector<TraceEvent>& events);
std::string format_trace(const Trace& trace);

/// Throws InputError carrying the 1-based line of the first malformed line.
Trace parse_trace(std::string_view text);
Trace load_trace(const std::string& path);

/// The scenario echoed in the trace header.
Scenario scenario_of(const Trace& trace);

}  // namespace jqsim

#endif
