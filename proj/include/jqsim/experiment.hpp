#ifndef JQSIM_EXPERIMENT_HPP
#define JQSIM_EXPERIMENT_HPP

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "jqsim/metrics.hpp"
#include "jqsim/scenario.hpp"
#include "jqsim/trace.hpp"

namespace jqsim {

inline constexpr int kExitOk = 0;
inline constexpr int kExitViolation = 1;
inline constexpr int kExitInputError = 2;

struct CheckReport {
    std::vector<std::string> violations;
    bool ok() const { return violations.empty(); }
};

/// Causality, conservation, link discipline, work conservation and
/// per-flow FIFO over a parsed trace.
CheckReport check(const Trace& trace);

struct SingleRun {
    Trace trace;
    std::map<FlowId, FlowMetrics> flows;
    RunSummary summary;
};

SingleRun run_single(const Scenario& scenario, SchedulerKind kind,
                     const std::vector<Packet>& arrivals);

/// The same generated arrivals fed to WFQ and to JQ.
struct PairedReport {
    Scenario scenario;
    SingleRun wfq;
    SingleRun jq;
    std::map<UserId, UserTotals> wfq_users;
    std::map<UserId, UserTotals> jq_users;

    /// Side-by-side flow table with jq - wfq deltas.
    std::string flows_csv() const;
    /// Per-user departed-byte shares under both schedulers.
    std::string users_csv() const;
};

PairedReport run_paired(const Scenario& scenario);

enum class RunMode { single, paired };

struct RunManifest {
    std::filesystem::path scenario_path;
    std::filesystem::path output_dir = ".";
    RunMode mode = RunMode::single;
    bool emit_trace = false;
    bool check_invariants = false;
    std::optional<std::uint64_t> seed_override;
};

/// Load, run, write outputs; returns a kExit* code. Diagnostics go to `err`,
/// a short report to `out`.
int execute(const RunManifest& manifest, std::ostream& out, std::ostream& err);

/// Check a trace file; returns kExitOk, kExitViolation or kExitInputError.
int execute_check(const std::filesystem::path& trace_path, std::ostream& out, std::ostream& err);

}  // namespace jqsim

#endif
