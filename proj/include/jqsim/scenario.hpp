#ifndef JQSIM_SCENARIO_HPP
#define JQSIM_SCENARIO_HPP

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "jqsim/classify.hpp"
#include "jqsim/core_model.hpp"
#include "jqsim/jq.hpp"

namespace jqsim {

/// Bad scenario or trace input. `line()` is 0 when the problem is not tied to
/// a particular line (e.g. a programmatically built scenario).
class InputError : public std::runtime_error {
public:
    InputError(std::size_t line, const std::string& what)
        : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line)
    {
    }
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

enum class SchedulerKind { wfq, jq };
enum class GeneratorKind { cbr, poisson, onoff, flood };

std::string_view to_string(SchedulerKind kind);
std::string_view to_string(GeneratorKind kind);

struct GeneratorSpec {
    GeneratorKind kind = GeneratorKind::cbr;
    double rate = 0.0;              ///< bytes/second (aggregate, for flood)
    std::uint32_t packet_size = 0;  ///< bytes
    Seconds on = 0.0;               ///< onoff only
    Seconds off = 0.0;              ///< onoff only
    std::uint32_t sessions = 1;     ///< flood only
};

/// One declared flow. A flood expands into `sessions` scheduler flows with
/// ids id, id+1, ..., all owned by `user`.
struct FlowSpec {
    FlowId id;
    UserId user;
    double weight = 1.0;
    std::uint8_t tos = 0;
    GeneratorSpec generator;
    Seconds start = 0.0;
    std::optional<Seconds> stop;  ///< defaults to the scenario duration

    std::vector<FlowId> scheduler_flows() const;
    Seconds stop_or(Seconds duration) const { return stop.value_or(duration); }
};

inline constexpr std::uint64_t kDefaultBufferBytes = 1'000'000;

struct Scenario {
    double link_rate = 0.0;  ///< bytes/second
    Seconds duration = 10.0;
    std::uint64_t seed = 1;
    SchedulerKind scheduler = SchedulerKind::wfq;
    std::uint64_t buffer_capacity = kDefaultBufferBytes;
    JqConfig jq;  ///< jq.buffer_capacity mirrors buffer_capacity
    EstimatorConfig classify;
    std::vector<FlowSpec> flows;

    /// Throws InputError naming the offending field.
    void validate() const;

    /// Weight of every scheduler flow, floods expanded.
    std::vector<std::pair<FlowId, double>> scheduler_flows() const;
    const FlowSpec* owner_of(FlowId flow) const;
    std::uint32_t max_packet_size() const;
};

/// Parse a TOML scenario. Defaults are filled in and the
/// result validated; errors carry the offending line.
Scenario parse_scenario(std::string_view text);
Scenario load_scenario(const std::string& path);

/// Canonical text form: every field spelled out, parseable by parse_scenario.
std::string to_text(const Scenario& scenario);

/// FNV-1a 64 of the canonical text.
std::uint64_t scenario_hash(const Scenario& scenario);

}  // namespace jqsim

#endif
