#include "jqsim/trace.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include <fmt/format.h>

namespace jqsim {

namespace {

constexpr std::string_view kMagic = "# jqsim-trace";
constexpr std::string_view kEcho = "#> ";
constexpr std::string_view kColumns = "kind,time,flow,user,seq,length,start,finish";
constexpr std::string_view kTrailer = "# end";

std::vector<std::string_view> split(std::string_view s, char sep)
{
    std::vector<std::string_view> out;
    std::size_t pos = 0;
    for (;;) {
        const auto at = s.find(sep, pos);
        out.push_back(s.substr(pos, at == std::string_view::npos ? std::string_view::npos : at - pos));
        if (at == std::string_view::npos)
            return out;
        pos = at + 1;
    }
}

template <class T>
T parse_number(std::string_view s, std::size_t line, std::string_view field, int base = 10)
{
    T v{};
    std::from_chars_result r;
    if constexpr (std::is_floating_point_v<T>)
        r = std::from_chars(s.data(), s.data() + s.size(), v);
    else
        r = std::from_chars(s.data(), s.data() + s.size(), v, base);
    if (s.empty() || r.ec != std::errc{} || r.ptr != s.data() + s.size())
        throw InputError(line, fmt::format("bad {} '{}'", field, s));
    return v;
}

std::map<std::string_view, std::string_view> key_values(std::string_view s)
{
    std::map<std::string_view, std::string_view> kv;
    for (std::string_view tok : split(s, ' ')) {
        const auto eq = tok.find('=');
        if (eq != std::string_view::npos)
            kv[tok.substr(0, eq)] = tok.substr(eq + 1);
    }
    return kv;
}

std::string_view field(const std::map<std::string_view, std::string_view>& kv, std::string_view key,
                       std::size_t line)
{
    auto it = kv.find(key);
    if (it == kv.end())
        throw InputError(line, fmt::format("trace header lacks '{}'", key));
    return it->second;
}

}  // namespace

Trace make_trace(const Scenario& sc, const RunResult& run)
{
    Trace t;
    Scenario echoed = sc;
    echoed.scheduler = run.scheduler;
    t.header.seed = sc.seed;
    t.header.scenario_hash = scenario_hash(echoed);
    t.header.scheduler = run.scheduler;
    t.header.link_rate = sc.link_rate;
    t.header.duration = sc.duration;
    t.header.rng = std::string(kRngDescription);
    t.header.scenario_text = to_text(echoed);
    t.events = run.events;
    t.residual_packets = run.residual_packets;
    t.residual_bytes = run.residual_bytes;
    return t;
}

std::string format_record(const TraceEvent& e)
{
    if (e.tags)
        return fmt::format("{},{},{},{},{},{},{},{}", to_string(e.kind), e.time, e.flow.value,
                           e.user.value, e.seq, e.length, e.tags->start.units, e.tags->finish.units);
    return fmt::format("{},{},{},{},{},{},,", to_string(e.kind), e.time, e.flow.value, e.user.value,
                       e.seq, e.length);
}

std::string format_records(const std::vector<TraceEvent>& events)
{
    std::string out;
    out.reserve(events.size() * 48);
    for (const TraceEvent& e : events) {
        out += format_record(e);
        out += '\n';
    }
    return out;
}

std::string format_trace(const Trace& t)
{
    std::string out = fmt::format("{} v{} seed={} scenario={:016x} scheduler={} link_rate={} duration={} rng={}\n",
                                  kMagic, t.header.version, t.header.seed, t.header.scenario_hash,
                                  to_string(t.header.scheduler), t.header.link_rate,
                                  t.header.duration, t.header.rng);
    for (std::string_view line : split(t.header.scenario_text, '\n'))
        if (!line.empty())
            out += fmt::format("{}{}\n", kEcho, line);
    out += kColumns;
    out += '\n';
    out += format_records(t.events);
    out += fmt::format("{} residual_packets={} residual_bytes={}\n", kTrailer, t.residual_packets,
                       t.residual_bytes);
    return out;
}

Trace parse_trace(std::string_view text)
{
    Trace t;
    std::vector<std::string_view> lines = split(text, '\n');
    if (!lines.empty() && lines.back().empty())
        lines.pop_back();
    if (lines.empty() || !lines.front().starts_with(kMagic))
        throw InputError(1, "not a jqsim trace (missing header line)");

    {
        const auto kv = key_values(lines.front());
        const std::string_view rest = lines.front().substr(kMagic.size());
        const auto words = split(rest.substr(rest.find_first_not_of(' ')), ' ');
        if (words.empty() || words.front() != fmt::format("v{}", kTraceSchemaVersion))
            throw InputError(1, "unsupported trace schema version");
        t.header.seed = parse_number<std::uint64_t>(field(kv, "seed", 1), 1, "seed");
        t.header.scenario_hash =
            parse_number<std::uint64_t>(field(kv, "scenario", 1), 1, "scenario hash", 16);
        const auto sched = field(kv, "scheduler", 1);
        if (sched != "wfq" && sched != "jq")
            throw InputError(1, "bad scheduler in trace header");
        t.header.scheduler = sched == "jq" ? SchedulerKind::jq : SchedulerKind::wfq;
        t.header.link_rate = parse_number<double>(field(kv, "link_rate", 1), 1, "link_rate");
        if (!(t.header.link_rate > 0.0))
            throw InputError(1, "link_rate must be positive");
        t.header.duration = parse_number<double>(field(kv, "duration", 1), 1, "duration");
        t.header.rng = std::string(field(kv, "rng", 1));
    }

    std::size_t i = 1;
    for (; i < lines.size() && lines[i].starts_with(kEcho); ++i) {
        t.header.scenario_text += lines[i].substr(kEcho.size());
        t.header.scenario_text += '\n';
    }
    if (i >= lines.size() || lines[i] != kColumns)
        throw InputError(i + 1, "expected column header");
    ++i;

    bool ended = false;
    for (; i < lines.size(); ++i) {
        const std::size_t lineno = i + 1;
        const std::string_view line = lines[i];
        if (ended)
            throw InputError(lineno, "content after trailer");
        if (line.starts_with(kTrailer)) {
            const auto kv = key_values(line);
            t.residual_packets =
                parse_number<std::uint64_t>(field(kv, "residual_packets", lineno), lineno, "residual_packets");
            t.residual_bytes =
                parse_number<std::uint64_t>(field(kv, "residual_bytes", lineno), lineno, "residual_bytes");
            ended = true;
            continue;
        }
        const auto cols = split(line, ',');
        if (cols.size() != 8)
            throw InputError(lineno, fmt::format("expected 8 columns, got {}", cols.size()));
        TraceEvent e;
        if (cols[0] == "enqueue")
            e.kind = EventKind::enqueue;
        else if (cols[0] == "dequeue")
            e.kind = EventKind::dequeue;
        else if (cols[0] == "drop")
            e.kind = EventKind::drop;
        else
            throw InputError(lineno, fmt::format("unknown event kind '{}'", cols[0]));
        e.time = parse_number<double>(cols[1], lineno, "time");
        e.flow = FlowId{parse_number<std::uint32_t>(cols[2], lineno, "flow")};
        e.user = UserId{parse_number<std::uint32_t>(cols[3], lineno, "user")};
        e.seq = parse_number<std::uint64_t>(cols[4], lineno, "seq");
        e.length = parse_number<std::uint32_t>(cols[5], lineno, "length");
        if (e.kind == EventKind::drop) {
            if (!cols[6].empty() || !cols[7].empty())
                throw InputError(lineno, "drop records carry no timestamps");
        } else {
            e.tags = Timestamps{VirtualTime{parse_number<double>(cols[6], lineno, "start")},
                                VirtualTime{parse_number<double>(cols[7], lineno, "finish")}};
        }
        t.events.push_back(e);
    }
    if (!ended)
        throw InputError(lines.size(), "trace is truncated (missing trailer)");
    return t;
}

Trace load_trace(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw InputError(0, "cannot open trace file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_trace(ss.str());
}

Scenario scenario_of(const Trace& trace)
{
    return parse_scenario(trace.header.scenario_text);
}

}  // namespace jqsim
