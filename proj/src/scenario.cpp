#include "jqsim/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <toml++/toml.hpp>

namespace jqsim {

std::string_view to_string(SchedulerKind kind)
{
    return kind == SchedulerKind::jq ? "jq" : "wfq";
}

std::string_view to_string(GeneratorKind kind)
{
    switch (kind) {
    case GeneratorKind::cbr: return "cbr";
    case GeneratorKind::poisson: return "poisson";
    case GeneratorKind::onoff: return "onoff";
    case GeneratorKind::flood: return "flood";
    }
    return "?";
}

std::vector<FlowId> FlowSpec::scheduler_flows() const
{
    const std::uint32_t n = generator.kind == GeneratorKind::flood ? generator.sessions : 1;
    std::vector<FlowId> out;
    out.reserve(n);
    for (std::uint32_t i = 0; i < n; ++i)
        out.push_back(FlowId{id.value + i});
    return out;
}

std::vector<std::pair<FlowId, double>> Scenario::scheduler_flows() const
{
    std::vector<std::pair<FlowId, double>> out;
    for (const FlowSpec& f : flows)
        for (FlowId id : f.scheduler_flows())
            out.emplace_back(id, f.weight);
    std::sort(out.begin(), out.end());
    return out;
}

const FlowSpec* Scenario::owner_of(FlowId flow) const
{
    for (const FlowSpec& f : flows) {
        const std::uint32_t n = f.generator.kind == GeneratorKind::flood ? f.generator.sessions : 1;
        if (flow.value >= f.id.value && flow.value - f.id.value < n)
            return &f;
    }
    return nullptr;
}

std::uint32_t Scenario::max_packet_size() const
{
    std::uint32_t m = 0;
    for (const FlowSpec& f : flows)
        m = std::max(m, f.generator.packet_size);
    return m;
}

namespace {

void require(bool ok, std::size_t line, const std::string& what)
{
    if (!ok)
        throw InputError(line, what);
}

void validate_flow(const FlowSpec& f, Seconds duration, std::size_t line = 0)
{
    const std::string who = fmt::format("flow {}", f.id.value);
    const GeneratorSpec& g = f.generator;
    require(f.weight > 0.0 && std::isfinite(f.weight), line, who + ": weight must be > 0");
    require(g.rate > 0.0 && std::isfinite(g.rate), line, who + ": rate must be > 0");
    require(g.packet_size >= 1, line, who + ": packet_size must be >= 1");
    require(f.start >= 0.0 && std::isfinite(f.start), line, who + ": start must be >= 0");
    require(f.stop_or(duration) >= f.start, line, who + ": stop must not precede start");
    if (g.kind == GeneratorKind::onoff) {
        require(g.on > 0.0, line, who + ": onoff needs on > 0");
        require(g.off >= 0.0, line, who + ": onoff needs off >= 0");
    }
    if (g.kind == GeneratorKind::flood)
        require(g.sessions >= 1, line, who + ": sessions must be >= 1");
    else
        require(g.sessions == 1, line, who + ": sessions applies to flood generators only");
}

}  // namespace

void Scenario::validate() const
{
    require(link_rate > 0.0 && std::isfinite(link_rate), 0, "link.rate must be > 0");
    require(duration > 0.0 && std::isfinite(duration), 0, "duration must be > 0");
    require(buffer_capacity > 0, 0, "link.buffer must be > 0");
    require(!flows.empty(), 0, "at least one [[flow]] is required");
    require(jq.buffer_capacity == buffer_capacity, 0, "jq buffer capacity must match link.buffer");
    try {
        jq.validate();
        classify.validate();
    } catch (const std::invalid_argument& e) {
        throw InputError(0, e.what());
    }
    std::set<std::uint32_t> seen;
    for (const FlowSpec& f : flows) {
        validate_flow(f, duration, 0);
        for (FlowId id : f.scheduler_flows())
            require(seen.insert(id.value).second, 0,
                    fmt::format("flow id {} is used more than once", id.value));
    }
}

namespace {

std::size_t node_line(const toml::node& n)
{
    return n.source().begin.line;
}

// Typed access to one TOML table with line-numbered errors.
class Reader {
public:
    Reader(const toml::table& t, std::string where) : table_(t), where_(std::move(where)) {}

    void allow(std::initializer_list<std::string_view> keys) const
    {
        for (const auto& [k, v] : table_)
            if (std::find(keys.begin(), keys.end(), k.str()) == keys.end())
                throw InputError(node_line(v), v.is_table() || v.is_array_of_tables()
                                                   ? fmt::format("unknown section [{}]", k.str())
                                                   : fmt::format("unknown key '{}' in {}", k.str(), where_));
    }

    const toml::node* find(std::string_view key) const { return table_.get(key); }

    const toml::node& need(std::string_view key) const
    {
        const toml::node* n = find(key);
        if (!n)
            throw InputError(node_line(table_), fmt::format("missing required field '{}' in {}", key, where_));
        return *n;
    }

    std::size_t line_of(std::string_view key) const
    {
        const toml::node* n = find(key);
        return n ? node_line(*n) : node_line(table_);
    }

    double real(std::string_view key, double fallback) const
    {
        const toml::node* n = find(key);
        return n ? to_real(*n, key) : fallback;
    }
    double real(std::string_view key) const { return to_real(need(key), key); }

    std::uint64_t integer(std::string_view key, std::uint64_t fallback) const
    {
        const toml::node* n = find(key);
        return n ? to_integer(*n, key) : fallback;
    }
    std::uint64_t integer(std::string_view key) const { return to_integer(need(key), key); }

    std::string word(std::string_view key, const std::string& fallback) const
    {
        const toml::node* n = find(key);
        return n ? to_word(*n, key) : fallback;
    }
    std::string word(std::string_view key) const { return to_word(need(key), key); }

private:
    static double to_real(const toml::node& n, std::string_view key)
    {
        std::optional<double> v;
        if (n.is_integer())
            v = static_cast<double>(*n.value<std::int64_t>());
        else if (n.is_floating_point())
            v = n.value<double>();
        if (!v || !std::isfinite(*v))
            throw InputError(node_line(n), fmt::format("'{}' must be a finite number", key));
        return *v;
    }

    static std::uint64_t to_integer(const toml::node& n, std::string_view key)
    {
        const auto v = n.is_integer() ? n.value<std::int64_t>() : std::nullopt;
        if (!v || *v < 0)
            throw InputError(node_line(n), fmt::format("'{}' must be a non-negative integer", key));
        return static_cast<std::uint64_t>(*v);
    }

    static std::string to_word(const toml::node& n, std::string_view key)
    {
        const auto v = n.value<std::string>();
        if (!n.is_string() || !v)
            throw InputError(node_line(n), fmt::format("'{}' must be a quoted string", key));
        return *v;
    }

    const toml::table& table_;
    std::string where_;
};

const toml::table& table_at(const toml::table& root, std::string_view key)
{
    const toml::node& n = *root.get(key);
    if (!n.is_table())
        throw InputError(node_line(n), fmt::format("'{}' must be a [{}] section", key, key));
    return *n.as_table();
}

std::uint32_t narrow32(std::uint64_t v, std::size_t line, const std::string& what)
{
    if (v > 0xFFFFFFFFu)
        throw InputError(line, what + " out of range");
    return static_cast<std::uint32_t>(v);
}

FlowSpec read_flow(const Reader& r)
{
    r.allow({"id", "user", "weight", "tos", "generator", "rate", "packet_size", "on", "off",
             "sessions", "start", "stop"});
    FlowSpec f;
    f.id = FlowId{narrow32(r.integer("id"), r.line_of("id"), "id")};
    f.user = UserId{narrow32(r.integer("user"), r.line_of("user"), "user")};
    const std::string who = fmt::format("flow {}", f.id.value);

    f.weight = r.real("weight", 1.0);
    require(f.weight > 0.0, r.line_of("weight"), who + ": weight must be > 0");

    const std::uint64_t tos = r.integer("tos", 0);
    require(tos <= 0xFF, r.line_of("tos"), who + ": tos must fit in one byte");
    f.tos = static_cast<std::uint8_t>(tos);

    const std::string kind = r.word("generator");
    GeneratorSpec& g = f.generator;
    if (kind == "cbr")
        g.kind = GeneratorKind::cbr;
    else if (kind == "poisson")
        g.kind = GeneratorKind::poisson;
    else if (kind == "onoff")
        g.kind = GeneratorKind::onoff;
    else if (kind == "flood")
        g.kind = GeneratorKind::flood;
    else
        throw InputError(r.line_of("generator"), who + ": unknown generator '" + kind + "'");

    g.rate = r.real("rate");
    require(g.rate > 0.0, r.line_of("rate"), who + ": rate must be > 0");
    g.packet_size = narrow32(r.integer("packet_size"), r.line_of("packet_size"), "packet_size");
    require(g.packet_size >= 1, r.line_of("packet_size"), who + ": packet_size must be >= 1");

    if (g.kind == GeneratorKind::onoff) {
        g.on = r.real("on");
        g.off = r.real("off");
        require(g.on > 0.0, r.line_of("on"), who + ": on must be > 0");
        require(g.off >= 0.0, r.line_of("off"), who + ": off must be >= 0");
    } else {
        require(!r.find("on") && !r.find("off"), r.line_of(r.find("on") ? "on" : "off"),
                who + ": on/off apply to onoff generators only");
    }
    if (g.kind == GeneratorKind::flood) {
        g.sessions = narrow32(r.integer("sessions"), r.line_of("sessions"), "sessions");
        require(g.sessions >= 1, r.line_of("sessions"), who + ": sessions must be >= 1");
    } else {
        require(!r.find("sessions"), r.line_of("sessions"),
                who + ": sessions applies to flood generators only");
    }

    f.start = r.real("start", 0.0);
    require(f.start >= 0.0, r.line_of("start"), who + ": start must be >= 0");
    if (r.find("stop")) {
        f.stop = r.real("stop");
        require(*f.stop >= f.start, r.line_of("stop"), who + ": stop must not precede start");
    }
    return f;
}

}  // namespace

Scenario parse_scenario(std::string_view text)
{
    toml::table root;
    try {
        root = toml::parse(text);
    } catch (const toml::parse_error& e) {
        throw InputError(e.source().begin.line, std::string(e.description()));
    }
    Scenario sc;

    const Reader top(root, "top level");
    top.allow({"duration", "seed", "scheduler", "link", "jq", "classify", "flow"});
    sc.duration = top.real("duration", sc.duration);
    require(sc.duration > 0.0, top.line_of("duration"), "duration must be > 0");
    sc.seed = top.integer("seed", sc.seed);
    const std::string sched = top.word("scheduler", "wfq");
    if (sched == "wfq")
        sc.scheduler = SchedulerKind::wfq;
    else if (sched == "jq")
        sc.scheduler = SchedulerKind::jq;
    else
        throw InputError(top.line_of("scheduler"), "scheduler must be 'wfq' or 'jq'");

    require(root.contains("link"), 0, "missing required section [link]");
    {
        const Reader r(table_at(root, "link"), "[link]");
        r.allow({"rate", "buffer"});
        sc.link_rate = r.real("rate");
        require(sc.link_rate > 0.0, r.line_of("rate"), "link.rate must be > 0");
        sc.buffer_capacity = r.integer("buffer", sc.buffer_capacity);
        require(sc.buffer_capacity > 0, r.line_of("buffer"), "link.buffer must be > 0");
    }
    if (root.contains("jq")) {
        const Reader r(table_at(root, "jq"), "[jq]");
        r.allow({"delta_v", "beta_bytes", "high_watermark", "low_watermark"});
        sc.jq.delta_v = r.real("delta_v", sc.jq.delta_v);
        require(sc.jq.delta_v >= 0.0, r.line_of("delta_v"), "jq.delta_v must be >= 0");
        sc.jq.beta_bytes = r.integer("beta_bytes", sc.jq.beta_bytes);
        sc.jq.high_watermark = r.real("high_watermark", sc.jq.high_watermark);
        require(sc.jq.high_watermark > 0.0 && sc.jq.high_watermark <= 1.0, r.line_of("high_watermark"),
                "jq.high_watermark must be in (0, 1]");
        sc.jq.low_watermark = r.real("low_watermark", sc.jq.low_watermark);
        require(sc.jq.low_watermark >= 0.0 && sc.jq.low_watermark < sc.jq.high_watermark,
                r.line_of("low_watermark"), "jq.low_watermark must be >= 0 and below jq.high_watermark");
    }
    if (root.contains("classify")) {
        const Reader r(table_at(root, "classify"), "[classify]");
        r.allow({"halflife", "max_user_level", "activity_halflives"});
        sc.classify.halflife = r.real("halflife", sc.classify.halflife);
        require(sc.classify.halflife > 0.0, r.line_of("halflife"), "classify.halflife must be > 0");
        const std::uint64_t lvl = r.integer("max_user_level", 4);
        require(lvl <= 1000, r.line_of("max_user_level"), "classify.max_user_level too large");
        sc.classify.max_user_level = static_cast<int>(lvl);
        sc.classify.activity_halflives = r.real("activity_halflives", sc.classify.activity_halflives);
        require(sc.classify.activity_halflives > 0.0, r.line_of("activity_halflives"),
                "classify.activity_halflives must be > 0");
    }

    std::vector<std::size_t> flow_lines;
    if (const toml::node* flows = root.get("flow")) {
        const toml::array* arr = flows->as_array();
        if (!arr || !arr->is_array_of_tables())
            throw InputError(node_line(*flows), "flows must be given as [[flow]] sections");
        for (const toml::node& n : *arr) {
            const std::size_t at = node_line(n);
            sc.flows.push_back(read_flow(Reader(*n.as_table(), fmt::format("[[flow]] at line {}", at))));
            flow_lines.push_back(at);
        }
    }
    require(!sc.flows.empty(), 0, "at least one [[flow]] is required");
    sc.jq.buffer_capacity = sc.buffer_capacity;

    std::set<std::uint32_t> seen;
    for (std::size_t i = 0; i < sc.flows.size(); ++i) {
        const FlowSpec& f = sc.flows[i];
        require(f.stop_or(sc.duration) >= f.start, flow_lines[i],
                fmt::format("flow {}: start is after the end of the run", f.id.value));
        for (FlowId id : f.scheduler_flows())
            require(seen.insert(id.value).second, flow_lines[i],
                    fmt::format("flow id {} is used more than once", id.value));
    }
    sc.validate();
    return sc;
}

Scenario load_scenario(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw InputError(0, "cannot open scenario file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_scenario(ss.str());
}

std::string to_text(const Scenario& sc)
{
    std::string out;
    auto line = [&out](std::string s) {
        out += s;
        out += '\n';
    };
    line(fmt::format("duration = {}", sc.duration));
    line(fmt::format("seed = {}", sc.seed));
    line(fmt::format("scheduler = \"{}\"", to_string(sc.scheduler)));
    line("[link]");
    line(fmt::format("rate = {}", sc.link_rate));
    line(fmt::format("buffer = {}", sc.buffer_capacity));
    line("[jq]");
    line(fmt::format("delta_v = {}", sc.jq.delta_v));
    line(fmt::format("beta_bytes = {}", sc.jq.beta_bytes));
    line(fmt::format("high_watermark = {}", sc.jq.high_watermark));
    line(fmt::format("low_watermark = {}", sc.jq.low_watermark));
    line("[classify]");
    line(fmt::format("halflife = {}", sc.classify.halflife));
    line(fmt::format("max_user_level = {}", sc.classify.max_user_level));
    line(fmt::format("activity_halflives = {}", sc.classify.activity_halflives));
    for (const FlowSpec& f : sc.flows) {
        const GeneratorSpec& g = f.generator;
        line("[[flow]]");
        line(fmt::format("id = {}", f.id.value));
        line(fmt::format("user = {}", f.user.value));
        line(fmt::format("weight = {}", f.weight));
        line(fmt::format("tos = 0x{:02X}", f.tos));
        line(fmt::format("generator = \"{}\"", to_string(g.kind)));
        line(fmt::format("rate = {}", g.rate));
        line(fmt::format("packet_size = {}", g.packet_size));
        if (g.kind == GeneratorKind::onoff) {
            line(fmt::format("on = {}", g.on));
            line(fmt::format("off = {}", g.off));
        }
        if (g.kind == GeneratorKind::flood)
            line(fmt::format("sessions = {}", g.sessions));
        line(fmt::format("start = {}", f.start));
        line(fmt::format("stop = {}", f.stop_or(sc.duration)));
    }
    return out;
}

std::uint64_t scenario_hash(const Scenario& sc)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : to_text(sc)) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace jqsim
