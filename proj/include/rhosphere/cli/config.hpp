#ifndef RHOSPHERE_CLI_CONFIG_HPP
#define RHOSPHERE_CLI_CONFIG_HPP

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "rhosphere/eulerian.hpp"
#include "rhosphere/integrator.hpp"
#include "rhosphere/reconstruction.hpp"
#include "rhosphere/scenarios.hpp"

namespace rhosphere::cli {

/// Invalid configuration; the message carries the source and line.
class ConfigError : public Error {
public:
    using Error::Error;
};

struct ConfigEntry {
    std::string key;
    std::string value;
    /// 1-based line in the file; 0 for command-line overrides.
    std::size_t line = 0;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

inline bool valid_key(std::string_view key) {
    if (key.empty() || key.front() == '.' || key.back() == '.') return false;
    return std::all_of(key.begin(), key.end(), [](char c) {
        return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' || c == '.';
    });
}

}  // namespace detail

/// Flat key = value document. '#' starts a comment; blank lines are ignored.
class ConfigFile {
public:
    ConfigFile() = default;

    static ConfigFile parse(std::string_view text, std::string source) {
        ConfigFile cfg;
        cfg.source_ = std::move(source);
        std::size_t line_no = 0;
        std::size_t pos = 0;
        while (pos <= text.size()) {
            const auto end = text.find('\n', pos);
            std::string_view line = text.substr(pos, end == std::string_view::npos ? text.size() - pos : end - pos);
            pos = end == std::string_view::npos ? text.size() + 1 : end + 1;
            ++line_no;
            if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
            line = detail::trim(line);
            if (line.empty()) continue;
            const auto eq = line.find('=');
            if (eq == std::string_view::npos) cfg.fail(line_no, "expected 'key = value'");
            const auto key = detail::trim(line.substr(0, eq));
            const auto value = detail::trim(line.substr(eq + 1));
            if (!detail::valid_key(key)) cfg.fail(line_no, "invalid key '" + std::string(key) + "'");
            if (value.empty()) cfg.fail(line_no, "missing value for '" + std::string(key) + "'");
            if (const auto* prev = cfg.find(key))
                cfg.fail(line_no, "duplicate key '" + std::string(key) + "' (first set on line " +
                                      std::to_string(prev->line) + ")");
            cfg.entries_.push_back({std::string(key), std::string(value), line_no});
        }
        return cfg;
    }

    static ConfigFile load(const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw ConfigError(path + ": cannot open config file");
        std::stringstream ss;
        ss << in.rdbuf();
        return parse(ss.str(), path);
    }

    /// Sets or replaces a value, attributing it to `line` (0: command line).
    void set(const std::string& key, const std::string& value, std::size_t line = 0) {
        for (auto& e : entries_)
            if (e.key == key) {
                e.value = value;
                e.line = line;
                return;
            }
        entries_.push_back({key, value, line});
    }

    void erase_prefix(std::string_view prefix) {
        std::erase_if(entries_, [&](const ConfigEntry& e) { return e.key.rfind(prefix, 0) == 0; });
    }

    const ConfigEntry* find(std::string_view key) const {
        for (const auto& e : entries_)
            if (e.key == key) return &e;
        return nullptr;
    }

    const std::vector<ConfigEntry>& entries() const { return entries_; }
    const std::string& source() const { return source_; }

    std::string where(std::size_t line) const {
        if (line == 0) return "command line";
        return (source_.empty() ? std::string("config") : source_) + ":" + std::to_string(line);
    }

    [[noreturn]] void fail(std::size_t line, const std::string& message) const {
        throw ConfigError(where(line) + ": " + message);
    }

private:
    std::string source_;
    std::vector<ConfigEntry> entries_;
};

struct OutputConfig {
    std::string timeseries = "timeseries.csv";
    std::string metadata = "metadata.txt";
    std::string events = "events.csv";
    std::size_t snapshot_stride = 100;
    /// Eulerian output nodes; 0 means the Lagrangian grid size.
    std::size_t m = 0;
};

struct OracleConfig {
    /// 0 means the integrator's step.
    double dt = 0.0;
    EulerianOptions options{};
};

struct RunConfig {
    InitialSpec initial{scenario::Sine{1.0, 1}, 256};
    IntegratorConfig integrator{};
    /// dt derived from the step-size heuristic when true.
    bool dt_auto = true;
    OutputConfig outputs{};
    double flat_eps = kDefaultFlatEps;
    OracleConfig oracle{};
    std::vector<double> compare_times;
    std::size_t validate_states = 100;
    std::uint64_t seed = 20240601;

    std::size_t eulerian_nodes() const { return outputs.m == 0 ? initial.n : outputs.m; }
};

namespace detail {

inline const std::set<std::string>& known_keys() {
    static const std::set<std::string> keys{
        "initial.kind",          "initial.n",          "initial.c",
        "initial.amplitude",     "initial.wavenumber", "initial.cosines",
        "initial.sines",         "initial.p",          "initial.q1",
        "initial.q2",            "initial.mollifier_width",
        "integrator.dt",         "integrator.t_end",   "integrator.projection",
        "integrator.breaking_eps", "integrator.flat_eps", "integrator.kernel_mode",
        "integrator.quadrature", "outputs.snapshot_stride", "outputs.m",
        "outputs.csv",           "outputs.metadata",   "outputs.events",
        "reconstruction.flat_eps", "oracle.dt",        "oracle.slope_cap",
        "oracle.resolution_tol", "compare.times",      "validate.states",
        "seed",
    };
    return keys;
}

inline bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

class Reader {
public:
    explicit Reader(const ConfigFile& file) : file_(file) {}

    const ConfigEntry* entry(std::string_view key) {
        used_.insert(std::string(key));
        return file_.find(key);
    }

    std::optional<double> number(std::string_view key) {
        const auto* e = entry(key);
        if (e == nullptr) return std::nullopt;
        return parse_number(*e, e->value);
    }

    std::optional<std::size_t> count(std::string_view key) {
        const auto* e = entry(key);
        if (e == nullptr) return std::nullopt;
        return parse_count(*e, e->value);
    }

    std::optional<bool> boolean(std::string_view key) {
        const auto* e = entry(key);
        if (e == nullptr) return std::nullopt;
        if (e->value == "true") return true;
        if (e->value == "false") return false;
        fail(*e, "expected true or false, got '" + e->value + "'");
    }

    std::optional<std::string> word(std::string_view key, std::initializer_list<std::string_view> allowed) {
        const auto* e = entry(key);
        if (e == nullptr) return std::nullopt;
        for (auto a : allowed)
            if (e->value == a) return e->value;
        std::string list;
        for (auto a : allowed) list += (list.empty() ? "" : ", ") + std::string(a);
        fail(*e, "unknown value '" + e->value + "' (expected one of: " + list + ")");
    }

    std::optional<std::vector<double>> numbers(std::string_view key) {
        const auto* e = entry(key);
        if (e == nullptr) return std::nullopt;
        std::vector<double> out;
        std::string_view rest = e->value;
        while (true) {
            const auto comma = rest.find(',');
            const auto item = trim(rest.substr(0, comma));
            if (item.empty()) fail(*e, "empty item in list");
            out.push_back(parse_number(*e, item));
            if (comma == std::string_view::npos) break;
            rest = rest.substr(comma + 1);
        }
        return out;
    }

    std::optional<std::string> file_name(std::string_view key) {
        const auto* e = entry(key);
        if (e == nullptr) return std::nullopt;
        if (e->value.find_first_of("/\\") != std::string::npos || e->value == "." || e->value == "..")
            fail(*e, "output names must be plain file names inside --out");
        return e->value;
    }

    [[noreturn]] void fail(const ConfigEntry& e, const std::string& message) const {
        file_.fail(e.line, e.key + ": " + message);
    }

    [[noreturn]] void fail_key(std::string_view key, const std::string& message) const {
        if (const auto* e = file_.find(key)) fail(*e, message);
        throw ConfigError(std::string(key) + ": " + message);
    }

    /// Keys present in the file that were never read.
    void reject_unused(const std::string& context) const {
        for (const auto& e : file_.entries()) {
            if (e.key.rfind("sweep.", 0) == 0) continue;
            if (!known_keys().count(e.key)) fail(e, "unknown key");
            if (!used_.count(e.key)) fail(e, "does not apply to " + context);
        }
    }

private:
    double parse_number(const ConfigEntry& e, std::string_view text) const {
        double v = 0.0;
        const auto* first = text.data();
        const auto* last = text.data() + text.size();
        if (!text.empty() && *first == '+') ++first;
        const auto res = std::from_chars(first, last, v);
        if (res.ec != std::errc() || res.ptr != last || !std::isfinite(v))
            fail(e, "expected a finite number, got '" + std::string(text) + "'");
        return v;
    }

    std::size_t parse_count(const ConfigEntry& e, std::string_view text) const {
        unsigned long long v = 0;
        const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
        if (res.ec != std::errc() || res.ptr != text.data() + text.size())
            fail(e, "expected a non-negative integer, got '" + std::string(text) + "'");
        return static_cast<std::size_t>(v);
    }

    const ConfigFile& file_;
    std::set<std::string> used_;
};

}  // namespace detail

/// Typed run configuration. Every key is range-checked; keys that do not
/// apply (unknown keys, or shape parameters of another initial.kind) are
/// rejected with their line number.
inline RunConfig build_run_config(const ConfigFile& file) {
    detail::Reader rd(file);
    RunConfig cfg;

    const std::string kind = rd.word("initial.kind", {"constant", "sine", "fourier", "peakon_pair"}).value_or("sine");
    if (auto n = rd.count("initial.n")) {
        if (!detail::is_power_of_two(*n) || *n < kMinGridSize || *n > (std::size_t{1} << 22))
            rd.fail_key("initial.n", "must be a power of two in [16, 4194304]");
        cfg.initial.n = *n;
    }
    if (kind == "constant") {
        cfg.initial.kind = scenario::Constant{rd.number("initial.c").value_or(0.0)};
    } else if (kind == "sine") {
        scenario::Sine s;
        s.amplitude = rd.number("initial.amplitude").value_or(1.0);
        if (auto k = rd.count("initial.wavenumber")) {
            if (*k < 1) rd.fail_key("initial.wavenumber", "must be >= 1");
            s.wavenumber = static_cast<int>(*k);
        }
        cfg.initial.kind = s;
    } else if (kind == "fourier") {
        scenario::Fourier f;
        f.cosines = rd.numbers("initial.cosines").value_or(std::vector<double>{});
        f.sines = rd.numbers("initial.sines").value_or(std::vector<double>{});
        if (f.cosines.empty() && f.sines.empty())
            rd.fail_key("initial.kind", "fourier needs initial.cosines or initial.sines");
        if (!f.sines.empty() && f.sines[0] != 0.0) rd.fail_key("initial.sines", "the k = 0 sine coefficient must be 0");
        if (std::max(f.cosines.size(), f.sines.size()) > cfg.initial.n / 2)
            rd.fail_key("initial.cosines", "more modes than the grid resolves");
        cfg.initial.kind = f;
    } else {
        scenario::PeakonPair p;
        p.p = rd.number("initial.p").value_or(1.0);
        p.q1 = rd.number("initial.q1").value_or(0.25);
        p.q2 = rd.number("initial.q2").value_or(0.75);
        p.mollifier_width = rd.number("initial.mollifier_width").value_or(0.0);
        if (p.mollifier_width < 0.0) rd.fail_key("initial.mollifier_width", "must be >= 0");
        if (std::abs(std::remainder(p.q1 - p.q2, 1.0)) < 1e-12) rd.fail_key("initial.q2", "must differ from q1");
        cfg.initial.kind = p;
    }

    if (const auto* e = rd.entry("integrator.dt"); e != nullptr && e->value != "auto") {
        const auto dt = rd.number("integrator.dt");
        if (!(*dt > 0.0)) rd.fail(*e, "must be positive or 'auto'");
        cfg.integrator.dt = *dt;
        cfg.dt_auto = false;
    }
    if (auto t = rd.number("integrator.t_end")) {
        if (*t < 0.0) rd.fail_key("integrator.t_end", "must be >= 0");
        cfg.integrator.t_end = *t;
    }
    if (auto p = rd.boolean("integrator.projection")) cfg.integrator.projection = *p;
    if (auto v = rd.number("integrator.breaking_eps")) {
        if (!(*v > 0.0)) rd.fail_key("integrator.breaking_eps", "must be positive");
        cfg.integrator.breaking_eps = *v;
    }
    if (auto v = rd.number("integrator.flat_eps")) {
        if (!(*v > 0.0)) rd.fail_key("integrator.flat_eps", "must be positive");
        cfg.integrator.flat_eps = *v;
    }
    if (auto m = rd.word("integrator.kernel_mode", {"fast", "direct"}))
        cfg.integrator.kernel.mode = *m == "fast" ? kernel::Mode::fast : kernel::Mode::direct;
    if (auto q = rd.word("integrator.quadrature", {"corrected", "trapezoid"}))
        cfg.integrator.kernel.quadrature = *q == "corrected" ? Quadrature::corrected : Quadrature::trapezoid;

    if (auto s = rd.count("outputs.snapshot_stride")) {
        if (*s < 1) rd.fail_key("outputs.snapshot_stride", "must be >= 1");
        cfg.outputs.snapshot_stride = *s;
    }
    cfg.integrator.snapshot_stride = cfg.outputs.snapshot_stride;
    if (auto m = rd.count("outputs.m")) {
        if (!detail::is_power_of_two(*m) || *m < kMinGridSize) rd.fail_key("outputs.m", "must be a power of two >= 16");
        cfg.outputs.m = *m;
    }
    if (auto f = rd.file_name("outputs.csv")) cfg.outputs.timeseries = *f;
    if (auto f = rd.file_name("outputs.metadata")) cfg.outputs.metadata = *f;
    if (auto f = rd.file_name("outputs.events")) cfg.outputs.events = *f;

    if (auto v = rd.number("reconstruction.flat_eps")) {
        if (!(*v > 0.0 && *v < 1.0)) rd.fail_key("reconstruction.flat_eps", "must lie in (0, 1)");
        cfg.flat_eps = *v;
    }
    if (auto v = rd.number("oracle.dt")) {
        if (!(*v > 0.0)) rd.fail_key("oracle.dt", "must be positive");
        cfg.oracle.dt = *v;
    }
    if (auto v = rd.number("oracle.slope_cap")) {
        if (!(*v > 0.0)) rd.fail_key("oracle.slope_cap", "must be positive");
        cfg.oracle.options.slope_cap = *v;
    }
    if (auto v = rd.number("oracle.resolution_tol")) {
        if (!(*v > 0.0 && *v <= 1.0)) rd.fail_key("oracle.resolution_tol", "must lie in (0, 1]");
        cfg.oracle.options.resolution_tol = *v;
    }
    if (auto times = rd.numbers("compare.times")) {
        for (double t : *times)
            if (t < 0.0) rd.fail_key("compare.times", "times must be >= 0");
        cfg.compare_times = *times;
        std::sort(cfg.compare_times.begin(), cfg.compare_times.end());
    }
    if (auto v = rd.count("validate.states")) {
        if (*v < 1) rd.fail_key("validate.states", "must be >= 1");
        cfg.validate_states = *v;
    }
    if (auto v = rd.count("seed")) cfg.seed = *v;

    rd.reject_unused("initial.kind = " + kind);
    return cfg;
}

/// One sweep axis: a config key and the values it takes.
struct SweepAxis {
    std::string key;
    std::vector<std::string> values;
    std::size_t line = 0;
};

inline std::vector<SweepAxis> sweep_axes(const ConfigFile& file) {
    std::vector<SweepAxis> axes;
    for (const auto& e : file.entries()) {
        if (e.key.rfind("sweep.", 0) != 0) continue;
        SweepAxis axis{e.key.substr(6), {}, e.line};
        if (!detail::known_keys().count(axis.key)) file.fail(e.line, "sweep over unknown key '" + axis.key + "'");
        if (axis.key == "initial.cosines" || axis.key == "initial.sines" || axis.key == "compare.times")
            file.fail(e.line, "list-valued key '" + axis.key + "' cannot be swept");
        std::string_view rest = e.value;
        while (true) {
            const auto comma = rest.find(',');
            const auto item = detail::trim(rest.substr(0, comma));
            if (item.empty()) file.fail(e.line, e.key + ": empty item in list");
            axis.values.emplace_back(item);
            if (comma == std::string_view::npos) break;
            rest = rest.substr(comma + 1);
        }
        axes.push_back(std::move(axis));
    }
    return axes;
}

}  // namespace rhosphere::cli

#endif  // RHOSPHERE_CLI_CONFIG_HPP
