#ifndef RHOSPHERE_CLI_COMMANDS_HPP
#define RHOSPHERE_CLI_COMMANDS_HPP

#include <fftw3.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "rhosphere/cli/config.hpp"
#include "rhosphere/cli/format.hpp"
#include "rhosphere/eulerian.hpp"
#include "rhosphere/integrator.hpp"
#include "rhosphere/reconstruction.hpp"
#include "rhosphere/scenarios.hpp"
#include "rhosphere/validation.hpp"
#include "rhosphere/version.hpp"

namespace rhosphere::cli {

enum ExitCode : int { kOk = 0, kInvalidConfig = 1, kRunFailure = 2, kValidateFailure = 3 };

struct Streams {
    std::ostream& out;
    std::ostream& err;
};

namespace detail {

namespace fs = std::filesystem;

inline std::string kind_name(const InitialSpec& spec) {
    return std::visit(
        [](const auto& k) -> std::string {
            using T = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<T, scenario::Constant>) return "constant";
            else if constexpr (std::is_same_v<T, scenario::Sine>) return "sine";
            else if constexpr (std::is_same_v<T, scenario::Fourier>) return "fourier";
            else return "peakon_pair";
        },
        spec.kind);
}

inline std::string join(const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + format_number(v[i]);
    return s;
}

/// Writes the resolved configuration under config.* keys.
inline void describe_config(Metadata& md, const RunConfig& cfg) {
    md.set("config.initial.kind", kind_name(cfg.initial));
    md.set("config.initial.n", cfg.initial.n);
    std::visit(
        [&](const auto& k) {
            using T = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<T, scenario::Constant>) {
                md.set("config.initial.c", k.c);
            } else if constexpr (std::is_same_v<T, scenario::Sine>) {
                md.set("config.initial.amplitude", k.amplitude);
                md.set("config.initial.wavenumber", static_cast<std::size_t>(k.wavenumber));
            } else if constexpr (std::is_same_v<T, scenario::Fourier>) {
                md.set("config.initial.cosines", join(k.cosines));
                md.set("config.initial.sines", join(k.sines));
            } else {
                md.set("config.initial.p", k.p);
                md.set("config.initial.q1", k.q1);
                md.set("config.initial.q2", k.q2);
                md.set("config.initial.mollifier_width", k.mollifier_width);
            }
        },
        cfg.initial.kind);
    md.set("config.integrator.dt", cfg.integrator.dt);
    md.set("config.integrator.dt_source", cfg.dt_auto ? "auto" : "config");
    md.set("config.integrator.t_end", cfg.integrator.t_end);
    md.set("config.integrator.projection", cfg.integrator.projection);
    md.set("config.integrator.breaking_eps", cfg.integrator.breaking_eps);
    md.set("config.integrator.flat_eps", cfg.integrator.flat_eps);
    md.set("config.integrator.kernel_mode", cfg.integrator.kernel.mode == kernel::Mode::fast ? "fast" : "direct");
    md.set("config.integrator.quadrature",
           cfg.integrator.kernel.quadrature == Quadrature::corrected ? "corrected" : "trapezoid");
    md.set("config.outputs.snapshot_stride", cfg.outputs.snapshot_stride);
    md.set("config.outputs.m", cfg.eulerian_nodes());
    md.set("config.outputs.csv", cfg.outputs.timeseries);
    md.set("config.outputs.metadata", cfg.outputs.metadata);
    md.set("config.outputs.events", cfg.outputs.events);
    md.set("config.reconstruction.flat_eps", cfg.flat_eps);
    md.set("config.oracle.dt", cfg.oracle.dt > 0.0 ? cfg.oracle.dt : cfg.integrator.dt);
    md.set("config.oracle.slope_cap", cfg.oracle.options.slope_cap);
    md.set("config.oracle.resolution_tol", cfg.oracle.options.resolution_tol);
    md.set("config.compare.times", join(cfg.compare_times));
    md.set("config.validate.states", cfg.validate_states);
    md.set("config.seed", static_cast<std::size_t>(cfg.seed));
}

inline void describe_build(Metadata& md, const std::string& command) {
    md.set("version", kVersion);
    md.set("fftw_version", fftw_version);
    md.set("command", command);
}

inline void describe_conventions(Metadata& md, const RunConfig& cfg) {
    md.set("dt_heuristic", "dt = 0.5 / (n * max(1, sqrt(E0)))");
    md.set("h_sign_convention",
           "H subtracts the sinh(P(y) - P(x) - 1/2) integral over y > x, so that G_t = -H and F_x = rho^2 H");
    md.set("ux_invalid_sentinel", 1.0 / cfg.flat_eps);
    md.set("ux_invalid_rule", "rho^2 < flat_eps * max rho^2 gives valid_ux = 0 and ux = +-1/flat_eps");
}

struct Prepared {
    InitialData data;
    LagrangianState state;
    double e0 = 0.0;
    double dt_heuristic = 0.0;
};

/// Builds the initial state and resolves dt = auto.
inline Prepared prepare(RunConfig& cfg) {
    Prepared p{make_initial(cfg.initial), {}, 0.0, 0.0};
    p.state = lagrangian_initial(p.data.u0, p.data.u0x);
    p.e0 = energy(p.state, p.data.mu, cfg.integrator.kernel);
    p.dt_heuristic = default_dt(cfg.initial.n, p.e0);
    if (cfg.dt_auto) cfg.integrator.dt = p.dt_heuristic;
    return p;
}

inline std::string index_name(const std::string& stem, std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%05zu", i);
    return stem + "_" + buf + ".csv";
}

inline void write_series(const fs::path& path, const SimulationRecord& rec) {
    CsvWriter csv(path, {"t", "energy", "sphere_defect", "tangency_defect", "min_rho", "flat_measure", "mu_check",
                         "max_forcing", "min_amplitude"});
    for (const auto& r : rec.series)
        csv.row({format_number(r.t), format_number(r.energy), format_number(r.sphere_defect),
                 format_number(r.tangency_defect), format_number(r.min_rho), format_number(r.flat_measure),
                 format_number(r.mu_check), format_number(r.max_forcing), format_number(r.min_amplitude)});
    csv.close();
}

inline void write_events(const fs::path& path, const std::vector<BreakingEvent>& events) {
    CsvWriter csv(path, {"index", "time", "t_before", "t_after", "min_rho", "n_locations", "locations"});
    for (std::size_t i = 0; i < events.size(); ++i) {
        const auto& e = events[i];
        std::string locs;
        for (std::size_t j = 0; j < e.locations.size(); ++j) locs += (j ? ";" : "") + std::to_string(e.locations[j]);
        csv.row({std::to_string(i), format_number(e.time), format_number(e.t_before), format_number(e.t_after),
                 format_number(e.min_rho), std::to_string(e.locations.size()), locs});
    }
    csv.close();
}

/// Lagrangian-node snapshot (x, rho, rho_t, K, u, ux, valid_ux) and the
/// Eulerian reconstruction on m nodes. Returns max |u_x| over valid nodes.
inline double write_snapshot(const fs::path& dir, std::size_t index, const LagrangianState& s, double mu,
                             const RunConfig& cfg) {
    const std::size_t n = s.size();
    const KernelOptions& opts = cfg.integrator.kernel;
    const FlowMap map = flow_map(s, cfg.flat_eps, opts.quadrature);
    const GridFunction g = compute_G(s, mu, opts);
    const double threshold = cfg.flat_eps * (s.rho * s.rho).max();
    const double clamp = 1.0 / cfg.flat_eps;

    CsvWriter lag(dir / "snapshots" / index_name("snapshot", index), {"x", "rho", "rho_t", "K", "u", "ux", "valid_ux"});
    for (std::size_t j = 0; j < n; ++j) {
        const double r = s.rho[j];
        const bool valid = r * r >= threshold;
        const double ux = valid ? 2.0 * s.rho_t[j] / r : std::copysign(clamp, s.rho_t[j] * r);
        lag.row({format_number(GridFunction::node(j, n)), format_number(r), format_number(s.rho_t[j]),
                 format_number(map.k[j]), format_number(g[j]), format_number(ux), valid ? "1" : "0"});
    }
    lag.close();

    const EulerianField field = eulerian_velocity(s, mu, cfg.eulerian_nodes(), cfg.flat_eps, opts);
    CsvWriter eul(dir / "eulerian" / index_name("eulerian", index), {"y", "u", "ux", "valid_ux"});
    double max_slope = 0.0;
    for (std::size_t i = 0; i < field.u.size(); ++i) {
        eul.row({format_number(GridFunction::node(i, field.u.size())), format_number(field.u[i]),
                 format_number(field.ux[i]), field.valid_ux[i] ? "1" : "0"});
        if (field.valid_ux[i]) max_slope = std::max(max_slope, std::abs(field.ux[i]));
    }
    eul.close();
    return max_slope;
}

inline std::string point_name(std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "point_%03zu", i);
    return buf;
}

}  // namespace detail

/// Outcome of one simulation, used by simulate and by each sweep point.
struct SimulationOutcome {
    int exit_code = kOk;
    std::optional<double> breaking_time;
    double energy_drift = 0.0;
    double max_slope = 0.0;
    std::string message;
};

/// Runs evolve and writes time series, snapshots, events and metadata to
/// `out`. A failing step still writes everything computed before it.
inline SimulationOutcome simulate_to(RunConfig cfg, const std::filesystem::path& out) {
    namespace fs = std::filesystem;
    fs::create_directories(out / "snapshots");
    fs::create_directories(out / "eulerian");
    const detail::Prepared prep = detail::prepare(cfg);
    const double mu = prep.data.mu;

    SimulationOutcome outcome;
    SimulationRecord rec;
    std::optional<LagrangianState> last_good;
    try {
        rec = evolve(prep.state, mu, cfg.integrator);
    } catch (const EvolveError& e) {
        rec = e.partial();
        last_good = e.last_good();
        outcome.exit_code = kRunFailure;
        outcome.message = e.what();
    }
    if (last_good && (rec.snapshots.empty() || rec.snapshots.back().t != last_good->t))
        rec.snapshots.push_back(*last_good);

    detail::write_series(out / cfg.outputs.timeseries, rec);
    detail::write_events(out / cfg.outputs.events, rec.events);
    CsvWriter index(out / "snapshots.csv", {"index", "t", "snapshot", "eulerian"});
    for (std::size_t i = 0; i < rec.snapshots.size(); ++i) {
        outcome.max_slope = std::max(outcome.max_slope, detail::write_snapshot(out, i, rec.snapshots[i], mu, cfg));
        index.row({std::to_string(i), format_number(rec.snapshots[i].t), "snapshots/" + detail::index_name("snapshot", i),
                   "eulerian/" + detail::index_name("eulerian", i)});
    }
    index.close();

    for (const auto& r : rec.series)
        outcome.energy_drift = std::max(outcome.energy_drift, std::abs(r.energy - prep.e0) / std::max(prep.e0, 1e-300));
    if (!rec.events.empty()) outcome.breaking_time = rec.events.front().time;

    Metadata md;
    detail::describe_build(md, "simulate");
    detail::describe_config(md, cfg);
    detail::describe_conventions(md, cfg);
    md.set("dt_heuristic_value", prep.dt_heuristic);
    md.set("mu", mu);
    md.set("energy_initial", prep.e0);
    md.set("steps", rec.series.empty() ? std::size_t{0} : rec.series.size() - 1);
    md.set("t_reached", rec.series.empty() ? 0.0 : rec.series.back().t);
    md.set("snapshots", rec.snapshots.size());
    md.set("breaking_events", rec.events.size());
    md.set("energy_drift_max", outcome.energy_drift);
    md.set("max_slope", outcome.max_slope);
    md.set("status", outcome.exit_code == kOk ? "ok" : "step_failure");
    if (!outcome.message.empty()) md.set("failure", outcome.message);
    md.write(out / cfg.outputs.metadata);
    return outcome;
}

inline int cmd_simulate(const RunConfig& cfg, const std::filesystem::path& out, Streams io) {
    const SimulationOutcome o = simulate_to(cfg, out);
    if (o.exit_code != kOk) {
        io.err << "simulate: " << o.message << " (last good state written)\n";
        return o.exit_code;
    }
    io.out << "simulate: ok, energy drift " << format_number(o.energy_drift) << ", "
           << (o.breaking_time ? "first breaking at t = " + format_number(*o.breaking_time) : "no breaking") << '\n';
    return kOk;
}

/// Runs the identity suite, prints the table, writes validation.csv and
/// metadata. Exit 3 names every failing identity.
inline int cmd_validate(const RunConfig& cfg, const std::filesystem::path& out, bool flip_h_sign, Streams io) {
    std::filesystem::create_directories(out);
    ValidationOptions opts;
    opts.n = cfg.initial.n;
    opts.seed = cfg.seed;
    opts.states = cfg.validate_states;
    opts.flip_h_sign = flip_h_sign;
    const ValidationReport report = run_validation(opts);

    CsvWriter csv(out / "validation.csv", {"identity", "defect", "tolerance", "status"});
    io.out << std::left << std::setw(52) << "identity" << std::setw(26) << "defect" << std::setw(26) << "tolerance"
           << "status\n";
    for (const auto& c : report.checks) {
        csv.row({"\"" + c.name + "\"", format_number(c.defect), format_number(c.tolerance), c.pass ? "pass" : "fail"});
        io.out << std::left << std::setw(52) << c.name << std::setw(26) << format_number(c.defect) << std::setw(26)
               << format_number(c.tolerance) << (c.pass ? "pass" : "FAIL") << '\n';
    }
    csv.close();

    Metadata md;
    detail::describe_build(md, "validate");
    md.set("n", opts.n);
    md.set("seed", static_cast<std::size_t>(opts.seed));
    md.set("states", opts.states);
    md.set("fault_injection", flip_h_sign ? "flip_h_sign" : "none");
    md.set("status", report.all_pass() ? "pass" : "fail");
    md.write(out / cfg.outputs.metadata);

    if (report.all_pass()) return kOk;
    for (const auto& c : report.checks)
        if (!c.pass)
            io.err << "validate: identity failed: " << c.name << " (defect " << format_number(c.defect)
                   << " > tolerance " << format_number(c.tolerance) << ")\n";
    return kValidateFailure;
}

/// Evolves both solvers and writes (t, l2, linf, status) rows. Exit 2 when
/// the oracle blows up before the earliest requested time.
inline int cmd_compare(RunConfig cfg, const std::filesystem::path& out, Streams io) {
    namespace fs = std::filesystem;
    fs::create_directories(out);
    if (cfg.compare_times.empty()) cfg.compare_times = {0.0, cfg.integrator.t_end};
    const double t_last = cfg.compare_times.back();
    cfg.integrator.t_end = t_last;
    const detail::Prepared prep = detail::prepare(cfg);
    const double mu = prep.data.mu;
    const double oracle_dt = cfg.oracle.dt > 0.0 ? cfg.oracle.dt : cfg.integrator.dt;

    const EulerianTrajectory traj = eulerian_evolve(prep.data.u0, oracle_dt, t_last, cfg.oracle.options);
    Metadata md;
    detail::describe_build(md, "compare");
    detail::describe_config(md, cfg);
    detail::describe_conventions(md, cfg);
    md.set("dt_heuristic_value", prep.dt_heuristic);
    md.set("mu", mu);
    md.set("oracle_blowup", traj.blowup ? format_number(*traj.blowup) : std::string("none"));
    md.set("oracle_blowup_estimate", traj.blowup_estimate ? format_number(*traj.blowup_estimate) : std::string("none"));
    md.set("oracle_blowup_reason", to_string(traj.reason));

    SimulationRecord rec;
    int code = kOk;
    std::string failure;
    try {
        rec = evolve(prep.state, mu, cfg.integrator);
    } catch (const EvolveError& e) {
        rec = e.partial();
        code = kRunFailure;
        failure = e.what();
    }

    CsvWriter csv(out / "compare.csv", {"t", "l2", "linf", "status"});
    const std::size_t m = cfg.eulerian_nodes();
    for (double t : cfg.compare_times) {
        const bool past_blowup = traj.blowup && t >= *traj.blowup;
        const bool past_record = rec.snapshots.empty() || t > rec.snapshots.back().t + 1e-12;
        if (past_blowup || past_record) {
            csv.row({format_number(t), "", "", past_blowup ? "past_oracle_blowup" : "past_lagrangian_failure"});
            continue;
        }
        const CompareResult r = compare(rec, mu, traj, t, m);
        csv.row({format_number(t), format_number(r.l2), format_number(r.linf), "ok"});
    }
    csv.close();

    if (traj.blowup && *traj.blowup <= cfg.compare_times.front()) {
        md.set("status", "oracle_blowup_before_first_time");
        md.write(out / cfg.outputs.metadata);
        io.err << "compare: oracle blew up at t = " << format_number(*traj.blowup) << " (" << to_string(traj.reason)
               << ", extrapolated blow-up time "
               << (traj.blowup_estimate ? format_number(*traj.blowup_estimate) : std::string("none"))
               << ") before the first requested time " << format_number(cfg.compare_times.front()) << '\n';
        return kRunFailure;
    }
    md.set("status", code == kOk ? "ok" : "step_failure");
    if (!failure.empty()) md.set("failure", failure);
    md.write(out / cfg.outputs.metadata);
    if (code != kOk) {
        io.err << "compare: " << failure << '\n';
        return code;
    }
    if (traj.blowup)
        io.out << "compare: oracle blow-up at t = " << format_number(*traj.blowup) << " (" << to_string(traj.reason)
               << ")\n";
    io.out << "compare: ok, " << cfg.compare_times.size() << " times written\n";
    return kOk;
}

/// Default worker count: RHO_SPHERE_WORKERS if set, else the hardware
/// concurrency. Throws ConfigError on a malformed variable.
inline std::size_t default_workers() {
    if (const char* env = std::getenv("RHO_SPHERE_WORKERS"); env != nullptr && *env != '\0') {
        const std::string text(env);
        std::size_t pos = 0;
        unsigned long v = 0;
        try {
            v = std::stoul(text, &pos);
        } catch (const std::exception&) {
            pos = 0;
        }
        if (pos != text.size() || v == 0) throw ConfigError("RHO_SPHERE_WORKERS must be a positive integer, got '" + text + "'");
        return v;
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

struct SweepPoint {
    std::vector<std::string> values;
    RunConfig config;
};

/// Cartesian product of the sweep axes applied to the template. Every point
/// is validated before anything runs.
inline std::vector<SweepPoint> expand_sweep(const ConfigFile& file, const std::vector<SweepAxis>& axes,
                                            const std::vector<ConfigEntry>& overrides) {
    std::vector<SweepPoint> points;
    std::vector<std::size_t> idx(axes.size(), 0);
    while (true) {
        ConfigFile point = file;
        point.erase_prefix("sweep.");
        SweepPoint sp;
        for (std::size_t a = 0; a < axes.size(); ++a) {
            point.set(axes[a].key, axes[a].values[idx[a]], axes[a].line);
            sp.values.push_back(axes[a].values[idx[a]]);
        }
        for (const auto& o : overrides) point.set(o.key, o.value, 0);
        sp.config = build_run_config(point);
        points.push_back(std::move(sp));
        std::size_t a = axes.size();
        while (a > 0) {
            --a;
            if (++idx[a] < axes[a].values.size()) break;
            idx[a] = 0;
            if (a == 0) return points;
        }
        if (axes.empty()) return points;
    }
}

inline int cmd_sweep(const std::vector<SweepAxis>& axes, const std::vector<SweepPoint>& points,
                     const std::filesystem::path& out, std::size_t workers, Streams io) {
    namespace fs = std::filesystem;
    fs::create_directories(out);
    std::vector<SimulationOutcome> outcomes(points.size());
    std::atomic<std::size_t> next{0};
    const auto work = [&]() {
        for (std::size_t i = next++; i < points.size(); i = next++) {
            try {
                outcomes[i] = simulate_to(points[i].config, out / detail::point_name(i));
            } catch (const std::exception& e) {
                outcomes[i].exit_code = kRunFailure;
                outcomes[i].message = e.what();
            }
        }
    };
    const std::size_t threads = std::max<std::size_t>(1, std::min(workers, points.size()));
    std::vector<std::thread> pool;
    for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(work);
    work();
    for (auto& t : pool) t.join();

    std::vector<std::string> header{"point"};
    for (const auto& a : axes) header.push_back(a.key);
    for (const char* c : {"status", "breaking_time", "energy_drift", "max_slope"}) header.emplace_back(c);
    CsvWriter csv(out / "summary.csv", header);
    std::size_t ok = 0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        const auto& o = outcomes[i];
        std::vector<std::string> row{std::to_string(i)};
        for (const auto& v : points[i].values) row.push_back(v);
        row.push_back(o.exit_code == kOk ? "ok" : "failed");
        row.push_back(o.breaking_time ? format_number(*o.breaking_time) : "");
        row.push_back(format_number(o.energy_drift));
        row.push_back(format_number(o.max_slope));
        csv.row(row);
        if (o.exit_code == kOk)
            ++ok;
        else
            io.err << "sweep: point " << i << " failed: " << o.message << '\n';
    }
    csv.close();
    io.out << "sweep: " << ok << " of " << points.size() << " points succeeded\n";
    return ok > 0 ? kOk : kRunFailure;
}

}  // namespace rhosphere::cli

#endif  // RHOSPHERE_CLI_COMMANDS_HPP
