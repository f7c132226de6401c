#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "rhosphere/cli/commands.hpp"

namespace {

using namespace rhosphere;
using namespace rhosphere::cli;

constexpr std::size_t kDefaultValidateGrid = 128;

struct Overrides {
    std::optional<std::string> n, dt, t_end, seed;
    std::optional<std::size_t> workers;

    std::vector<ConfigEntry> entries() const {
        std::vector<ConfigEntry> out;
        if (n) out.push_back({"initial.n", *n, 0});
        if (dt) out.push_back({"integrator.dt", *dt, 0});
        if (t_end) out.push_back({"integrator.t_end", *t_end, 0});
        if (seed) out.push_back({"seed", *seed, 0});
        return out;
    }
};

struct Invocation {
    std::string config;
    std::string out = "out";
    Overrides overrides;
    bool inject_flip_h = false;
};

ConfigFile load(const Invocation& inv) {
    return inv.config.empty() ? ConfigFile::parse("", "<defaults>") : ConfigFile::load(inv.config);
}

RunConfig resolve(const Invocation& inv, std::size_t default_n = 0) {
    ConfigFile file = load(inv);
    file.erase_prefix("sweep.");
    if (default_n != 0 && file.find("initial.n") == nullptr) file.set("initial.n", std::to_string(default_n), 0);
    for (const auto& e : inv.overrides.entries()) file.set(e.key, e.value, 0);
    return build_run_config(file);
}

int dispatch(const std::string& command, const Invocation& inv) {
    const Streams io{std::cout, std::cerr};
    const std::filesystem::path out(inv.out);
    if (command == "simulate") return cmd_simulate(resolve(inv), out, io);
    if (command == "validate") return cmd_validate(resolve(inv, kDefaultValidateGrid), out, inv.inject_flip_h, io);
    if (command == "compare") return cmd_compare(resolve(inv), out, io);

    const ConfigFile file = load(inv);
    const auto axes = sweep_axes(file);
    if (axes.empty()) throw ConfigError(file.source() + ": sweep needs at least one sweep.<key> = v1, v2, ... entry");
    const auto points = expand_sweep(file, axes, inv.overrides.entries());
    const std::size_t workers = inv.overrides.workers ? *inv.overrides.workers : default_workers();
    return cmd_sweep(axes, points, out, workers, io);
}

void add_common(CLI::App* sub, Invocation& inv) {
    sub->add_option("--config", inv.config, "Configuration file (key = value)")->check(CLI::ExistingFile);
    sub->add_option("--out", inv.out, "Output directory")->capture_default_str();
    sub->add_option("--n", inv.overrides.n, "Override initial.n");
    sub->add_option("--dt", inv.overrides.dt, "Override integrator.dt (a number or auto)");
    sub->add_option("--t-end", inv.overrides.t_end, "Override integrator.t_end");
    sub->add_option("--seed", inv.overrides.seed, "Override seed");
    sub->add_option("--workers", inv.overrides.workers, "Sweep worker threads (default RHO_SPHERE_WORKERS)")
        ->check(CLI::PositiveNumber);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Periodic Camassa-Holm solver in sphere variables"};
    app.set_version_flag("--version", std::string(kVersion));
    app.require_subcommand(1);

    Invocation inv;
    const std::vector<std::pair<std::string, std::string>> commands{
        {"simulate", "Evolve one initial state and write time series, snapshots and events"},
        {"validate", "Check the operator identities on pseudorandom states"},
        {"compare", "Compare the reconstructed field against the Eulerian spectral oracle"},
        {"sweep", "Run the cartesian grid of sweep.* values"},
    };
    for (const auto& [name, help] : commands) {
        CLI::App* sub = app.add_subcommand(name, help);
        add_common(sub, inv);
        if (name == "validate")
            sub->add_flag("--inject-fault-flip-h", inv.inject_flip_h, "Negate H inside the suite")->group("");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kInvalidConfig;
    }

    const std::string command = app.get_subcommands().front()->get_name();
    try {
        return dispatch(command, inv);
    } catch (const ConfigError& e) {
        std::cerr << "invalid config: " << e.what() << '\n';
        return kInvalidConfig;
    } catch (const DomainError& e) {
        std::cerr << "invalid config: " << e.what() << '\n';
        return kInvalidConfig;
    } catch (const IoError& e) {
        std::cerr << "i/o error: " << e.what() << '\n';
        return kInvalidConfig;
    } catch (const std::exception& e) {
        std::cerr << command << ": " << e.what() << '\n';
        return kRunFailure;
    }
}
