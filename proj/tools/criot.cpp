// criot: analytic chain, Monte Carlo replay and region sweeps for a slotted
// opportunistic cognitive-radio IoT cell.

#include <cstdlib>
#include <exception>
#include <iostream>

#include "CLI11.hpp"
#include "criot/app.hpp"

namespace {

template <typename T>
void add_override(CLI::App& app, const std::string& flag, std::optional<T>& dst, const std::string& help) {
    app.add_option_function<T>(flag, [&dst](const T& v) { dst = v; }, help);
}

}  // namespace

int main(int argc, char** argv) {
    using namespace criot::app;

    CLI::App app{"Queueing, interference and power analysis of an opportunistic CR-IoT cell"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path;
    Overrides o;
    app.add_option("--config", config_path, "Configuration file (JSON key tree)")->required();
    app.add_option_function<std::string>("--out", [&o](const std::string& v) { o.out_dir = v; },
                                         "Output directory (default: current directory)");
    add_override(app, "--seed", o.seed, "Simulation seed (u64)");
    add_override(app, "--mu-on", o.mu_on, "ON-period rate mu_on (1/s)");
    add_override(app, "--mu-off", o.mu_off, "OFF-period rate mu_off (1/s)");
    add_override(app, "--beta", o.beta, "Activity factor; sets mu_off from mu_on");
    add_override(app, "--lambda", o.lambda, "Per-node packet rate (packets/s)");
    add_override(app, "--slot", o.slot, "Slot duration d (s)");
    add_override(app, "--nodes", o.nodes, "Nodes under the access point");
    add_override(app, "--capacity", o.capacity, "Buffer capacity K");
    add_override(app, "--p-d", o.p_d, "Detection probability P_D");
    add_override(app, "--p-f", o.p_f, "False-alarm probability P_F");
    add_override(app, "--theta", o.theta, "Idleness probability theta");
    add_override(app, "--xi", o.xi, "Charging probability xi");
    add_override(app, "--replications", o.replications, "Simulation replications");
    add_override(app, "--horizon", o.horizon, "Simulated slots per replication");
    add_override(app, "--warmup", o.warmup, "Warmup slots excluded from statistics");

    auto* analyze = app.add_subcommand("analyze", "Solve the chain and write metrics.csv");
    auto* simulate = app.add_subcommand("simulate", "Run the Monte Carlo simulator and write sim.csv");
    auto* sweep = app.add_subcommand("sweep", "Map critical beta / lambda over P_D or P_F into sweep.csv");
    auto* compare = app.add_subcommand("compare", "Simulation vs chain vs synchronized baseline into compare.csv");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        RunConfig cfg = load_config(config_path);
        finalize(cfg, o);
        const unsigned workers = criot::default_workers();
        CommandResult result;
        if (analyze->parsed()) {
            result = cmd_analyze(cfg);
        } else if (simulate->parsed()) {
            result = cmd_simulate(cfg, workers);
        } else if (sweep->parsed()) {
            result = cmd_sweep(cfg, workers);
        } else if (compare->parsed()) {
            result = cmd_compare(cfg, workers);
        }
        std::cout << result.summary << '\n';
        for (const auto& f : result.files) std::cout << "wrote " << f.string() << '\n';
        return EXIT_SUCCESS;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const criot::InvalidParameter& e) {
        std::cerr << "invalid parameter: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
