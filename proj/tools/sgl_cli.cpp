// Command-line front end: simulate, learn, experiment, sweep.
//
// Exit codes: 0 success, 1 invalid config, 2 runtime failure, 3 divergence.

#include "sgl/sgl.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitRuntime = 2;
constexpr int kExitDiverged = 3;

struct ConfigFlags {
    std::string config_file;
    std::optional<long> agents;
    std::optional<int> states;
    std::optional<std::string> signals;
    std::optional<double> edge_prob;
    std::optional<double> delta;
    std::optional<double> mu;
    std::optional<long> iters;
    std::optional<int> true_state;
    std::optional<sgl::Seed> seed_graph, seed_weights, seed_likelihoods, seed_signals;
    std::optional<std::string> mode;
    std::vector<long> regen_at;
    std::vector<std::string> set_state_at;
    bool test_mode = false;
    std::string out = "out";

    void attach(CLI::App* app) {
        app->add_option("--config", config_file, "JSON config file (flags override its values)");
        app->add_option("--agents", agents, "Number of agents N");
        app->add_option("--states", states, "Number of hypotheses");
        app->add_option("--signals", signals, "Signal alphabet size, one value or a comma list per agent");
        app->add_option("--edge-prob", edge_prob, "Erdos-Renyi arc probability");
        app->add_option("--delta", delta, "Adaptation step-size of the social learning rule");
        app->add_option("--mu", mu, "Learning rate of the graph estimator");
        app->add_option("--iters", iters, "Number of iterations T");
        app->add_option("--true-state", true_state, "Initial true hypothesis index");
        app->add_option("--seed-graph", seed_graph);
        app->add_option("--seed-weights", seed_weights);
        app->add_option("--seed-likelihoods", seed_likelihoods);
        app->add_option("--seed-signals", seed_signals);
        app->add_option("--mode", mode, "known | estimated | both");
        app->add_option("--regen-graph-at", regen_at, "Regenerate the graph at this iteration (repeatable)");
        app->add_option("--set-state-at", set_state_at, "ITER:STATE true-state change (repeatable)");
        app->add_flag("--test-mode", test_mode, "Record private signals and compute steady-state diagnostics");
        app->add_option("--out", out, "Output directory");
    }

    sgl::ExperimentConfig build() const {
        sgl::ExperimentConfig c = config_file.empty() ? sgl::ExperimentConfig{} : sgl::load_config(config_file);
        if (agents) c.agents = *agents;
        if (states) c.states = *states;
        if (signals) c.signals = parse_signals(*signals);
        if (edge_prob) c.edge_prob = *edge_prob;
        if (delta) c.delta = *delta;
        if (mu) c.mu = *mu;
        if (iters) c.iters = *iters;
        if (true_state) c.true_state = *true_state;
        if (seed_graph) c.seeds.graph = *seed_graph;
        if (seed_weights) c.seeds.weights = *seed_weights;
        if (seed_likelihoods) c.seeds.likelihoods = *seed_likelihoods;
        if (seed_signals) c.seeds.signals = *seed_signals;
        if (mode) c.mode = sgl::parse_run_mode(*mode);
        if (test_mode) c.test_mode = true;
        if (!regen_at.empty() || !set_state_at.empty()) c.schedule = build_schedule(c);
        c.validate();
        return c;
    }

private:
    static std::vector<sgl::Index> parse_signals(const std::string& text) {
        std::vector<sgl::Index> out;
        std::stringstream in(text);
        std::string field;
        while (std::getline(in, field, ',')) {
            try {
                out.push_back(std::stol(field));
            } catch (const std::exception&) {
                throw sgl::ConfigError("bad --signals value '" + text + "'");
            }
        }
        if (out.empty()) throw sgl::ConfigError("--signals is empty");
        return out;
    }

    sgl::EventSchedule build_schedule(const sgl::ExperimentConfig& c) const {
        std::vector<sgl::ScheduledEvent> events;
        for (long it : regen_at)
            events.push_back({it, sgl::Event::regenerate_graph(sgl::derive_seed(c.seeds.graph, static_cast<std::uint64_t>(it)))});
        for (const auto& spec : set_state_at) {
            const auto colon = spec.find(':');
            if (colon == std::string::npos) throw sgl::ConfigError("--set-state-at expects ITER:STATE, got '" + spec + "'");
            try {
                events.push_back({std::stol(spec.substr(0, colon)), sgl::Event::set_true_state(std::stoi(spec.substr(colon + 1)))});
            } catch (const std::logic_error&) {
                throw sgl::ConfigError("--set-state-at expects ITER:STATE, got '" + spec + "'");
            }
        }
        std::sort(events.begin(), events.end(), [](const auto& a, const auto& b) { return a.iteration < b.iteration; });
        sgl::EventSchedule schedule;
        try {
            for (const auto& e : events) schedule.add(e.iteration, e.event);
        } catch (const sgl::InvalidArgument& e) {
            throw sgl::ConfigError(e.what());
        }
        return schedule;
    }
};

std::vector<double> parse_grid(const std::string& text) {
    std::vector<double> out;
    std::stringstream in(text);
    std::string field;
    while (std::getline(in, field, ',')) {
        if (field.empty()) continue;
        try {
            out.push_back(std::stod(field));
        } catch (const std::exception&) {
            throw sgl::ConfigError("bad grid value '" + field + "'");
        }
    }
    return out;
}

void print_summary(const sgl::ExperimentResult& r) {
    for (const auto& m : r.modes) {
        std::cout << sgl::to_string(m.mode) << ": initial msd " << m.msd.front() << ", steady-state msd "
                  << sgl::tail_mean(m.msd, 0.1);
        if (m.adjacency) std::cout << ", edge accuracy " << sgl::edge_accuracy(*m.adjacency, r.final_graph().adjacency());
        if (m.diverged) std::cout << ", DIVERGED at iteration " << m.diverged_at;
        std::cout << '\n';
    }
    if (r.diagnostics)
        std::cout << "steady-state bound " << r.diagnostics->bound << " (nu " << r.diagnostics->nu << ", kappa "
                  << r.diagnostics->kappa << ")\n";
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Online graph learning from social-learning belief streams"};
    app.require_subcommand(1);

    ConfigFlags sim_flags, exp_flags, sweep_flags;
    auto* simulate = app.add_subcommand("simulate", "Run the forward social learning model and record the belief stream");
    sim_flags.attach(simulate);

    auto* experiment = app.add_subcommand("experiment", "Simulate and learn the graph end to end");
    exp_flags.attach(experiment);

    auto* sweep = app.add_subcommand("sweep", "Steady-state MSD over a grid of mu and/or delta");
    sweep_flags.attach(sweep);
    std::string mu_grid, delta_grid;
    unsigned jobs = std::max(1u, std::thread::hardware_concurrency());
    sweep->add_option("--mu-grid", mu_grid, "Comma-separated learning rates");
    sweep->add_option("--delta-grid", delta_grid, "Comma-separated model step-sizes");
    sweep->add_option("--jobs", jobs, "Concurrent runs");

    auto* learn = app.add_subcommand("learn", "Learn the graph from a recorded belief stream");
    std::string learn_in, learn_out = "learned", learn_mode = "estimated";
    std::optional<double> learn_mu;
    learn->add_option("--in", learn_in, "Directory written by 'simulate'")->required();
    learn->add_option("--out", learn_out, "Output directory");
    learn->add_option("--mu", learn_mu, "Learning rate (default: manifest value)");
    learn->add_option("--mode", learn_mode, "known | estimated");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (*simulate) {
            const auto config = sim_flags.build();
            sgl::simulate_to_files(config, sim_flags.out);
            std::cout << "wrote " << config.iters << " snapshots to " << sim_flags.out << '\n';
        } else if (*experiment) {
            const auto config = exp_flags.build();
            const auto result = sgl::run_experiment(config);
            sgl::write_bundle(result, exp_flags.out);
            print_summary(result);
            if (result.diverged() || (result.diagnostics && !result.diagnostics->step_stable)) return kExitDiverged;
        } else if (*sweep) {
            const auto config = sweep_flags.build();
            const auto rows = sgl::sweep(config, parse_grid(mu_grid), parse_grid(delta_grid), jobs);
            std::filesystem::create_directories(sweep_flags.out);
            sgl::write_sweep(std::filesystem::path(sweep_flags.out) / "sweep.csv", rows);
            sgl::write_json(std::filesystem::path(sweep_flags.out) / "manifest.json", sgl::manifest_json(config));
            bool diverged = false;
            for (const auto& r : rows) {
                std::cout << "mu " << r.mu << " delta " << r.delta << ": known " << r.steady_known << ", estimated "
                          << r.steady_estimated << (r.diverged ? "  DIVERGED" : "") << '\n';
                diverged = diverged || r.diverged;
            }
            if (diverged) return kExitDiverged;
        } else if (*learn) {
            const auto manifest = sgl::config_from_manifest(std::filesystem::path(learn_in) / "manifest.json");
            const auto mode = learn_mode == "known" ? sgl::StateMode::known : sgl::StateMode::estimated;
            if (learn_mode != "known" && learn_mode != "estimated")
                throw sgl::ConfigError("learn --mode must be known or estimated");
            const auto r = sgl::learn_from_files(learn_in, learn_mu.value_or(manifest.mu), mode, manifest.edges);
            std::filesystem::create_directories(learn_out);
            const std::filesystem::path out(learn_out);
            sgl::io::write_matrix(out / "learned_A.csv", r.estimate);
            if (r.adjacency) sgl::io::write_mask(out / "adjacency.csv", *r.adjacency);
            if (!r.msd.empty()) {
                auto f = sgl::io::open_output(out / "msd.csv");
                f << "iteration,msd,mode,event\n";
                for (std::size_t i = 0; i < r.msd.size(); ++i)
                    f << (i + 1) << ',' << sgl::io::format_double(r.msd[i]) << ',' << learn_mode << ",\n";
                std::cout << "final msd " << r.msd.back() << '\n';
            }
            std::cout << "learned from " << r.snapshots << " snapshots\n";
            if (!r.estimate.allFinite()) return kExitDiverged;
        }
    } catch (const sgl::ConfigError& e) {
        std::cerr << "invalid config: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitOk;
}
