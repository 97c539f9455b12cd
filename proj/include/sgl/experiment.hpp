#pragma once

#include "sgl/config.hpp"
#include "sgl/diagnostics.hpp"
#include "sgl/edges.hpp"
#include "sgl/graph.hpp"
#include "sgl/inverse.hpp"
#include "sgl/io.hpp"
#include "sgl/likelihood.hpp"
#include "sgl/simulation.hpp"

#include <algorithm>
#include <filesystem>
#include <future>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

namespace sgl {

struct ModeResult {
    StateMode mode = StateMode::known;
    std::vector<double> msd;  // one entry per iteration, after that iteration's update
    Matrix estimate;
    std::optional<Mask> adjacency;  // empty when two-means finds no separation
    std::string edge_note;
    bool diverged = false;
    long diverged_at = 0;
    std::vector<int> used_states;  // state whose mean ratio matrix drove each update
};

struct ExperimentResult {
    ExperimentConfig config;
    LikelihoodModel model;
    std::vector<CombinationMatrix> graphs;  // one per graph epoch
    int graph_attempts = 0;
    std::vector<int> true_states;  // per iteration
    std::vector<int> graph_epochs;  // per iteration
    std::vector<ModeResult> modes;
    std::optional<TheoremDiagnostics> diagnostics;
    std::string diagnostics_note;

    const CombinationMatrix& final_graph() const { return graphs.back(); }
    bool diverged() const {
        return std::any_of(modes.begin(), modes.end(), [](const ModeResult& m) { return m.diverged; });
    }
    const ModeResult* find(StateMode m) const {
        for (const auto& r : modes)
            if (r.mode == m) return &r;
        return nullptr;
    }
};

/// Mean of the last `fraction` of a trajectory (at least one sample).
inline double tail_mean(std::span<const double> values, double fraction) {
    detail::require(!values.empty(), "tail_mean: empty trajectory");
    const auto n = std::max<std::size_t>(1, static_cast<std::size_t>(static_cast<double>(values.size()) * fraction));
    return std::accumulate(values.end() - static_cast<std::ptrdiff_t>(n), values.end(), 0.0) / static_cast<double>(n);
}

inline double window_mean(std::span<const double> values, std::size_t begin, std::size_t end) {
    detail::require(begin < end && end <= values.size(), "window_mean: bad window");
    return std::accumulate(values.begin() + static_cast<std::ptrdiff_t>(begin),
                           values.begin() + static_cast<std::ptrdiff_t>(end), 0.0) /
           static_cast<double>(end - begin);
}

/// Generates the model and graph, runs the forward protocol and feeds the
/// public stream to one learner per requested mode.
inline ExperimentResult run_experiment(const ExperimentConfig& config) {
    config.validate();

    ExperimentResult result;
    result.config = config;
    const auto sizes = config.signal_sizes();
    result.model = gen_likelihoods(config.states, sizes, config.seeds.likelihoods,
                                   {config.likelihood_floor, config.kl_min, config.max_attempts});
    const auto draw = gen_erdos_renyi(config.agents, config.edge_prob, config.seeds.graph, config.max_attempts);
    result.graph_attempts = draw.attempts;
    result.graphs.push_back(random_combination_weights(draw.adjacency, config.seeds.weights));

    const SimulationSettings settings{config.delta, config.iters,    config.true_state,    config.edge_prob,
                                      config.max_attempts, config.seeds.signals, config.test_mode};

    std::vector<OnlineGraphLearner> learners;
    for (StateMode m : config.state_modes()) {
        learners.emplace_back(result.model, config.mu, config.delta, m);
        ModeResult r;
        r.mode = m;
        r.msd.reserve(static_cast<std::size_t>(config.iters));
        r.used_states.reserve(static_cast<std::size_t>(config.iters));
        result.modes.push_back(std::move(r));
    }
    result.true_states.reserve(static_cast<std::size_t>(config.iters));
    result.graph_epochs.reserve(static_cast<std::size_t>(config.iters));

    const long burn_in = static_cast<long>(config.burn_in_fraction * static_cast<double>(config.iters));
    MomentAccumulator moments(config.agents);
    std::optional<int> cached_state;
    LogRatioMatrix cached_mean;

    run_simulation(settings, result.model, result.graphs.front(), config.schedule,
                   [&](const BeliefSnapshot& snap, const GroundTruth& truth) {
                       if (truth.graph_epoch + 1 > static_cast<int>(result.graphs.size()))
                           result.graphs.push_back(*truth.graph);
                       result.true_states.push_back(truth.true_state);
                       result.graph_epochs.push_back(truth.graph_epoch);
                       const Matrix& target = truth.graph->weights();
                       const double blowup = config.divergence_factor * std::max(1.0, target.squaredNorm());

                       for (std::size_t m = 0; m < learners.size(); ++m) {
                           ModeResult& r = result.modes[m];
                           if (r.diverged) {
                               r.msd.push_back(std::numeric_limits<double>::infinity());
                               r.used_states.push_back(-1);
                               continue;
                           }
                           r.used_states.push_back(learners[m].observe(snap.psi, truth.true_state));
                           const double err = msd(learners[m].estimate(), target);
                           if (!std::isfinite(err) || err > blowup) {
                               r.diverged = true;
                               r.diverged_at = snap.iteration;
                               r.msd.push_back(std::numeric_limits<double>::infinity());
                           } else {
                               r.msd.push_back(err);
                           }
                       }

                       if (config.test_mode) {
                           if (cached_state != truth.true_state) {
                               cached_mean = mean_likelihood_matrix(result.model, truth.true_state);
                               cached_state = truth.true_state;
                           }
                           moments.add_likelihood(truth.private_ratios->values, cached_mean.values);
                           if (snap.iteration > burn_in) moments.add_lambda(compute_lambda(snap.psi).values);
                       }
                   });

    for (std::size_t m = 0; m < learners.size(); ++m) {
        ModeResult& r = result.modes[m];
        r.estimate = learners[m].estimate();
        if (r.diverged || !r.estimate.allFinite()) {
            r.edge_note = "estimate diverged";
            continue;
        }
        try {
            r.adjacency = classify_edges(r.estimate, config.edges);
        } catch (const NoSeparation& e) {
            r.edge_note = e.what();
        }
    }

    if (config.test_mode) {
        try {
            result.diagnostics = theorem_diagnostics(moments, config.delta, config.mu);
        } catch (const InsufficientSamples& e) {
            result.diagnostics_note = e.what();
        }
    }
    return result;
}

namespace detail {

inline std::string event_marker(const EventSchedule& schedule, long iteration) {
    for (const auto& e : schedule.events()) {
        if (e.iteration != iteration) continue;
        if (e.event.kind == Event::Kind::regenerate_graph) return "regenerate_graph";
        return "set_true_state:" + std::to_string(e.event.state);
    }
    return {};
}

inline nlohmann::json number_or_null(double x) { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(); }

} // namespace detail

inline nlohmann::json manifest_json(const ExperimentConfig& config) {
    return {{"format", "sgl-manifest-1"}, {"config", to_json(config)}};
}

inline ExperimentConfig config_from_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read manifest '" + path.string() + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("manifest is not valid JSON: " + std::string(e.what()));
    }
    if (!j.contains("config")) throw ConfigError("manifest has no config section");
    return config_from_json(j["config"]);
}

inline nlohmann::json summary_json(const ExperimentResult& r) {
    nlohmann::json modes = nlohmann::json::array();
    const Mask& truth = r.final_graph().adjacency();
    for (const auto& m : r.modes) {
        nlohmann::json entry{{"mode", to_string(m.mode)},
                             {"initial_msd", detail::number_or_null(m.msd.front())},
                             {"final_msd", detail::number_or_null(m.msd.back())},
                             {"steady_state_msd", detail::number_or_null(tail_mean(m.msd, 0.1))},
                             {"diverged", m.diverged}};
        if (m.diverged) entry["diverged_at"] = m.diverged_at;
        if (m.adjacency)
            entry["edge_accuracy"] = edge_accuracy(*m.adjacency, truth);
        else
            entry["edge_note"] = m.edge_note;
        modes.push_back(entry);
    }
    return {{"graph_attempts", r.graph_attempts}, {"graph_epochs", r.graphs.size()}, {"modes", modes}};
}

inline nlohmann::json diagnostics_json(const TheoremDiagnostics& d) {
    return {{"alpha", d.alpha}, {"gamma", d.gamma},       {"nu", d.nu},
            {"kappa", d.kappa}, {"bound", detail::number_or_null(d.bound)}, {"divergent", d.divergent},
            {"step_stable", d.step_stable}};
}

inline void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
    auto out = io::open_output(path);
    out << j.dump(2) << '\n';
}

/// Writes every artifact of a run into `dir` (created if needed).
inline void write_bundle(const ExperimentResult& r, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw Error("cannot create output directory '" + dir.string() + "': " + ec.message());

    write_json(dir / "manifest.json", manifest_json(r.config));
    io::write_likelihoods(dir / "likelihoods.csv", r.model);
    for (std::size_t e = 0; e < r.graphs.size(); ++e) {
        io::write_matrix(dir / ("true_A_epoch" + std::to_string(e) + ".csv"), r.graphs[e].weights());
        io::write_mask(dir / ("true_adjacency_epoch" + std::to_string(e) + ".csv"), r.graphs[e].adjacency());
    }
    {
        auto out = io::open_output(dir / "msd.csv");
        out << "iteration,msd,mode,event\n";
        for (const auto& m : r.modes) {
            const std::string name = to_string(m.mode);
            for (std::size_t i = 0; i < m.msd.size(); ++i) {
                const long it = static_cast<long>(i) + 1;
                out << it << ',' << io::format_double(m.msd[i]) << ',' << name << ','
                    << detail::event_marker(r.config.schedule, it) << '\n';
            }
        }
    }
    {
        auto out = io::open_output(dir / "states.csv");
        out << "iteration,true_state,graph_epoch";
        for (const auto& m : r.modes) out << ',' << to_string(m.mode) << "_state";
        out << '\n';
        for (std::size_t i = 0; i < r.true_states.size(); ++i) {
            out << (i + 1) << ',' << r.true_states[i] << ',' << r.graph_epochs[i];
            for (const auto& m : r.modes) out << ',' << m.used_states[i];
            out << '\n';
        }
    }
    for (const auto& m : r.modes) {
        const std::string name = to_string(m.mode);
        io::write_matrix(dir / ("learned_A_" + name + ".csv"), m.estimate);
        if (m.adjacency) io::write_mask(dir / ("adjacency_" + name + ".csv"), *m.adjacency);
    }
    write_json(dir / "summary.json", summary_json(r));
    if (r.diagnostics) write_json(dir / "diagnostics.json", diagnostics_json(*r.diagnostics));
}

// -- parameter sweeps --------------------------------------------------------------

struct SweepRow {
    double mu = 0.0;
    double delta = 0.0;
    double steady_known = std::numeric_limits<double>::quiet_NaN();
    double steady_estimated = std::numeric_limits<double>::quiet_NaN();
    std::optional<double> bound;
    bool diverged = false;

    friend bool operator==(const SweepRow&, const SweepRow&) = default;
};

/// One run per (mu, delta) grid point; an empty axis keeps the template
/// value. Steady-state MSD is the mean over the final 10% of iterations.
/// Rows come back sorted by (mu, delta).
inline std::vector<SweepRow> sweep(const ExperimentConfig& base, std::vector<double> mus, std::vector<double> deltas,
                                   unsigned jobs = 1) {
    if (mus.empty()) mus.push_back(base.mu);
    if (deltas.empty()) deltas.push_back(base.delta);
    std::vector<ExperimentConfig> grid;
    for (double mu : mus)
        for (double d : deltas) {
            ExperimentConfig c = base;
            c.mu = mu;
            c.delta = d;
            grid.push_back(c);
        }
    std::sort(grid.begin(), grid.end(), [](const auto& a, const auto& b) {
        return a.mu != b.mu ? a.mu < b.mu : a.delta < b.delta;
    });

    auto run_point = [](const ExperimentConfig& c) {
        SweepRow row{c.mu, c.delta};
        ExperimentResult r;
        try {
            r = run_experiment(c);
        } catch (const std::exception& e) {
            throw Error("sweep point mu=" + io::format_double(c.mu) + " delta=" + io::format_double(c.delta) + ": " +
                        e.what());
        }
        for (const auto& m : r.modes) {
            const double s = tail_mean(m.msd, 0.1);
            (m.mode == StateMode::known ? row.steady_known : row.steady_estimated) = s;
        }
        row.diverged = r.diverged();
        if (r.diagnostics) {
            if (!r.diagnostics->step_stable) row.diverged = true;
            if (!r.diagnostics->divergent) row.bound = r.diagnostics->bound;
        }
        return row;
    };

    std::vector<SweepRow> rows(grid.size());
    jobs = std::max(1u, jobs);
    for (std::size_t start = 0; start < grid.size(); start += jobs) {
        const std::size_t stop = std::min(grid.size(), start + jobs);
        std::vector<std::future<SweepRow>> pending;
        for (std::size_t i = start; i < stop; ++i) pending.push_back(std::async(std::launch::async, run_point, grid[i]));
        for (std::size_t i = start; i < stop; ++i) rows[i] = pending[i - start].get();
    }
    return rows;
}

inline void write_sweep(const std::filesystem::path& path, const std::vector<SweepRow>& rows) {
    auto out = io::open_output(path);
    out << "mu,delta,steady_msd_known,steady_msd_estimated,bound,diverged\n";
    for (const auto& r : rows)
        out << io::format_double(r.mu) << ',' << io::format_double(r.delta) << ',' << io::format_double(r.steady_known)
            << ',' << io::format_double(r.steady_estimated) << ',' << (r.bound ? io::format_double(*r.bound) : "")
            << ',' << (r.diverged ? 1 : 0) << '\n';
}

// -- forward-only runs and learning from recorded streams -------------------------

/// Forward simulation only: writes the public belief stream, the likelihood
/// model, the ground-truth trace and the true graphs.
inline void simulate_to_files(const ExperimentConfig& config, const std::filesystem::path& dir) {
    config.validate();
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw Error("cannot create output directory '" + dir.string() + "': " + ec.message());

    const auto model = gen_likelihoods(config.states, config.signal_sizes(), config.seeds.likelihoods,
                                       {config.likelihood_floor, config.kl_min, config.max_attempts});
    const auto graph =
        random_combination_matrix(config.agents, config.edge_prob, config.seeds.graph, config.seeds.weights,
                                  config.max_attempts);
    write_json(dir / "manifest.json", manifest_json(config));
    io::write_likelihoods(dir / "likelihoods.csv", model);
    io::write_matrix(dir / "true_A_epoch0.csv", graph.weights());
    io::write_mask(dir / "true_adjacency_epoch0.csv", graph.adjacency());

    io::BeliefStreamWriter beliefs(dir / "beliefs.csv");
    io::TruthWriter truth(dir / "truth.csv", dir / "signals.csv", config.test_mode);
    const SimulationSettings settings{config.delta, config.iters,    config.true_state,    config.edge_prob,
                                      config.max_attempts, config.seeds.signals, config.test_mode};
    int epoch = 0;
    run_simulation(settings, model, graph, config.schedule, [&](const BeliefSnapshot& s, const GroundTruth& t) {
        if (t.graph_epoch != epoch) {
            epoch = t.graph_epoch;
            io::write_matrix(dir / ("true_A_epoch" + std::to_string(epoch) + ".csv"), t.graph->weights());
            io::write_mask(dir / ("true_adjacency_epoch" + std::to_string(epoch) + ".csv"), t.graph->adjacency());
        }
        beliefs.write(s);
        truth.write(t);
    });
}

struct LearnResult {
    Matrix estimate;
    std::optional<Mask> adjacency;
    std::vector<double> msd;  // empty when no true graph is available
    long snapshots = 0;
};

/// Observer-only pipeline over a directory written by simulate_to_files.
/// Known-state mode reads the state trace from truth.csv; MSD is reported
/// when the true graphs are present.
inline LearnResult learn_from_files(const std::filesystem::path& dir, double mu, StateMode mode,
                                    const EdgeMethod& edges = TwoMeans{}) {
    const ExperimentConfig config = config_from_manifest(dir / "manifest.json");
    const auto model = io::read_likelihoods(dir / "likelihoods.csv", config.likelihood_floor);
    detail::require(model.agents() == config.agents && model.states() == config.states,
                    "likelihood table does not match manifest");

    std::vector<io::TruthRow> truth;
    if (std::filesystem::exists(dir / "truth.csv")) truth = io::read_truth(dir / "truth.csv");
    if (mode == StateMode::known && truth.empty()) throw Error("known-state mode needs truth.csv");

    std::vector<Matrix> graphs;
    for (int e = 0; std::filesystem::exists(dir / ("true_A_epoch" + std::to_string(e) + ".csv")); ++e)
        graphs.push_back(io::read_matrix(dir / ("true_A_epoch" + std::to_string(e) + ".csv")));

    OnlineGraphLearner learner(model, mu, config.delta, mode);
    LearnResult out;
    out.snapshots = io::read_belief_stream(dir / "beliefs.csv", config.agents, config.states, [&](const BeliefSnapshot& s) {
        const io::TruthRow* row = nullptr;
        if (!truth.empty()) {
            const auto idx = static_cast<std::size_t>(s.iteration - 1);
            if (idx >= truth.size() || truth[idx].iteration != s.iteration)
                throw Error("truth.csv does not line up with beliefs.csv at iteration " + std::to_string(s.iteration));
            row = &truth[idx];
        }
        learner.observe(s.psi, row ? std::optional<int>(row->true_state) : std::nullopt);
        if (row && static_cast<std::size_t>(row->graph_epoch) < graphs.size())
            out.msd.push_back(msd(learner.estimate(), graphs[static_cast<std::size_t>(row->graph_epoch)]));
    });
    out.estimate = learner.estimate();
    if (out.estimate.allFinite()) {
        try {
            out.adjacency = classify_edges(out.estimate, edges);
        } catch (const NoSeparation&) {
        }
    }
    return out;
}

} // namespace sgl
