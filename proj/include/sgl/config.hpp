#pragma once

#include "sgl/edges.hpp"
#include "sgl/inverse.hpp"
#include "sgl/simulation.hpp"
#include "sgl/types.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

namespace sgl {

class ConfigError : public InvalidArgument {
public:
    using InvalidArgument::InvalidArgument;
};

enum class RunMode { known, estimated, both };

inline std::string to_string(RunMode m) {
    switch (m) {
    case RunMode::known: return "known";
    case RunMode::estimated: return "estimated";
    case RunMode::both: return "both";
    }
    return "?";
}

inline std::string to_string(StateMode m) { return m == StateMode::known ? "known" : "estimated"; }

inline RunMode parse_run_mode(const std::string& s) {
    if (s == "known") return RunMode::known;
    if (s == "estimated") return RunMode::estimated;
    if (s == "both") return RunMode::both;
    throw ConfigError("mode must be known, estimated or both (got '" + s + "')");
}

struct Seeds {
    Seed graph = 1;
    Seed weights = 2;
    Seed likelihoods = 3;
    Seed signals = 4;

    friend bool operator==(const Seeds&, const Seeds&) = default;
};

/// Everything needed to reproduce one run. The output directory is not part
/// of the config so that a manifest reruns identically anywhere.
struct ExperimentConfig {
    Index agents = 30;
    int states = 4;
    std::vector<Index> signals{4};  // one entry broadcasts to every agent
    double edge_prob = 0.2;
    double delta = 0.05;
    double mu = 0.01;
    long iters = 15000;
    int true_state = 0;
    double likelihood_floor = 0.01;
    double kl_min = 1e-3;
    int max_attempts = 1000;
    Seeds seeds;
    RunMode mode = RunMode::both;
    bool test_mode = false;
    EventSchedule schedule;
    double burn_in_fraction = 0.2;
    EdgeMethod edges = TwoMeans{};
    double divergence_factor = 1e3;

    std::vector<Index> signal_sizes() const {
        if (signals.size() == 1) return std::vector<Index>(static_cast<std::size_t>(agents), signals.front());
        return signals;
    }

    std::vector<StateMode> state_modes() const {
        switch (mode) {
        case RunMode::known: return {StateMode::known};
        case RunMode::estimated: return {StateMode::estimated};
        case RunMode::both: break;
        }
        return {StateMode::known, StateMode::estimated};
    }

    void validate() const {
        auto need = [](bool ok, const std::string& what) {
            if (!ok) throw ConfigError(what);
        };
        need(agents >= 1, "agents must be >= 1");
        need(states >= 2, "states must be >= 2");
        need(signals.size() == 1 || static_cast<Index>(signals.size()) == agents,
             "signals needs one entry or one per agent");
        for (Index s : signals) need(s >= 2, "every signal space needs at least two symbols");
        need(edge_prob > 0.0 && edge_prob <= 1.0, "edge_prob must lie in (0, 1]");
        need(delta > 0.0 && delta < 1.0, "delta must lie in (0, 1)");
        need(mu > 0.0, "mu must be positive");
        need(iters >= 1, "iters must be >= 1");
        need(true_state >= 0 && true_state < states, "true_state out of range");
        need(likelihood_floor > 0.0, "likelihood_floor must be positive");
        for (Index s : signals) need(likelihood_floor * static_cast<double>(s) < 1.0, "likelihood_floor too large");
        need(kl_min >= 0.0, "kl_min must be nonnegative");
        need(max_attempts >= 1, "max_attempts must be >= 1");
        need(burn_in_fraction >= 0.0 && burn_in_fraction < 1.0, "burn_in_fraction must lie in [0, 1)");
        need(divergence_factor > 1.0, "divergence_factor must exceed 1");
        try {
            schedule.validate(iters, states);
        } catch (const InvalidArgument& e) {
            throw ConfigError(e.what());
        }
    }
};

// -- JSON schema -----------------------------------------------------------------

inline nlohmann::json to_json(const ExperimentConfig& c) {
    using nlohmann::json;
    json events = json::array();
    for (const auto& e : c.schedule.events()) {
        if (e.event.kind == Event::Kind::set_true_state)
            events.push_back({{"iteration", e.iteration}, {"event", "set_true_state"}, {"state", e.event.state}});
        else
            events.push_back({{"iteration", e.iteration}, {"event", "regenerate_graph"}, {"seed", e.event.seed}});
    }
    json edges;
    if (const auto* t = std::get_if<Threshold>(&c.edges))
        edges = {{"method", "threshold"}, {"tau", t->tau}};
    else
        edges = {{"method", "two-means"}, {"max_iterations", std::get<TwoMeans>(c.edges).max_iterations}};
    return {
        {"agents", c.agents},
        {"states", c.states},
        {"signals", c.signals},
        {"edge_prob", c.edge_prob},
        {"delta", c.delta},
        {"mu", c.mu},
        {"iters", c.iters},
        {"true_state", c.true_state},
        {"likelihood_floor", c.likelihood_floor},
        {"kl_min", c.kl_min},
        {"max_attempts", c.max_attempts},
        {"seeds",
         {{"graph", c.seeds.graph},
          {"weights", c.seeds.weights},
          {"likelihoods", c.seeds.likelihoods},
          {"signals", c.seeds.signals}}},
        {"mode", to_string(c.mode)},
        {"test_mode", c.test_mode},
        {"schedule", events},
        {"burn_in_fraction", c.burn_in_fraction},
        {"edges", edges},
        {"divergence_factor", c.divergence_factor},
    };
}

namespace detail {

template <typename T>
void read_field(const nlohmann::json& j, const char* key, T& out) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config field '") + key + "': " + e.what());
    }
}

inline void reject_unknown(const nlohmann::json& j, const std::set<std::string>& known, const std::string& where) {
    for (const auto& [key, _] : j.items())
        if (!known.count(key)) throw ConfigError("unknown config key '" + key + "' in " + where);
}

} // namespace detail

/// Missing keys keep their defaults; unknown keys are rejected.
inline ExperimentConfig config_from_json(const nlohmann::json& j, ExperimentConfig c = {}) {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    detail::reject_unknown(j,
                           {"agents", "states", "signals", "edge_prob", "delta", "mu", "iters", "true_state",
                            "likelihood_floor", "kl_min", "max_attempts", "seeds", "mode", "test_mode", "schedule",
                            "burn_in_fraction", "edges", "divergence_factor"},
                           "config");
    detail::read_field(j, "agents", c.agents);
    detail::read_field(j, "states", c.states);
    if (j.contains("signals")) {
        if (j["signals"].is_number_integer())
            c.signals = {j["signals"].get<Index>()};
        else
            detail::read_field(j, "signals", c.signals);
    }
    detail::read_field(j, "edge_prob", c.edge_prob);
    detail::read_field(j, "delta", c.delta);
    detail::read_field(j, "mu", c.mu);
    detail::read_field(j, "iters", c.iters);
    detail::read_field(j, "true_state", c.true_state);
    detail::read_field(j, "likelihood_floor", c.likelihood_floor);
    detail::read_field(j, "kl_min", c.kl_min);
    detail::read_field(j, "max_attempts", c.max_attempts);
    if (j.contains("seeds")) {
        const auto& s = j["seeds"];
        detail::reject_unknown(s, {"graph", "weights", "likelihoods", "signals"}, "seeds");
        detail::read_field(s, "graph", c.seeds.graph);
        detail::read_field(s, "weights", c.seeds.weights);
        detail::read_field(s, "likelihoods", c.seeds.likelihoods);
        detail::read_field(s, "signals", c.seeds.signals);
    }
    if (j.contains("mode")) c.mode = parse_run_mode(j["mode"].get<std::string>());
    detail::read_field(j, "test_mode", c.test_mode);
    if (j.contains("schedule")) {
        EventSchedule schedule;
        for (const auto& e : j["schedule"]) {
            detail::reject_unknown(e, {"iteration", "event", "state", "seed"}, "schedule entry");
            const long it = e.at("iteration").get<long>();
            const std::string kind = e.at("event").get<std::string>();
            try {
                if (kind == "set_true_state")
                    schedule.add(it, Event::set_true_state(e.at("state").get<int>()));
                else if (kind == "regenerate_graph")
                    schedule.add(it, Event::regenerate_graph(e.at("seed").get<Seed>()));
                else
                    throw ConfigError("unknown event '" + kind + "'");
            } catch (const InvalidArgument& err) {
                throw ConfigError(err.what());
            }
        }
        c.schedule = std::move(schedule);
    }
    detail::read_field(j, "burn_in_fraction", c.burn_in_fraction);
    if (j.contains("edges")) {
        const auto& e = j["edges"];
        const std::string method = e.value("method", "two-means");
        if (method == "threshold")
            c.edges = Threshold{e.value("tau", 0.0)};
        else if (method == "two-means")
            c.edges = TwoMeans{e.value("max_iterations", 100)};
        else
            throw ConfigError("unknown edge method '" + method + "'");
    }
    detail::read_field(j, "divergence_factor", c.divergence_factor);
    return c;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config '" + path.string() + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config '" + path.string() + "' is not valid JSON: " + e.what());
    }
    return config_from_json(j);
}

} // namespace sgl
