#pragma once

#include "sgl/belief.hpp"
#include "sgl/graph.hpp"
#include "sgl/likelihood.hpp"
#include "sgl/random.hpp"

#include <memory>
#include <optional>
#include <utility>
#include <vector>

namespace sgl {

struct Event {
    enum class Kind { set_true_state, regenerate_graph };

    Kind kind = Kind::set_true_state;
    int state = 0;  // set_true_state
    Seed seed = 0;  // regenerate_graph

    static Event set_true_state(int s) { return {Kind::set_true_state, s, 0}; }
    static Event regenerate_graph(Seed s) { return {Kind::regenerate_graph, 0, s}; }

    friend bool operator==(const Event&, const Event&) = default;
};

struct ScheduledEvent {
    long iteration = 0;
    Event event;

    friend bool operator==(const ScheduledEvent&, const ScheduledEvent&) = default;
};

/// Timed events, applied at the start of their iteration before signals are
/// drawn. Iterations are strictly increasing.
class EventSchedule {
public:
    EventSchedule() = default;

    EventSchedule& add(long iteration, Event event) {
        detail::require(iteration >= 1, "events must be scheduled at iteration >= 1");
        detail::require(events_.empty() || iteration > events_.back().iteration,
                        "event iterations must be strictly increasing");
        events_.push_back({iteration, event});
        return *this;
    }

    const std::vector<ScheduledEvent>& events() const { return events_; }
    bool empty() const { return events_.empty(); }

    void validate(long iterations, int states) const {
        for (const auto& e : events_) {
            detail::require(e.iteration >= 1 && e.iteration <= iterations,
                            "event at iteration " + std::to_string(e.iteration) + " outside run of " +
                                std::to_string(iterations));
            if (e.event.kind == Event::Kind::set_true_state)
                detail::require(e.event.state >= 0 && e.event.state < states, "event true state out of range");
        }
    }

    friend bool operator==(const EventSchedule&, const EventSchedule&) = default;

private:
    std::vector<ScheduledEvent> events_;
};

struct SimulationSettings {
    double delta = 0.05;
    long iterations = 0;
    int true_state = 0;
    double edge_prob = 0.2;  // used by regenerate_graph events
    int max_attempts = 1000;
    Seed signal_seed = 0;
    bool test_mode = false;  // record private signals in the ground truth
};

/// Public observation at one iteration: every agent's intermediate belief.
struct BeliefSnapshot {
    long iteration = 0;
    BeliefMatrix psi;
};

struct GroundTruth {
    long iteration = 0;
    int true_state = 0;
    int graph_epoch = 0;
    std::shared_ptr<const CombinationMatrix> graph;
    // Populated only in test mode.
    std::vector<Index> signals;
    std::optional<LogRatioMatrix> private_ratios;
};

/// One independent signal per agent drawn from beta_k(., state).
inline std::vector<Index> sample_observations(const LikelihoodModel& model, int state, Rng& rng) {
    detail::require(state >= 0 && state < model.states(), "sample_observations: state out of range");
    std::vector<Index> out(static_cast<std::size_t>(model.agents()));
    for (Index k = 0; k < model.agents(); ++k) out[static_cast<std::size_t>(k)] = rng.categorical(model.beta(k).col(state));
    return out;
}

inline CombinationMatrix regenerate_graph(Index agents, double edge_prob, Seed seed, int max_attempts) {
    return random_combination_matrix(agents, edge_prob, seed, derive_seed(seed, 1), max_attempts);
}

/// Steps the adapt-then-combine protocol one iteration at a time, starting
/// from uniform beliefs.
class Simulator {
public:
    Simulator(SimulationSettings settings, LikelihoodModel model, CombinationMatrix graph, EventSchedule schedule = {})
        : settings_(settings),
          model_(std::move(model)),
          graph_(std::make_shared<const CombinationMatrix>(std::move(graph))),
          schedule_(std::move(schedule)),
          rng_(settings.signal_seed),
          belief_(uniform_beliefs(model_.agents(), model_.states())),
          true_state_(settings.true_state) {
        detail::require(settings_.delta > 0.0 && settings_.delta <= 1.0, "delta must lie in (0, 1]");
        detail::require(settings_.iterations >= 0, "iterations must be nonnegative");
        detail::require(graph_->agents() == model_.agents(), "graph and likelihood model disagree on agent count");
        detail::require(true_state_ >= 0 && true_state_ < model_.states(), "true state out of range");
        schedule_.validate(settings_.iterations, model_.states());
    }

    bool done() const { return iteration_ >= settings_.iterations; }
    long iteration() const { return iteration_; }
    const LikelihoodModel& model() const { return model_; }
    const CombinationMatrix& graph() const { return *graph_; }
    int true_state() const { return true_state_; }

    std::pair<BeliefSnapshot, GroundTruth> step() {
        ++iteration_;
        apply_events();
        const auto signals = sample_observations(model_, true_state_, rng_);
        BeliefMatrix psi = adapt_step(belief_, signals, model_, settings_.delta);

        GroundTruth truth{iteration_, true_state_, epoch_, graph_, {}, std::nullopt};
        if (settings_.test_mode) {
            truth.private_ratios = log_likelihood_ratio_matrix(model_, signals);
            truth.signals = signals;
        }
        belief_ = combine_step(psi, *graph_);
        return {BeliefSnapshot{iteration_, std::move(psi)}, std::move(truth)};
    }

private:
    void apply_events() {
        const auto& events = schedule_.events();
        while (next_event_ < events.size() && events[next_event_].iteration == iteration_) {
            const Event& e = events[next_event_].event;
            if (e.kind == Event::Kind::set_true_state) {
                true_state_ = e.state;
            } else {
                graph_ = std::make_shared<const CombinationMatrix>(
                    regenerate_graph(model_.agents(), settings_.edge_prob, e.seed, settings_.max_attempts));
                ++epoch_;
            }
            ++next_event_;
        }
    }

    SimulationSettings settings_;
    LikelihoodModel model_;
    std::shared_ptr<const CombinationMatrix> graph_;
    EventSchedule schedule_;
    Rng rng_;
    BeliefMatrix belief_;
    int true_state_ = 0;
    int epoch_ = 0;
    long iteration_ = 0;
    std::size_t next_event_ = 0;
};

/// Runs the full horizon, handing each (snapshot, truth) pair to `sink`.
template <typename Sink>
void run_simulation(const SimulationSettings& settings, const LikelihoodModel& model, const CombinationMatrix& graph,
                    const EventSchedule& schedule, Sink&& sink) {
    Simulator sim(settings, model, graph, schedule);
    while (!sim.done()) {
        auto [snapshot, truth] = sim.step();
        sink(snapshot, truth);
    }
}

inline std::vector<std::pair<BeliefSnapshot, GroundTruth>> collect_simulation(const SimulationSettings& settings,
                                                                              const LikelihoodModel& model,
                                                                              const CombinationMatrix& graph,
                                                                              const EventSchedule& schedule = {}) {
    std::vector<std::pair<BeliefSnapshot, GroundTruth>> out;
    out.reserve(static_cast<std::size_t>(settings.iterations));
    run_simulation(settings, model, graph, schedule,
                   [&](const BeliefSnapshot& s, const GroundTruth& t) { out.emplace_back(s, t); });
    return out;
}

} // namespace sgl
