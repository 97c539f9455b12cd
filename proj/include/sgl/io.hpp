#pragma once

#include "sgl/belief.hpp"
#include "sgl/simulation.hpp"
#include "sgl/types.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

namespace sgl::io {

/// Shortest text that round-trips the double (17 significant digits).
inline std::string format_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

inline double parse_double(const std::string& s) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0') throw Error("not a number: '" + s + "'");
    return v;
}

inline long parse_long(const std::string& s) {
    char* end = nullptr;
    const long v = std::strtol(s.c_str(), &end, 10);
    if (end == s.c_str() || *end != '\0') throw Error("not an integer: '" + s + "'");
    return v;
}

inline std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

inline std::ofstream open_output(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open '" + path.string() + "' for writing");
    return out;
}

inline std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open '" + path.string() + "' for reading");
    return in;
}

// -- dense matrices ---------------------------------------------------------

inline void write_matrix(std::ostream& out, const Matrix& m) {
    for (Index r = 0; r < m.rows(); ++r) {
        for (Index c = 0; c < m.cols(); ++c) {
            if (c) out << ',';
            out << format_double(m(r, c));
        }
        out << '\n';
    }
}

inline void write_matrix(const std::filesystem::path& path, const Matrix& m) {
    auto out = open_output(path);
    write_matrix(out, m);
}

inline void write_mask(const std::filesystem::path& path, const Mask& m) {
    auto out = open_output(path);
    for (Index r = 0; r < m.rows(); ++r) {
        for (Index c = 0; c < m.cols(); ++c) {
            if (c) out << ',';
            out << (m(r, c) ? '1' : '0');
        }
        out << '\n';
    }
}

inline Matrix read_matrix(const std::filesystem::path& path) {
    auto in = open_input(path);
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        for (const auto& f : split_csv(line)) row.push_back(parse_double(f));
        if (!rows.empty() && row.size() != rows.front().size())
            throw Error("ragged matrix in '" + path.string() + "'");
        rows.push_back(std::move(row));
    }
    Matrix m(static_cast<Index>(rows.size()), rows.empty() ? 0 : static_cast<Index>(rows.front().size()));
    for (Index r = 0; r < m.rows(); ++r)
        for (Index c = 0; c < m.cols(); ++c) m(r, c) = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
    return m;
}

inline Mask read_mask(const std::filesystem::path& path) { return (read_matrix(path).array() != 0.0).matrix(); }

// -- likelihood tables --------------------------------------------------------

inline void write_likelihoods(const std::filesystem::path& path, const LikelihoodModel& model) {
    auto out = open_output(path);
    out << "agent,signal,theta,beta\n";
    for (Index k = 0; k < model.agents(); ++k)
        for (Index z = 0; z < model.signals(k); ++z)
            for (int t = 0; t < model.states(); ++t)
                out << k << ',' << z << ',' << t << ',' << format_double(model.beta(k)(z, t)) << '\n';
}

inline LikelihoodModel read_likelihoods(const std::filesystem::path& path, double floor) {
    auto in = open_input(path);
    std::string line;
    std::getline(in, line);
    struct Entry {
        long agent, signal, theta;
        double beta;
    };
    std::vector<Entry> entries;
    long agents = 0, states = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto f = split_csv(line);
        if (f.size() != 4) throw Error("bad likelihood row: " + line);
        Entry e{parse_long(f[0]), parse_long(f[1]), parse_long(f[2]), parse_double(f[3])};
        agents = std::max(agents, e.agent + 1);
        states = std::max(states, e.theta + 1);
        entries.push_back(e);
    }
    std::vector<long> signals(static_cast<std::size_t>(agents), 0);
    for (const auto& e : entries)
        signals[static_cast<std::size_t>(e.agent)] = std::max(signals[static_cast<std::size_t>(e.agent)], e.signal + 1);
    std::vector<Matrix> tables;
    for (long k = 0; k < agents; ++k) tables.emplace_back(Matrix::Zero(signals[static_cast<std::size_t>(k)], states));
    for (const auto& e : entries) tables[static_cast<std::size_t>(e.agent)](e.signal, e.theta) = e.beta;
    return LikelihoodModel(std::move(tables), floor);
}

// -- belief stream --------------------------------------------------------------

/// Public belief stream: one row per (iteration, agent, state) with psi as a
/// probability.
class BeliefStreamWriter {
public:
    explicit BeliefStreamWriter(const std::filesystem::path& path) : out_(open_output(path)) {
        out_ << "iteration,agent,theta,psi\n";
    }

    void write(const BeliefSnapshot& s) {
        for (Index k = 0; k < s.psi.agents(); ++k)
            for (int t = 0; t < s.psi.states(); ++t)
                out_ << s.iteration << ',' << k << ',' << t << ',' << format_double(std::exp(s.psi.log_values(k, t)))
                     << '\n';
    }

private:
    std::ofstream out_;
};

/// Streams snapshots back in file order. Rows of one iteration must be
/// contiguous.
inline long read_belief_stream(const std::filesystem::path& path, Index agents, int states,
                               const std::function<void(const BeliefSnapshot&)>& sink) {
    auto in = open_input(path);
    std::string line;
    std::getline(in, line);
    if (line != "iteration,agent,theta,psi") throw Error("unexpected belief stream header in '" + path.string() + "'");

    BeliefSnapshot current{0, {Matrix::Zero(agents, states), BeliefKind::intermediate}};
    long filled = 0, count = 0;
    const long expected = static_cast<long>(agents) * states;
    auto flush = [&] {
        if (filled == 0) return;
        if (filled != expected)
            throw Error("incomplete snapshot at iteration " + std::to_string(current.iteration));
        sink(current);
        ++count;
        filled = 0;
    };
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto f = split_csv(line);
        if (f.size() != 4) throw Error("bad belief row: " + line);
        const long it = parse_long(f[0]);
        const long k = parse_long(f[1]);
        const long t = parse_long(f[2]);
        if (k < 0 || k >= agents || t < 0 || t >= states) throw Error("belief row out of range: " + line);
        if (it != current.iteration) {
            flush();
            if (count > 0 && it <= current.iteration) throw Error("belief stream iterations must increase");
            current.iteration = it;
        }
        current.psi.log_values(k, t) = std::log(parse_double(f[3]));
        ++filled;
    }
    flush();
    return count;
}

// -- ground truth -----------------------------------------------------------------

struct TruthRow {
    long iteration = 0;
    int true_state = 0;
    int graph_epoch = 0;
};

class TruthWriter {
public:
    TruthWriter(const std::filesystem::path& trace, const std::filesystem::path& signals, bool test_mode)
        : trace_(open_output(trace)) {
        trace_ << "iteration,true_state,graph_epoch\n";
        if (test_mode) {
            signals_ = open_output(signals);
            signals_ << "iteration,agent,signal\n";
        }
    }

    void write(const GroundTruth& t) {
        trace_ << t.iteration << ',' << t.true_state << ',' << t.graph_epoch << '\n';
        if (signals_.is_open())
            for (std::size_t k = 0; k < t.signals.size(); ++k)
                signals_ << t.iteration << ',' << k << ',' << t.signals[k] << '\n';
    }

private:
    std::ofstream trace_;
    std::ofstream signals_;
};

inline std::vector<TruthRow> read_truth(const std::filesystem::path& path) {
    auto in = open_input(path);
    std::string line;
    std::getline(in, line);
    std::vector<TruthRow> out;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto f = split_csv(line);
        if (f.size() != 3) throw Error("bad truth row: " + line);
        out.push_back({parse_long(f[0]), static_cast<int>(parse_long(f[1])), static_cast<int>(parse_long(f[2]))});
    }
    return out;
}

} // namespace sgl::io
