#pragma once

// Measurement-driven control strategy, closed-loop simulation of the
// continuous vehicle, and word-level satisfaction checking.

#include "dubsynth/environment.hpp"
#include "dubsynth/mdp.hpp"
#include "dubsynth/synthesis.hpp"

#include <cstdint>
#include <memory>
#include <vector>

namespace dubsynth {

std::uint64_t splitmix64(std::uint64_t x);

// Counter-based stream: draw k of stream (seed, id) is a pure function of
// (seed, id, k).
class Rng {
public:
    Rng(std::uint64_t seed, std::uint64_t stream);

    std::uint64_t next();
    double uniform();  // [0, 1)
    double uniform(double lo, double hi);

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

class Strategy {
public:
    Strategy(std::shared_ptr<const TreeMdp> mdp, std::shared_ptr<const Solution> sol);

    int cursor() const { return cursor_; }
    // Blocks completed so far, i.e. the current satisfied-up-to index.
    int satisfied_up_to() const { return active_; }
    bool done() const;
    const std::vector<int> &path() const { return path_; }
    const TreeMdp &mdp() const { return *mdp_; }
    const Solution &solution() const { return *sol_; }

    // Control index at the cursor, or -1 once a leaf is reached.
    int next_control() const;
    // Measured interval [u + lo, u + hi] of one noise cell.
    void observe(int u, const Interval &measured);
    void observe_cell(int u, int cell);

private:
    void enter(int s);

    std::shared_ptr<const TreeMdp> mdp_;
    std::shared_ptr<const Solution> sol_;
    int cursor_ = 0;
    int active_ = 0;
    std::vector<int> path_;
};

// Literal evaluation over point-exact letters of 2^Pi.
bool check_word(const Word &w, const Formula &f, const std::vector<std::string> &propositions);

struct StageRecord {
    int control = -1;  // -1 when the strategy was already done (drives u = 0)
    double eps = 0.0;
    double w = 0.0;
    int cell = -1;
    int cursor = 0;
    int satisfied_up_to = 0;
};

struct SimTrace {
    std::uint64_t seed = 0;
    std::uint64_t trial = 0;
    std::vector<StageRecord> stages;
    std::vector<TimedPoint> positions;
    Word word;
    bool satisfied = false;
    int satisfied_up_to = 0;
    bool finished = false;  // strategy reached a leaf
};

// Advances a vehicle one stage under the strategy with a given noise draw.
StageRecord run_stage(Strategy &st, Pose &pose, double eps, double time,
                      std::vector<TimedPoint> &positions);

SimTrace simulate(const Environment &env, const VehicleParams &params,
                  std::shared_ptr<const TreeMdp> mdp, std::shared_ptr<const Solution> sol,
                  std::uint64_t seed, std::uint64_t trial = 0);

struct ConfidenceInterval {
    double lo = 0.0;
    double hi = 0.0;
};

ConfidenceInterval wilson(std::size_t successes, std::size_t trials, double z);

struct Estimate {
    std::size_t trials = 0;
    std::size_t successes = 0;
    double frequency = 0.0;
    ConfidenceInterval wilson95;  // z = 1.96
};

Estimate estimate(const Environment &env, const VehicleParams &params,
                  std::shared_ptr<const TreeMdp> mdp, std::shared_ptr<const Solution> sol,
                  std::size_t trials, std::uint64_t seed, unsigned threads = 0);

}  // namespace dubsynth
