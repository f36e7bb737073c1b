#pragma once

// Noisy Dubins vehicle: closed-form arcs, gyroscope quantization of the
// actuator noise, uncertainty growth, and the reachability tree of the
// quantized system.

#include <array>
#include <cstddef>
#include <functional>
#include <vector>

namespace dubsynth {

inline constexpr double kTwoPi = 6.283185307179586476925286766559;

// Below this angular rate an arc is integrated as a straight segment.
inline constexpr double kStraightTolerance = 1e-9;

// Time samples per stage used for uncertainty and label scans.
inline constexpr int kStageSamples = 1024;

double wrap_angle(double theta);

struct Pose {
    double x = 0.0;
    double y = 0.0;
    double theta = 0.0;  // [0, 2pi)
};

struct Point {
    double x = 0.0;
    double y = 0.0;
};

inline Point position(const Pose &q) { return {q.x, q.y}; }

double distance(Point a, Point b);

struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    double mid() const { return 0.5 * (lo + hi); }
    double width() const { return hi - lo; }
};

// Uniform noise on [-eps_max, eps_max] cut into n equal measurement cells.
struct NoiseModel {
    double eps_max = 0.0;
    int n = 1;
    std::vector<Interval> cells;
    std::vector<double> reps;

    double cell_width() const { return 2.0 * eps_max / n; }
    double cell_probability() const { return 1.0 / n; }
    // Index of the cell holding eps; values on a shared endpoint go to the
    // upper cell, values outside the support are clamped.
    int cell_of(double eps) const;
};

NoiseModel make_noise_model(double eps_max, int n);

struct ControlSet {
    double rho = 1.0;
    std::array<double, 3> inputs{};  // {-1/rho, 0, 1/rho}

    static constexpr std::size_t size() { return 3; }
};

ControlSet make_control_set(double rho);

// Constant-rate trajectory piece q(start, w, t), t in [0, dt].
struct ArcSegment {
    Pose start;
    double w = 0.0;
    double dt = 0.0;
    Pose end;

    Pose at(double t) const;
};

Pose arc_pose(const Pose &start, double w, double t);
ArcSegment integrate_arc(const Pose &start, double w, double dt);

// Worst-case growth of the position-uncertainty radius over one stage:
// the representative arc is compared against the arcs driven by both cell
// endpoints, sampled densely in time.
double propagate_uncertainty(double r_prev, const Pose &start, double u, const Interval &cell,
                             double dt);

struct ReachNode {
    ArcSegment arc;  // degenerate (dt = 0) at the root
    int stage = 0;
    int control = -1;  // index into ControlSet::inputs
    int cell = -1;     // index into NoiseModel::cells
    double r = 0.0;    // uncertainty radius along the arc
    int parent = -1;
    int first_child = -1;
    int num_children = 0;
};

// Breadth-first arena: the children of a node are contiguous and ordered
// by (control ascending, cell ascending).
struct ReachTree {
    Pose q_init;
    int depth = 0;
    double dt = 0.0;
    ControlSet controls;
    NoiseModel noise;
    std::vector<ReachNode> nodes;

    const ReachNode &root() const { return nodes.front(); }
    std::size_t size() const { return nodes.size(); }
};

using TruncatePredicate = std::function<bool(const ReachNode &)>;

inline constexpr std::size_t kDefaultNodeCeiling = 2'000'000;

ReachTree build_reach_tree(const Pose &q_init, const ControlSet &controls, const NoiseModel &noise,
                           double dt, int depth, const TruncatePredicate &truncate = {},
                           std::size_t max_nodes = kDefaultNodeCeiling);

}  // namespace dubsynth
