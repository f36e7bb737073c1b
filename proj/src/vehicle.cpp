#include "dubsynth/vehicle.hpp"

#include "dubsynth/error.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace dubsynth {

double wrap_angle(double theta) {
    double t = std::fmod(theta, kTwoPi);
    if (t < 0.0)
        t += kTwoPi;
    if (t >= kTwoPi)
        t = 0.0;
    return t;
}

double distance(Point a, Point b) {
    return std::hypot(a.x - b.x, a.y - b.y);
}

int NoiseModel::cell_of(double eps) const {
    if (n == 1 || eps_max == 0.0)
        return n == 1 ? 0 : n / 2;
    const double idx = std::floor((eps + eps_max) / cell_width());
    return static_cast<int>(std::clamp(idx, 0.0, static_cast<double>(n - 1)));
}

NoiseModel make_noise_model(double eps_max, int n) {
    if (n < 1)
        fail(ErrorKind::InvalidArgument, "noise model needs at least one cell");
    if (!std::isfinite(eps_max) || eps_max < 0.0)
        fail(ErrorKind::InvalidArgument, "eps_max must be finite and non-negative");

    NoiseModel m;
    m.eps_max = eps_max;
    m.n = n;
    m.cells.reserve(n);
    m.reps.reserve(n);
    // Edges as eps_max * (2i - n) / n keep the partition exactly symmetric,
    // so the middle representative of an odd n is exactly zero.
    auto edge = [&](int i) { return eps_max * (2 * i - n) / n; };
    for (int i = 0; i < n; ++i) {
        const Interval cell{edge(i), edge(i + 1)};
        m.cells.push_back(cell);
        m.reps.push_back(cell.mid());
    }
    return m;
}

ControlSet make_control_set(double rho) {
    if (!std::isfinite(rho) || rho <= 0.0)
        fail(ErrorKind::InvalidArgument, "turn radius rho must be positive");
    ControlSet c;
    c.rho = rho;
    c.inputs = {-1.0 / rho, 0.0, 1.0 / rho};
    return c;
}

Pose arc_pose(const Pose &start, double w, double t) {
    if (std::abs(w) < kStraightTolerance) {
        return {start.x + t * std::cos(start.theta), start.y + t * std::sin(start.theta),
                start.theta};
    }
    const double th = start.theta + w * t;
    return {start.x + (std::sin(th) - std::sin(start.theta)) / w,
            start.y - (std::cos(th) - std::cos(start.theta)) / w, wrap_angle(th)};
}

Pose ArcSegment::at(double t) const {
    return arc_pose(start, w, t);
}

ArcSegment integrate_arc(const Pose &start, double w, double dt) {
    if (!std::isfinite(start.x) || !std::isfinite(start.y) || !std::isfinite(start.theta) ||
        !std::isfinite(w) || !std::isfinite(dt))
        fail(ErrorKind::InvalidArgument, "integrate_arc: non-finite input");
    if (dt <= 0.0)
        fail(ErrorKind::InvalidArgument, "integrate_arc: dt must be positive");
    ArcSegment seg;
    seg.start = start;
    seg.start.theta = wrap_angle(start.theta);
    seg.w = w;
    seg.dt = dt;
    seg.end = arc_pose(seg.start, w, dt);
    return seg;
}

double propagate_uncertainty(double r_prev, const Pose &start, double u, const Interval &cell,
                             double dt) {
    if (!std::isfinite(r_prev) || r_prev < 0.0)
        fail(ErrorKind::InvalidArgument, "propagate_uncertainty: r_prev must be >= 0");
    if (!(dt > 0.0) || !std::isfinite(u) || !std::isfinite(cell.lo) || !std::isfinite(cell.hi))
        fail(ErrorKind::InvalidArgument, "propagate_uncertainty: invalid input");

    const double w_rep = u + cell.mid();
    const double w_lo = u + cell.lo;
    const double w_hi = u + cell.hi;
    double growth = 0.0;
    for (int k = 0; k <= kStageSamples; ++k) {
        const double t = dt * k / kStageSamples;
        const Point p = position(arc_pose(start, w_rep, t));
        growth = std::max(growth, distance(p, position(arc_pose(start, w_lo, t))));
        growth = std::max(growth, distance(p, position(arc_pose(start, w_hi, t))));
    }
    return r_prev + growth;
}

ReachTree build_reach_tree(const Pose &q_init, const ControlSet &controls, const NoiseModel &noise,
                           double dt, int depth, const TruncatePredicate &truncate,
                           std::size_t max_nodes) {
    if (depth < 0)
        fail(ErrorKind::InvalidArgument, "reach tree depth K must be >= 0");
    if (!(dt > 0.0))
        fail(ErrorKind::InvalidArgument, "stage length dt must be positive");
    if (noise.n < 1 || static_cast<int>(noise.cells.size()) != noise.n)
        fail(ErrorKind::InvalidArgument, "malformed noise model");

    ReachTree tree;
    tree.q_init = {q_init.x, q_init.y, wrap_angle(q_init.theta)};
    tree.depth = depth;
    tree.dt = dt;
    tree.controls = controls;
    tree.noise = noise;

    ReachNode root;
    root.arc.start = tree.q_init;
    root.arc.end = tree.q_init;
    tree.nodes.push_back(root);

    const std::size_t fanout = ControlSet::size() * static_cast<std::size_t>(noise.n);
    for (std::size_t idx = 0; idx < tree.nodes.size(); ++idx) {
        const ReachNode node = tree.nodes[idx];
        if (node.stage >= depth)
            continue;
        if (idx != 0 && truncate && truncate(node))
            continue;
        if (tree.nodes.size() + fanout > max_nodes) {
            std::ostringstream msg;
            msg << "reach tree for K=" << depth << " exceeds the node ceiling of " << max_nodes
                << " while expanding stage " << node.stage + 1;
            fail(ErrorKind::Limit, msg.str());
        }
        tree.nodes[idx].first_child = static_cast<int>(tree.nodes.size());
        tree.nodes[idx].num_children = static_cast<int>(fanout);
        for (std::size_t u = 0; u < ControlSet::size(); ++u) {
            const double nominal = controls.inputs[u];
            for (int i = 0; i < noise.n; ++i) {
                ReachNode child;
                child.arc = integrate_arc(node.arc.end, nominal + noise.reps[i], dt);
                child.stage = node.stage + 1;
                child.control = static_cast<int>(u);
                child.cell = i;
                child.r = propagate_uncertainty(node.r, node.arc.end, nominal, noise.cells[i], dt);
                child.parent = static_cast<int>(idx);
                tree.nodes.push_back(child);
            }
        }
    }
    return tree;
}

}  // namespace dubsynth
