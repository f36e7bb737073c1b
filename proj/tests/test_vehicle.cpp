#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "support.hpp"

using namespace testsupport;

namespace {

// Classical RK4 on x' = cos th, y' = sin th, th' = w.
Pose rk4(Pose q, double w, double t, double h) {
    auto f = [w](const std::array<double, 3> &s) {
        return std::array<double, 3>{std::cos(s[2]), std::sin(s[2]), w};
    };
    std::array<double, 3> s{q.x, q.y, q.theta};
    const int steps = static_cast<int>(std::ceil(t / h));
    h = t / steps;
    for (int i = 0; i < steps; ++i) {
        auto k1 = f(s);
        std::array<double, 3> a, b, c;
        for (int d = 0; d < 3; ++d) a[d] = s[d] + 0.5 * h * k1[d];
        auto k2 = f(a);
        for (int d = 0; d < 3; ++d) b[d] = s[d] + 0.5 * h * k2[d];
        auto k3 = f(b);
        for (int d = 0; d < 3; ++d) c[d] = s[d] + h * k3[d];
        auto k4 = f(c);
        for (int d = 0; d < 3; ++d) s[d] += h / 6.0 * (k1[d] + 2 * k2[d] + 2 * k3[d] + k4[d]);
    }
    return {s[0], s[1], wrap_angle(s[2])};
}

double angle_gap(double a, double b) {
    const double d = std::abs(wrap_angle(a) - wrap_angle(b));
    return std::min(d, kTwoPi - d);
}

}  // namespace

TEST_CASE("closed-form arcs agree with RK4") {
    Gen g(11);
    for (int trial = 0; trial < 12; ++trial) {
        const Pose q{uni(g, -3, 3), uni(g, -3, 3), uni(g, 0, kTwoPi)};
        const double w = trial == 0 ? 0.0 : (trial == 1 ? 1e-12 : uni(g, -2.0, 2.0));
        const double dt = uni(g, 0.3, 1.5);
        const Pose exact = arc_pose(q, w, dt);
        const Pose num = rk4(q, w, dt, 1e-5);
        CHECK(std::abs(exact.x - num.x) < 1e-6);
        CHECK(std::abs(exact.y - num.y) < 1e-6);
        CHECK(angle_gap(exact.theta, num.theta) < 1e-6);
        const ArcSegment seg = integrate_arc(q, w, dt);
        CHECK(std::abs(seg.end.x - exact.x) < 1e-12);
        CHECK(std::abs(seg.at(0.5 * dt).y - arc_pose(q, w, 0.5 * dt).y) < 1e-12);
    }
}

TEST_CASE("wrap_angle stays in [0, 2pi)") {
    for (double a : {-7.0, -kTwoPi, -0.0, 0.0, 3.0, kTwoPi, 13.0}) {
        const double w = wrap_angle(a);
        CHECK(w >= 0.0);
        CHECK(w < kTwoPi);
    }
}

TEST_CASE("noise cells partition the support") {
    const NoiseModel nm = make_noise_model(0.06, 3);
    REQUIRE(nm.cells.size() == 3);
    CHECK(nm.cells[0].lo == doctest::Approx(-0.06));
    CHECK(nm.cells[0].hi == doctest::Approx(-0.02));
    CHECK(nm.cells[1].hi == doctest::Approx(0.02));
    CHECK(nm.cells[2].hi == doctest::Approx(0.06));
    CHECK(nm.cell_width() == doctest::Approx(0.04));
    CHECK(nm.cell_probability() == doctest::Approx(1.0 / 3.0));
    for (int i = 0; i < 3; ++i)
        CHECK(nm.reps[i] == doctest::Approx(nm.cells[i].mid()));
    CHECK(nm.cell_of(-0.05) == 0);
    const NoiseModel exact = make_noise_model(0.75, 3);
    CHECK(exact.cell_of(-0.25) == 1);  // shared endpoint goes up
    CHECK(exact.cell_of(0.25) == 2);
    CHECK(nm.cell_of(0.0) == 1);
    CHECK(nm.cell_of(0.06) == 2);
    CHECK(nm.cell_of(0.5) == 2);
    CHECK(nm.cell_of(-0.5) == 0);

    const NoiseModel still = make_noise_model(0.0, 2);
    CHECK(still.cells[0].width() == 0.0);
    CHECK_THROWS_AS(make_noise_model(0.1, 0), Error);
    CHECK_THROWS_AS(make_noise_model(-0.1, 2), Error);
}

TEST_CASE("control set") {
    const ControlSet c = make_control_set(2.0);
    CHECK(c.inputs[0] == doctest::Approx(-0.5));
    CHECK(c.inputs[1] == 0.0);
    CHECK(c.inputs[2] == doctest::Approx(0.5));
    CHECK_THROWS_AS(make_control_set(0.0), Error);
}

TEST_CASE("reach tree sizes") {
    const ControlSet c = make_control_set(1.0);
    const NoiseModel nm = make_noise_model(0.06, 3);
    const Pose q{0, 0, 0};
    CHECK(build_reach_tree(q, c, nm, 1.0, 1).size() - 1 == 9);
    const ReachTree t3 = build_reach_tree(q, c, nm, 1.0, 3);
    CHECK(t3.size() - 1 == 9 + 81 + 729);
    // children contiguous, ordered by (control, cell)
    const ReachNode &root = t3.root();
    REQUIRE(root.num_children == 9);
    for (int k = 0; k < 9; ++k) {
        const ReachNode &ch = t3.nodes[root.first_child + k];
        CHECK(ch.control == k / 3);
        CHECK(ch.cell == k % 3);
        CHECK(ch.parent == 0);
        CHECK(ch.stage == 1);
    }
    const ReachTree t2 = build_reach_tree(q, c, make_noise_model(0.1, 2), 0.5, 2);
    CHECK(t2.size() == 1 + 6 + 36);
}

TEST_CASE("node ceiling names K") {
    const ControlSet c = make_control_set(1.0);
    const NoiseModel nm = make_noise_model(0.06, 3);
    try {
        build_reach_tree({0, 0, 0}, c, nm, 1.0, 6, {}, 1000);
        FAIL("expected a limit error");
    } catch (const Error &e) {
        CHECK(e.kind() == ErrorKind::Limit);
        CHECK(std::string(e.what()).find("K=6") != std::string::npos);
    }
}

TEST_CASE("truncation stops expansion") {
    const ControlSet c = make_control_set(1.0);
    const NoiseModel nm = make_noise_model(0.06, 3);
    const ReachTree t = build_reach_tree({0, 0, 0}, c, nm, 1.0, 3,
                                         [](const ReachNode &n) { return n.stage == 1 && n.control == 0; });
    CHECK(t.size() == 1 + 9 + 6 * 9 + 6 * 81);
}

TEST_CASE("uncertainty growth covers every noise value in the cell") {
    Gen g(5);
    for (int trial = 0; trial < 20; ++trial) {
        const Pose start{uni(g, -1, 1), uni(g, -1, 1), uni(g, 0, kTwoPi)};
        const double u = std::array<double, 3>{-1.0, 0.0, 1.0}[pick(g, 0, 2)] / uni(g, 0.5, 2.0);
        const double lo = uni(g, -0.2, 0.1);
        const Interval cell{lo, lo + uni(g, 0.0, 0.1)};
        const double dt = uni(g, 0.5, 1.5);
        const double r_prev = uni(g, 0.0, 0.3);
        const double r = propagate_uncertainty(r_prev, start, u, cell, dt);
        double worst = 0.0;
        for (int e = 0; e <= 100; ++e) {
            const double w = u + cell.lo + cell.width() * e / 100.0;
            for (int k = 0; k <= 400; ++k) {
                const double t = dt * k / 400.0;
                worst = std::max(worst, distance(position(arc_pose(start, u + cell.mid(), t)),
                                                 position(arc_pose(start, w, t))));
            }
        }
        CHECK(r >= r_prev);
        CHECK(r - r_prev + 1e-9 >= worst);
        CHECK(r - r_prev <= worst + 1e-6);
    }
}

TEST_CASE("uncertainty grows with the cell width") {
    Gen g(8);
    for (int trial = 0; trial < 20; ++trial) {
        const Pose start{0, 0, uni(g, 0, kTwoPi)};
        const double u = uni(g, -1.0, 1.0);
        const double half = uni(g, 0.005, 0.05);
        const double c = uni(g, -0.05, 0.05);
        const double r1 = propagate_uncertainty(0.1, start, u, {c - half, c + half}, 1.0);
        const double r2 = propagate_uncertainty(0.1, start, u, {c - 2 * half, c + 2 * half}, 1.0);
        CHECK(r2 >= r1);
        CHECK(propagate_uncertainty(0.1, start, u, {c, c}, 1.0) == doctest::Approx(0.1));
    }
    CHECK_THROWS_AS(propagate_uncertainty(-1.0, {}, 0.0, {0, 0}, 1.0), Error);
}
