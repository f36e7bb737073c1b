#pragma once

#include "dubsynth/props.hpp"
#include "dubsynth/vehicle.hpp"

#include <functional>
#include <map>
#include <string>
#include <vector>

namespace dubsynth {

struct Box {
    double xmin = 0.0;
    double ymin = 0.0;
    double xmax = 0.0;
    double ymax = 0.0;

    bool contains(Point p) const {
        return p.x >= xmin && p.x <= xmax && p.y >= ymin && p.y <= ymax;
    }
};

class ConvexPolygon {
public:
    // Vertices in either orientation; stored counter-clockwise. Throws on
    // fewer than three vertices, zero area, or a reflex corner.
    explicit ConvexPolygon(std::vector<Point> vertices);

    const std::vector<Point> &vertices() const { return vertices_; }
    const Box &bbox() const { return bbox_; }
    double area() const { return area_; }

    // Min over edges of the distance to the edge line, positive inside.
    double signed_depth(Point p) const;
    // Euclidean distance to the closed polygon; 0 inside, > 0 outside.
    double distance(Point p) const;
    bool contains(Point p) const { return signed_depth(p) >= 0.0; }

private:
    struct Edge {
        Point a;
        Point b;
        double nx, ny;  // outward unit normal
        double offset;  // n . a
    };

    std::vector<Point> vertices_;
    std::vector<Edge> edges_;
    Box bbox_;
    double area_ = 0.0;
};

// Bitmask over the proposition indices of an environment (bit i = prop i).
using PropSet = std::uint32_t;

class Environment {
public:
    Environment() = default;
    Environment(Box bounds, const std::map<std::string, std::vector<std::vector<Point>>> &regions);

    const Box &bounds() const { return bounds_; }
    const std::vector<std::string> &propositions() const { return names_; }
    const std::vector<ConvexPolygon> &regions(std::size_t prop) const { return regions_[prop]; }
    std::size_t size() const { return names_.size(); }

    // -1 if the proposition is unknown.
    int index_of(const std::string &name) const;
    bool has(const std::string &name) const { return index_of(name) >= 0; }

    // Throws on an unknown base.
    LabelSet encode(const ExtProp &e) const;
    std::vector<ExtProp> decode(LabelSet labels) const;

    // Propositions whose region holds point p.
    PropSet props_at(Point p) const;
    bool in_region(std::size_t prop, Point p) const;
    // Distance from p to the union of the proposition's regions.
    double region_distance(std::size_t prop, Point p) const;

private:
    Box bounds_;
    std::vector<std::string> names_;
    std::vector<std::vector<ConvexPolygon>> regions_;
};

// Negation elimination: literals pi / !pi become xi_pi / xi_not_pi. Throws
// ErrorKind::Fragment naming the subformula when the input is not in NNF.
PosExpr pos_translate(const BoolExpr &e);
// Inverse substitution xi_pi -> pi, xi_not_pi -> !pi.
BoolExprPtr depos(const PosExpr &e);

// Point-membership test of [e]; the negative polarity is the complement of
// the regions. Points outside the bounds are outside every region.
std::function<bool(Point)> interp(const ExtProp &e, const Environment &env);
bool holds_at(const ExtProp &e, Point p, const Environment &env);

// xi_pi iff the closed disc lies inside one polygon of pi; xi_not_pi iff it
// misses every polygon of pi. A straddling disc carries neither.
LabelSet label_disc(Point center, double r, const Environment &env);

struct LabelEntry {
    LabelSet labels = 0;
    double t_lo = 0.0;
    double t_hi = 0.0;
};

using LabelSeq = std::vector<LabelEntry>;

inline constexpr double kEventTolerance = 1e-6;

// Maximal time intervals of [0, seg.dt] over which label_disc along the arc
// is constant. Boundaries are bracketed at dt/1024 and bisected to 1e-6 s.
LabelSeq trace_labels(const ArcSegment &seg, double r, const Environment &env);

struct TimedPoint {
    double t = 0.0;
    Point p;
};

// Finite word over 2^Pi; the last letter stutters forever.
struct Word {
    std::vector<PropSet> letters;

    bool operator==(const Word &) const = default;
};

Word word_of_trace(const std::vector<TimedPoint> &positions, const Environment &env);

}  // namespace dubsynth
