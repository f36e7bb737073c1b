#include "dubsynth/environment.hpp"

#include "dubsynth/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace dubsynth {

namespace {

double cross(Point o, Point a, Point b) {
    return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

double segment_distance(Point p, Point a, Point b) {
    const double dx = b.x - a.x;
    const double dy = b.y - a.y;
    const double len2 = dx * dx + dy * dy;
    double s = len2 > 0.0 ? ((p.x - a.x) * dx + (p.y - a.y) * dy) / len2 : 0.0;
    s = std::clamp(s, 0.0, 1.0);
    return std::hypot(p.x - (a.x + s * dx), p.y - (a.y + s * dy));
}

double box_distance(const Box &b, Point p) {
    const double dx = std::max({b.xmin - p.x, 0.0, p.x - b.xmax});
    const double dy = std::max({b.ymin - p.y, 0.0, p.y - b.ymax});
    return std::hypot(dx, dy);
}

}  // namespace

ConvexPolygon::ConvexPolygon(std::vector<Point> vertices) {
    // Drop repeated vertices, including a closing copy of the first one.
    std::vector<Point> vs;
    for (const Point &p : vertices) {
        if (vs.empty() || vs.back().x != p.x || vs.back().y != p.y)
            vs.push_back(p);
    }
    while (vs.size() > 1 && vs.front().x == vs.back().x && vs.front().y == vs.back().y)
        vs.pop_back();
    if (vs.size() < 3)
        fail(ErrorKind::Validation, "polygon needs at least three distinct vertices");

    double twice_area = 0.0;
    for (std::size_t i = 0; i < vs.size(); ++i) {
        const Point &a = vs[i];
        const Point &b = vs[(i + 1) % vs.size()];
        twice_area += a.x * b.y - b.x * a.y;
    }
    if (std::abs(twice_area) < 1e-12)
        fail(ErrorKind::Validation, "polygon has zero area");
    if (twice_area < 0.0)
        std::reverse(vs.begin(), vs.end());
    area_ = 0.5 * std::abs(twice_area);

    const std::size_t n = vs.size();
    for (std::size_t i = 0; i < n; ++i) {
        if (cross(vs[i], vs[(i + 1) % n], vs[(i + 2) % n]) < -1e-12)
            fail(ErrorKind::Validation, "polygon is not convex");
    }

    bbox_ = {vs[0].x, vs[0].y, vs[0].x, vs[0].y};
    for (std::size_t i = 0; i < n; ++i) {
        const Point a = vs[i];
        const Point b = vs[(i + 1) % n];
        const double len = std::hypot(b.x - a.x, b.y - a.y);
        Edge e{a, b, (b.y - a.y) / len, -(b.x - a.x) / len, 0.0};
        e.offset = e.nx * a.x + e.ny * a.y;
        edges_.push_back(e);
        bbox_.xmin = std::min(bbox_.xmin, a.x);
        bbox_.ymin = std::min(bbox_.ymin, a.y);
        bbox_.xmax = std::max(bbox_.xmax, a.x);
        bbox_.ymax = std::max(bbox_.ymax, a.y);
    }
    vertices_ = std::move(vs);
}

double ConvexPolygon::signed_depth(Point p) const {
    double depth = std::numeric_limits<double>::infinity();
    for (const Edge &e : edges_)
        depth = std::min(depth, e.offset - (e.nx * p.x + e.ny * p.y));
    return depth;
}

double ConvexPolygon::distance(Point p) const {
    const double depth = signed_depth(p);
    if (depth >= 0.0)
        return 0.0;
    double d = std::numeric_limits<double>::infinity();
    for (const Edge &e : edges_)
        d = std::min(d, segment_distance(p, e.a, e.b));
    // The largest edge-line violation is a lower bound on the true distance
    // and keeps the result strictly positive for outside points.
    return std::max(d, -depth);
}

Environment::Environment(Box bounds,
                         const std::map<std::string, std::vector<std::vector<Point>>> &regions)
    : bounds_(bounds) {
    if (!(bounds.xmax > bounds.xmin) || !(bounds.ymax > bounds.ymin))
        fail(ErrorKind::Validation, "environment bounds are empty");
    if (regions.size() > kMaxPropositions)
        fail(ErrorKind::Validation, "environment has more than 32 propositions");
    constexpr double slack = 1e-9;
    for (const auto &[name, polys] : regions) {
        if (name.empty())
            fail(ErrorKind::Validation, "empty proposition name");
        std::vector<ConvexPolygon> converted;
        for (const auto &poly : polys) {
            for (const Point &v : poly) {
                if (v.x < bounds.xmin - slack || v.x > bounds.xmax + slack ||
                    v.y < bounds.ymin - slack || v.y > bounds.ymax + slack)
                    fail(ErrorKind::Validation, "region '" + name + "' leaves the bounds");
            }
            try {
                converted.emplace_back(poly);
            } catch (const Error &e) {
                fail(ErrorKind::Validation, "region '" + name + "': " + e.what());
            }
        }
        names_.push_back(name);
        regions_.push_back(std::move(converted));
    }
}

int Environment::index_of(const std::string &name) const {
    const auto it = std::find(names_.begin(), names_.end(), name);
    return it == names_.end() ? -1 : static_cast<int>(it - names_.begin());
}

LabelSet Environment::encode(const ExtProp &e) const {
    const int idx = index_of(e.base);
    if (idx < 0)
        fail(ErrorKind::Validation, "unknown proposition '" + e.base + "'");
    return label_bit(static_cast<std::size_t>(idx), e.polarity);
}

std::vector<ExtProp> Environment::decode(LabelSet labels) const {
    std::vector<ExtProp> out;
    for (std::size_t i = 0; i < names_.size(); ++i) {
        if (labels & label_bit(i, Polarity::Positive))
            out.push_back(pos_literal(names_[i]));
        if (labels & label_bit(i, Polarity::Negative))
            out.push_back(neg_literal(names_[i]));
    }
    return out;
}

bool Environment::in_region(std::size_t prop, Point p) const {
    for (const ConvexPolygon &poly : regions_[prop]) {
        if (poly.bbox().contains(p) && poly.contains(p))
            return true;
    }
    return false;
}

double Environment::region_distance(std::size_t prop, Point p) const {
    double d = std::numeric_limits<double>::infinity();
    for (const ConvexPolygon &poly : regions_[prop])
        d = std::min(d, poly.distance(p));
    return d;
}

PropSet Environment::props_at(Point p) const {
    PropSet s = 0;
    for (std::size_t i = 0; i < names_.size(); ++i) {
        if (in_region(i, p))
            s |= PropSet{1} << i;
    }
    return s;
}

PosExpr pos_translate(const BoolExpr &e) {
    PosExpr out;
    switch (e.kind) {
    case BoolExpr::Kind::True:
        out.kind = PosExpr::Kind::True;
        return out;
    case BoolExpr::Kind::Prop:
        out.kind = PosExpr::Kind::Lit;
        out.lit = pos_literal(e.name);
        return out;
    case BoolExpr::Kind::Not: {
        const BoolExpr &child = *e.children.front();
        if (child.kind != BoolExpr::Kind::Prop)
            fail(ErrorKind::Fragment, "not in negation normal form: " + to_string(e));
        out.kind = PosExpr::Kind::Lit;
        out.lit = neg_literal(child.name);
        return out;
    }
    case BoolExpr::Kind::And:
    case BoolExpr::Kind::Or:
        out.kind = e.kind == BoolExpr::Kind::And ? PosExpr::Kind::And : PosExpr::Kind::Or;
        for (const auto &c : e.children)
            out.children.push_back(pos_translate(*c));
        return out;
    }
    fail(ErrorKind::Internal, "pos_translate: unknown node");
}

BoolExprPtr depos(const PosExpr &e) {
    switch (e.kind) {
    case PosExpr::Kind::True: return BoolExpr::truth();
    case PosExpr::Kind::Lit: {
        auto p = BoolExpr::prop(e.lit.base);
        return e.lit.negative() ? BoolExpr::negate(p) : p;
    }
    case PosExpr::Kind::And:
    case PosExpr::Kind::Or: {
        std::vector<BoolExprPtr> cs;
        for (const PosExpr &c : e.children)
            cs.push_back(depos(c));
        return e.kind == PosExpr::Kind::And ? BoolExpr::conj(std::move(cs))
                                            : BoolExpr::disj(std::move(cs));
    }
    }
    fail(ErrorKind::Internal, "depos: unknown node");
}

bool holds_at(const ExtProp &e, Point p, const Environment &env) {
    const int idx = env.index_of(e.base);
    const bool inside = idx >= 0 && env.in_region(static_cast<std::size_t>(idx), p);
    return e.negative() ? !inside : inside;
}

std::function<bool(Point)> interp(const ExtProp &e, const Environment &env) {
    return [e, &env](Point p) { return holds_at(e, p, env); };
}

LabelSet label_disc(Point center, double r, const Environment &env) {
    LabelSet labels = 0;
    for (std::size_t i = 0; i < env.size(); ++i) {
        bool inside = false;
        bool disjoint = true;
        for (const ConvexPolygon &poly : env.regions(i)) {
            if (box_distance(poly.bbox(), center) > r)
                continue;
            if (!inside && poly.bbox().contains(center) && poly.signed_depth(center) >= r)
                inside = true;
            if (disjoint && !(poly.distance(center) > r))
                disjoint = false;
        }
        if (inside)
            labels |= label_bit(i, Polarity::Positive);
        if (disjoint)
            labels |= label_bit(i, Polarity::Negative);
    }
    return labels;
}

LabelSeq trace_labels(const ArcSegment &seg, double r, const Environment &env) {
    auto label = [&](double t) { return label_disc(position(seg.at(t)), r, env); };

    LabelSeq seq;
    LabelSet current = label(0.0);
    double t_lo = 0.0;
    double prev_t = 0.0;
    for (int k = 1; k <= kStageSamples; ++k) {
        const double t = seg.dt * k / kStageSamples;
        const LabelSet at_t = label(t);
        while (at_t != current) {
            double lo = prev_t;
            double hi = t;
            while (hi - lo > kEventTolerance) {
                const double mid = 0.5 * (lo + hi);
                if (label(mid) == current)
                    lo = mid;
                else
                    hi = mid;
            }
            seq.push_back({current, t_lo, hi});
            current = label(hi);
            t_lo = hi;
            prev_t = hi;
        }
        prev_t = t;
    }
    seq.push_back({current, t_lo, seg.dt});
    return seq;
}

Word word_of_trace(const std::vector<TimedPoint> &positions, const Environment &env) {
    Word w;
    for (const TimedPoint &tp : positions) {
        const PropSet s = env.props_at(tp.p);
        if (w.letters.empty() || w.letters.back() != s)
            w.letters.push_back(s);
    }
    return w;
}

}  // namespace dubsynth
