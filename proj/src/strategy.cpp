#include "dubsynth/strategy.hpp"

#include "dubsynth/error.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

namespace dubsynth {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

Rng::Rng(std::uint64_t seed, std::uint64_t stream)
    : key_(splitmix64(seed ^ splitmix64(stream ^ 0x5DEECE66DULL))) {}

std::uint64_t Rng::next() {
    ++counter_;
    return splitmix64(key_ + counter_ * 0x9E3779B97F4A7C15ULL);
}

double Rng::uniform() {
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) {
    return lo + (hi - lo) * uniform();
}

Strategy::Strategy(std::shared_ptr<const TreeMdp> mdp, std::shared_ptr<const Solution> sol)
    : mdp_(std::move(mdp)), sol_(std::move(sol)) {
    if (!mdp_ || !sol_ || mdp_->size() == 0)
        fail(ErrorKind::InvalidArgument, "strategy needs an MDP and a solution");
    enter(0);
}

void Strategy::enter(int s) {
    for (;;) {
        cursor_ = s;
        path_.push_back(s);
        active_ = advance(*sol_, s, active_);
        if (mdp_->states[s].kind != StateKind::Chain)
            return;
        s = mdp_->next(s);
    }
}

bool Strategy::done() const {
    return mdp_->states[cursor_].kind == StateKind::Leaf;
}

int Strategy::next_control() const {
    const MdpState &st = mdp_->states[cursor_];
    if (st.kind == StateKind::Leaf)
        return -1;
    if (st.kind != StateKind::Decision)
        fail(ErrorKind::Phase, "cursor is inside a chain; advance through nu first");
    const int f = static_cast<int>(sol_->blocks.size());
    const int b = std::min(active_, f - 1);
    return sol_->blocks[b].mu[cursor_];
}

void Strategy::observe(int u, const Interval &measured) {
    if (u < 0 || u >= kNu)
        fail(ErrorKind::InvalidArgument, "unknown control index");
    const double nominal = mdp_->controls.inputs[u];
    constexpr double tol = 1e-9;
    for (int i = 0; i < mdp_->noise.n; ++i) {
        const Interval &c = mdp_->noise.cells[i];
        if (std::abs(measured.lo - (nominal + c.lo)) <= tol &&
            std::abs(measured.hi - (nominal + c.hi)) <= tol) {
            observe_cell(u, i);
            return;
        }
    }
    fail(ErrorKind::Domain, "measured interval is not aligned with any noise cell");
}

void Strategy::observe_cell(int u, int cell) {
    if (mdp_->states[cursor_].kind != StateKind::Decision)
        fail(ErrorKind::Phase, "no control is enabled at the cursor");
    if (u < 0 || u >= kNu || cell < 0 || cell >= mdp_->n)
        fail(ErrorKind::InvalidArgument, "control or cell out of range");
    enter(mdp_->child(cursor_, u, cell));
}

namespace {

struct LetterClause {
    PropSet pos = 0;
    PropSet neg = 0;
};

struct LetterBlock {
    std::vector<LetterClause> phi;
    std::vector<LetterClause> psi;
    Threshold threshold;
};

LetterClause letter_clause(const Clause &c, const std::vector<std::string> &props) {
    LetterClause out;
    for (const ExtProp &e : c.literals) {
        const auto it = std::find(props.begin(), props.end(), e.base);
        if (it == props.end())
            fail(ErrorKind::Validation, "unknown proposition '" + e.base + "'");
        const PropSet bit = PropSet{1} << (it - props.begin());
        (e.negative() ? out.neg : out.pos) |= bit;
    }
    return out;
}

}  // namespace

bool check_word(const Word &w, const Formula &f, const std::vector<std::string> &propositions) {
    if (f.blocks.empty() || w.letters.empty())
        return false;
    std::vector<LetterBlock> blocks;
    for (const Block &b : f.blocks) {
        LetterBlock lb;
        for (const Clause &c : b.phi)
            lb.phi.push_back(letter_clause(c, propositions));
        for (const Clause &c : b.psi)
            lb.psi.push_back(letter_clause(c, propositions));
        lb.threshold = b.threshold;
        blocks.push_back(std::move(lb));
    }
    auto phi = [](const LetterBlock &b, PropSet o) {
        return std::all_of(b.phi.begin(), b.phi.end(),
                           [&](const LetterClause &c) { return (o & c.pos) || (~o & c.neg); });
    };
    auto psi = [](const LetterBlock &b, PropSet o) {
        return std::any_of(b.psi.begin(), b.psi.end(), [&](const LetterClause &c) {
            return (o & c.pos) == c.pos && (o & c.neg) == 0;
        });
    };
    // A single path has probability 1 or 0 of satisfying a path formula.
    auto holds = [](bool path_sat, const Threshold &t) { return meets(path_sat ? 1.0 : 0.0, t); };

    const std::size_t len = w.letters.size();
    const std::size_t nb = blocks.size();
    std::vector<std::vector<char>> sat(nb, std::vector<char>(len, 0));
    // The last letter repeats forever, so witnesses beyond it add nothing.
    for (std::size_t j = nb; j-- > 0;) {
        for (std::size_t k = len; k-- > 0;) {
            const PropSet o = w.letters[k];
            bool target = psi(blocks[j], o);
            if (target && j + 1 < nb)
                target = holds(sat[j + 1][k], blocks[j + 1].threshold);
            sat[j][k] = target || (phi(blocks[j], o) && k + 1 < len && sat[j][k + 1]);
        }
    }
    return holds(sat[0][0], blocks[0].threshold);
}

StageRecord run_stage(Strategy &st, Pose &pose, double eps, double time,
                      std::vector<TimedPoint> &positions) {
    const TreeMdp &m = st.mdp();
    StageRecord rec;
    rec.control = st.next_control();
    const double nominal = rec.control < 0 ? 0.0 : m.controls.inputs[rec.control];
    rec.eps = eps;
    rec.w = nominal + eps;
    rec.cell = m.noise.cell_of(eps);

    const ArcSegment seg = integrate_arc(pose, rec.w, m.dt);
    if (positions.empty())
        positions.push_back({time, position(pose)});
    for (int k = 1; k <= kStageSamples; ++k) {
        const double t = m.dt * k / kStageSamples;
        positions.push_back({time + t, position(seg.at(t))});
    }
    pose = seg.end;
    if (rec.control >= 0)
        st.observe_cell(rec.control, rec.cell);
    rec.cursor = st.cursor();
    rec.satisfied_up_to = st.satisfied_up_to();
    return rec;
}

SimTrace simulate(const Environment &env, const VehicleParams &params,
                  std::shared_ptr<const TreeMdp> mdp, std::shared_ptr<const Solution> sol,
                  std::uint64_t seed, std::uint64_t trial) {
    Strategy st(std::move(mdp), std::move(sol));
    SimTrace tr;
    tr.seed = seed;
    tr.trial = trial;
    Rng rng(seed, trial);
    Pose pose = params.q_init;
    pose.theta = wrap_angle(pose.theta);
    const double dt = st.mdp().dt;
    const int stages = st.mdp().depth - st.mdp().states[0].stage;
    for (int k = 0; k < stages; ++k) {
        const double eps = rng.uniform(-params.eps_max, params.eps_max);
        tr.stages.push_back(run_stage(st, pose, eps, k * dt, tr.positions));
    }
    if (tr.positions.empty())
        tr.positions.push_back({0.0, position(pose)});
    tr.word = word_of_trace(tr.positions, env);
    tr.satisfied = check_word(tr.word, st.solution().formula, env.propositions());
    tr.satisfied_up_to = st.satisfied_up_to();
    tr.finished = st.done();
    return tr;
}

ConfidenceInterval wilson(std::size_t successes, std::size_t trials, double z) {
    if (trials == 0)
        return {0.0, 1.0};
    const double n = static_cast<double>(trials);
    const double p = static_cast<double>(successes) / n;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / n;
    const double center = (p + z2 / (2.0 * n)) / denom;
    const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
    return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

Estimate estimate(const Environment &env, const VehicleParams &params,
                  std::shared_ptr<const TreeMdp> mdp, std::shared_ptr<const Solution> sol,
                  std::size_t trials, std::uint64_t seed, unsigned threads) {
    if (trials == 0)
        fail(ErrorKind::InvalidArgument, "estimate needs at least one trial");
    if (threads == 0)
        threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, trials));

    std::atomic<std::size_t> next{0};
    std::atomic<std::size_t> hits{0};
    auto work = [&] {
        std::size_t local = 0;
        for (std::size_t t = next++; t < trials; t = next++) {
            if (simulate(env, params, mdp, sol, seed, t).satisfied)
                ++local;
        }
        hits += local;
    };
    std::vector<std::thread> pool;
    for (unsigned i = 1; i < threads; ++i)
        pool.emplace_back(work);
    work();
    for (std::thread &t : pool)
        t.join();

    Estimate e;
    e.trials = trials;
    e.successes = hits;
    e.frequency = static_cast<double>(e.successes) / static_cast<double>(trials);
    e.wilson95 = wilson(e.successes, trials, 1.96);
    return e;
}

}  // namespace dubsynth
