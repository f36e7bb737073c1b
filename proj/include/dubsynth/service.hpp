#pragma once

// Supervisor sessions: offline negotiation over relaxation candidates,
// deployment of the synthesized strategy, environment events and
// renegotiation. Sessions persist as JSON snapshots under a data directory.

#include "dubsynth/io.hpp"
#include "dubsynth/strategy.hpp"
#include "dubsynth/synthesis.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace dubsynth {

inline constexpr const char *kSessionSchema = "dubsynth.session/1";
inline constexpr const char *kCandidatesSchema = "dubsynth.candidates/1";
inline constexpr const char *kStepSchema = "dubsynth.step/1";
inline constexpr const char *kEstimateSchema = "dubsynth.estimate/1";
inline constexpr int kEventCandidateLimit = 5;

enum class Phase : std::uint8_t { Negotiating, Deployed, Renegotiating, Closed };

const char *to_string(Phase p);
Phase phase_from_string(std::string_view s);

struct Candidate {
    std::string id;
    UpdateRule rule;
    Formula formula;  // the formula after the update
    double lower = 0.0;
    double upper = 0.0;
    double delta = 0.0;
    std::string description;
};

// The pool: every RemovePhiClause, LowerThreshold at p/2 and just above 0,
// and AddPsiClause with one positive literal over each proposition that
// psi_j does not mention. Solved from s_c with the current formula; only
// non-negative deltas survive, best first.
std::vector<Candidate> enumerate_relaxations(const Solution &current, const TreeMdp &m, int s_c,
                                             int satisfied_up_to, std::size_t limit);

json candidate_to_json(const Candidate &c);

struct StageEntry {
    int stage = 0;
    int control = -1;
    double eps = 0.0;
    double w = 0.0;
    int cell = -1;
    int cursor = 0;  // id in the scenario MDP
    int satisfied_up_to = 0;
    double lower = 0.0;  // bounds from the cursor on
    double upper = 0.0;
};

struct Deployment {
    std::uint64_t seed = 0;
    Pose pose;
    std::vector<StageEntry> stages;
    std::size_t segment_start = 0;  // first stage driven by the current root
    std::optional<bool> verdict;
};

struct Session {
    std::string id;
    Scenario scenario;
    std::string mdp_sha256;
    Phase phase = Phase::Negotiating;
    Formula formula;  // current formula, relative to root
    int root = 0;     // root of M+ in the scenario MDP
    int revision = 0;
    double lower = 0.0;
    double upper = 0.0;
    std::vector<Candidate> candidates;
    int candidates_revision = -1;
    std::optional<Deployment> deployment;
    json log = json::array();
};

// Eps drawn for stage k of a seeded deployment.
double deployment_eps(std::uint64_t seed, int stage, double eps_max);

class Service {
public:
    explicit Service(std::filesystem::path data_dir);
    ~Service();

    Service(const Service &) = delete;
    Service &operator=(const Service &) = delete;

    const std::filesystem::path &data_dir() const { return dir_; }

    json create_session(const Scenario &scenario);
    json get(const std::string &id);
    json candidates(const std::string &id, std::size_t limit);
    // {"candidate": "c1" | "keep", "revision"?: n, "deploy"?: bool, "seed"?: n}
    json accept(const std::string &id, const json &request);
    // {"eps"?: x}; a missing eps draws from the deployment seed.
    json step(const std::string &id, const json &request);
    // Rule document; block numbers follow the session's current formula.
    json event(const std::string &id, const json &rule);

    std::vector<std::string> list() const;

private:
    struct Live;

    std::shared_ptr<Live> open(const std::string &id);
    std::shared_ptr<const TreeMdp> load_mdp(const std::string &sha);
    void persist(const Live &live) const;
    std::string next_id() const;

    std::filesystem::path dir_;
    mutable std::mutex mu_;
    std::mutex create_mu_;
    std::map<std::string, std::shared_ptr<Live>> sessions_;
    std::map<std::string, std::shared_ptr<const TreeMdp>> mdps_;
};

json session_to_json(const Session &s);
Session session_from_json(const json &doc);

}  // namespace dubsynth
