#pragma once

// JSON documents: environments, scenarios, rules, and the MDP / solution
// snapshots stored with a session.

#include "dubsynth/environment.hpp"
#include "dubsynth/mdp.hpp"
#include "dubsynth/pctl.hpp"
#include "dubsynth/synthesis.hpp"

#include "json.hpp"

#include <filesystem>
#include <string>

namespace dubsynth {

using json = nlohmann::json;

inline constexpr const char *kScenarioSchema = "dubsynth.scenario/1";
inline constexpr const char *kMdpSchema = "dubsynth.mdp/1";
inline constexpr const char *kSolutionSchema = "dubsynth.solution/1";

Environment environment_from_json(const json &doc);
json environment_to_json(const Environment &env);

struct Scenario {
    std::string name;
    json environment_doc;
    Environment environment;
    VehicleParams vehicle;
    std::string formula_text;
    Formula formula;
    std::vector<ExtProp> absorbing;
    std::size_t max_nodes = kDefaultNodeCeiling;
};

// Relative environment paths resolve against base_dir. The scenario is
// validated end to end except for building the MDP.
Scenario scenario_from_json(const json &doc, const std::filesystem::path &base_dir);
Scenario load_scenario(const std::filesystem::path &path);
// Self-contained form with the environment inlined.
json scenario_to_json(const Scenario &s);

json read_json_file(const std::filesystem::path &path);
void write_json_file(const std::filesystem::path &path, const json &doc, int indent = -1);

json pose_to_json(const Pose &p);
Pose pose_from_json(const json &j);

json clause_to_json(const Clause &c);
json block_to_json(const Block &b);
json formula_to_json(const Formula &f);
Formula formula_from_json(const json &j);

json rule_to_json(const UpdateRule &r);
// "clause" is formula text such as "!u & t2"; satisfied_up_to defaults to 0.
UpdateRule rule_from_json(const json &j);

json mdp_to_json(const TreeMdp &m);
TreeMdp mdp_from_json(const json &j);

json solution_to_json(const Solution &s);
Solution solution_from_json(const json &j);

std::string sha256_hex(const std::string &data);

}  // namespace dubsynth
