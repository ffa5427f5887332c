#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"
#include "upset/games.hpp"
#include "upset/scenario.hpp"

namespace upset {

using Json = nlohmann::json;

// nlohmann stores object keys sorted, so dump() of equal content is
// byte-identical; every emitter below relies on that.

Json class_to_json(const HypothesisClass& cls);
HypothesisClass class_from_json(const Json& j);

Json perturbation_to_json(const PerturbationSet& u);
PerturbationSet perturbation_from_json(const Json& j);

Json distribution_to_json(const FiniteDistribution& dist);
FiniteDistribution distribution_from_json(const Json& j);

Json scenario_to_json(const Scenario& s);
Scenario scenario_from_json(const Json& j);

Json query_to_json(const QueryRecord& rec);
Json round_to_json(const GameRound& r);

// One compact object per line, newline-terminated.
void write_jsonl(std::ostream& out, const std::vector<Json>& rows);

std::string query_log_jsonl(const QueryLog& log);
std::string transcript_jsonl(const GameTranscript& t);

Json load_json_file(const std::string& path);
void save_text_file(const std::string& path, const std::string& text);
std::string load_text_file(const std::string& path);

// Replays a captured query log against a perturbation set: counterexamples
// must be members of U(x) and misclassified by the captured table; robust
// claims must survive a scan of all of U(x).
struct AttackCheckReport {
    long long checked = 0;
    long long failures = 0;
    std::vector<std::string> messages;
};

AttackCheckReport attack_check(std::istream& log, const PerturbationSet& u);
AttackCheckReport attack_check_text(const std::string& jsonl, const PerturbationSet& u);

}  // namespace upset
