#include "upset/io.hpp"

#include <fstream>
#include <sstream>

namespace upset {

Json class_to_json(const HypothesisClass& cls) {
    std::vector<uint64_t> masks(size_t(cls.size()));
    for (int r = 0; r < cls.size(); ++r) masks[size_t(r)] = cls.positive_mask(r);
    return Json{{"instances", cls.instances()}, {"rows", masks}};
}

HypothesisClass class_from_json(const Json& j) {
    return HypothesisClass(j.at("instances").get<int>(),
                           j.at("rows").get<std::vector<uint64_t>>());
}

Json perturbation_to_json(const PerturbationSet& u) {
    std::vector<std::vector<int>> sets(size_t(u.instances()));
    for (int x = 0; x < u.instances(); ++x) sets[size_t(x)] = u.at(x);
    return Json{{"instances", u.instances()}, {"sets", sets}};
}

PerturbationSet perturbation_from_json(const Json& j) {
    return PerturbationSet(j.at("instances").get<int>(),
                           j.at("sets").get<std::vector<std::vector<int>>>());
}

Json distribution_to_json(const FiniteDistribution& dist) {
    Json atoms = Json::array();
    for (const auto& a : dist.atoms())
        atoms.push_back({{"prob", a.prob}, {"x", a.example.x}, {"y", a.example.y}});
    return Json{{"atoms", atoms}, {"instances", dist.instances()}};
}

FiniteDistribution distribution_from_json(const Json& j) {
    std::vector<FiniteDistribution::Atom> atoms;
    for (const auto& a : j.at("atoms"))
        atoms.push_back({{a.at("x").get<int>(), a.at("y").get<Label>()}, a.at("prob").get<double>()});
    return FiniteDistribution(std::move(atoms), j.at("instances").get<int>());
}

Json scenario_to_json(const Scenario& s) {
    return Json{{"class", class_to_json(s.cls)},
                {"dist", distribution_to_json(s.dist)},
                {"kind", s.kind},
                {"realizable", s.realizable},
                {"target_row", s.target_row},
                {"u", perturbation_to_json(s.u)}};
}

Scenario scenario_from_json(const Json& j) {
    return Scenario{class_from_json(j.at("class")),
                    perturbation_from_json(j.at("u")),
                    distribution_from_json(j.at("dist")),
                    j.at("kind").get<std::string>(),
                    j.at("realizable").get<bool>(),
                    j.at("target_row").get<int>()};
}

Json query_to_json(const QueryRecord& rec) {
    Json j{{"fingerprint", rec.fingerprint},
           {"robust", rec.response.robustly_correct},
           {"x", rec.example.x},
           {"y", rec.example.y},
           {"z", rec.response.z}};
    if (!rec.table.empty()) j["table"] = rec.table;
    return j;
}

Json round_to_json(const GameRound& r) {
    return Json{{"fingerprint", r.fingerprint},
                {"prediction", r.prediction},
                {"success", r.success},
                {"x", r.drawn.x},
                {"y", r.drawn.y},
                {"z", r.z}};
}

void write_jsonl(std::ostream& out, const std::vector<Json>& rows) {
    for (const auto& row : rows) out << row.dump() << '\n';
}

std::string query_log_jsonl(const QueryLog& log) {
    std::ostringstream out;
    for (const auto& rec : log.entries()) out << query_to_json(rec).dump() << '\n';
    return out.str();
}

std::string transcript_jsonl(const GameTranscript& t) {
    std::ostringstream out;
    for (const auto& r : t.rounds) out << round_to_json(r).dump() << '\n';
    return out.str();
}

Json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ScaleCapError("cannot open " + path);
    return Json::parse(in);
}

void save_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ScaleCapError("cannot write " + path);
    out << text;
}

std::string load_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ScaleCapError("cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

AttackCheckReport attack_check(std::istream& log, const PerturbationSet& u) {
    AttackCheckReport report;
    std::string line;
    long long line_no = 0;
    auto flag = [&](const std::string& msg) {
        ++report.failures;
        if (report.messages.size() < 20)
            report.messages.push_back("line " + std::to_string(line_no) + ": " + msg);
    };
    while (std::getline(log, line)) {
        ++line_no;
        if (line.empty()) continue;
        ++report.checked;
        Json j;
        try {
            j = Json::parse(line);
        } catch (const Json::parse_error& e) {
            flag(std::string("parse error: ") + e.what());
            continue;
        }
        if (!j.contains("table")) {
            flag("no captured table; log was not recorded with tables on");
            continue;
        }
        std::vector<Label> table = j.at("table").get<std::vector<Label>>();
        if (int(table.size()) != u.instances()) {
            flag("table width does not match the perturbation set");
            continue;
        }
        int x = j.at("x").get<int>();
        Label y = j.at("y").get<Label>();
        if (x < 0 || x >= u.instances()) {
            flag("x outside the instance range");
            continue;
        }
        if (j.at("robust").get<bool>()) {
            for (int z : u.at(x)) {
                if (table[size_t(z)] != y) {
                    flag("claimed robust but U(x) holds a misclassified point");
                    break;
                }
            }
        } else {
            int z = j.at("z").get<int>();
            if (!u.contains(x, z))
                flag("counterexample is not a member of U(x)");
            else if (table[size_t(z)] == y)
                flag("counterexample is not misclassified");
        }
    }
    return report;
}

AttackCheckReport attack_check_text(const std::string& jsonl, const PerturbationSet& u) {
    std::istringstream in(jsonl);
    return attack_check(in, u);
}

}  // namespace upset
