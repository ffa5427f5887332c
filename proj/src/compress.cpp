#include "upset/compress.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace upset {

std::vector<int> CompressionRecord::kappa_indices() const {
    std::vector<int> out;
    std::unordered_set<int> seen;
    for (const auto& u : updates)
        if (seen.insert(u.origin_index).second) out.push_back(u.origin_index);
    return out;
}

namespace {

std::optional<CycleRobustResult> run_cycles(const std::vector<LabeledExample>& sample,
                                            OnlineLearner& learner, AttackOracle& oracle,
                                            int pass_cap, CompressionRecord& record) {
    if (sample.empty()) throw ScaleCapError("cycle_robust needs a nonempty sample");
    if (pass_cap < 1) throw ScaleCapError("cycle_robust pass cap must be positive");
    for (const auto& ex : sample) check_label(ex.y);
    while (true) {
        if (record.passes >= pass_cap) return std::nullopt;
        ++record.passes;
        bool full_robust_pass = true;
        for (int i = 0; i < int(sample.size()); ++i) {
            Predictor current = learner.current_predictor();
            OracleResponse resp = oracle.query(current, sample[i]);
            ++record.queries;
            if (resp.robustly_correct) continue;
            full_robust_pass = false;
            LabeledExample fed{resp.z, sample[i].y};
            learner.observe(fed);
            record.updates.push_back({fed, sample[i], i, record.passes});
            if (learner.version_space_empty()) return std::nullopt;
        }
        if (full_robust_pass) break;
    }
    return CycleRobustResult{learner.current_predictor(), record};
}

}  // namespace

std::optional<CycleRobustResult> try_cycle_robust(const std::vector<LabeledExample>& sample,
                                                  OnlineLearner& learner, AttackOracle& oracle,
                                                  int pass_cap) {
    CompressionRecord record;
    return run_cycles(sample, learner, oracle, pass_cap, record);
}

CycleRobustResult cycle_robust(const std::vector<LabeledExample>& sample, OnlineLearner& learner,
                               AttackOracle& oracle, int pass_cap) {
    CompressionRecord record;
    auto result = run_cycles(sample, learner, oracle, pass_cap, record);
    if (!result) {
        throw CycleRobustError(
            "cycle_robust: no robustly consistent hypothesis (updates=" +
                std::to_string(record.size()) + ", passes=" + std::to_string(record.passes) + ")",
            std::move(record));
    }
    return *std::move(result);
}

CycleRobustResult cycle_robust(const std::vector<LabeledExample>& sample, OnlineLearner& learner,
                               AttackOracle& oracle) {
    return cycle_robust(sample, learner, oracle, learner.mistake_bound() + 2);
}

namespace {

bool reproduces(const std::vector<LabeledExample>& subsample, const CycleRobustResult& original,
                const LearnerFactory& factory, AttackOracle& oracle, int pass_cap) {
    auto learner = factory();
    if (subsample.empty()) {
        // Empty compression set: the reconstruction is the fresh learner's
        // initial predictor, and the original run must have had no updates.
        return original.record.updates.empty() &&
               learner->current_predictor() == original.predictor;
    }
    auto rerun = try_cycle_robust(subsample, *learner, oracle, pass_cap);
    if (!rerun) return false;
    if (!(rerun->predictor == original.predictor)) return false;
    const auto& a = rerun->record.updates;
    const auto& b = original.record.updates;
    if (a.size() != b.size()) return false;
    for (size_t i = 0; i < a.size(); ++i)
        if (a[i].fed != b[i].fed || a[i].origin != b[i].origin) return false;
    return true;
}

}  // namespace

StabilityReport stability_check(const std::vector<LabeledExample>& sample,
                                const CycleRobustResult& result, const LearnerFactory& factory,
                                AttackOracle& oracle, int pass_cap, int draws, Rng& rng) {
    StabilityReport report;
    std::vector<int> kappa = result.record.kappa_indices();
    std::unordered_set<int> in_kappa(kappa.begin(), kappa.end());

    std::vector<LabeledExample> kappa_sample;
    std::vector<int> sorted_kappa(kappa.begin(), kappa.end());
    std::sort(sorted_kappa.begin(), sorted_kappa.end());
    for (int i : sorted_kappa) kappa_sample.push_back(sample[i]);

    if (!reproduces(kappa_sample, result, factory, oracle, pass_cap)) report.passed = false;
    if (report.passed && !reproduces(sample, result, factory, oracle, pass_cap))
        report.passed = false;

    for (int d = 0; report.passed && d < draws; ++d) {
        std::vector<LabeledExample> sub;
        for (int i = 0; i < int(sample.size()); ++i)
            if (in_kappa.count(i) || rng.next_bool()) sub.push_back(sample[i]);
        if (!reproduces(sub, result, factory, oracle, pass_cap)) report.passed = false;
        ++report.draws_checked;
    }
    return report;
}

double stable_compression_bound(int m, int k, double delta) {
    if (k < 0 || m <= 2 * k) throw ScaleCapError("stable compression bound needs m > 2k, k >= 0");
    if (delta <= 0 || delta >= 1) throw ScaleCapError("delta must be in (0,1)");
    return 2.0 / double(m - 2 * k) * (double(k) * std::log(4.0) + std::log(1.0 / delta));
}

double robust_compression_bound(int m, int k, double delta) {
    if (k < 0 || m <= k) throw ScaleCapError("robust compression bound needs m > k, k >= 0");
    if (delta <= 0 || delta >= 1) throw ScaleCapError("delta must be in (0,1)");
    return 1.0 / double(m - k) * (double(k) * std::log(double(m)) + std::log(1.0 / delta));
}

}  // namespace upset
