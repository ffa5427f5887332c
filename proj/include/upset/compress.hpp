#pragma once

#include <optional>
#include <vector>

#include "upset/online.hpp"

namespace upset {

struct CompressionUpdate {
    LabeledExample fed;     // (z, y) handed to the learner
    LabeledExample origin;  // the training example whose certification failed
    int origin_index = -1;  // position within the sample
    int pass = 0;           // 1-based pass number
};

struct CompressionRecord {
    std::vector<CompressionUpdate> updates;
    int passes = 0;
    long long queries = 0;
    int size() const { return int(updates.size()); }
    // Distinct originating sample positions, in first-update order.
    std::vector<int> kappa_indices() const;
};

struct CycleRobustResult {
    Predictor predictor;
    CompressionRecord record;
};

// NonRealizable failure that keeps the partial run for inspection.
struct CycleRobustError : NonRealizableError {
    CycleRobustError(const std::string& what, CompressionRecord partial)
        : NonRealizableError(what), partial_record(std::move(partial)) {}
    CompressionRecord partial_record;
};

// Repeated certification passes over the sample: every example is checked
// through the oracle with the learner's current predictor; counterexamples
// are fed back as (z, y). Stops after the first clean pass. Throws
// NonRealizableError (carrying the partial record in its message context) if
// the version space empties or the pass cap is exceeded.
CycleRobustResult cycle_robust(const std::vector<LabeledExample>& sample, OnlineLearner& learner,
                               AttackOracle& oracle, int pass_cap);

// Same, with pass_cap = learner.mistake_bound() + 2.
CycleRobustResult cycle_robust(const std::vector<LabeledExample>& sample, OnlineLearner& learner,
                               AttackOracle& oracle);

// Non-throwing probe used by enumeration loops.
std::optional<CycleRobustResult> try_cycle_robust(const std::vector<LabeledExample>& sample,
                                                  OnlineLearner& learner, AttackOracle& oracle,
                                                  int pass_cap);

struct StabilityReport {
    bool passed = true;
    int draws_checked = 0;
};

// Reruns cycle_robust on kappa(S) itself, on S, and on `draws` random
// supersets of kappa(S) within S (order preserved); every rerun must
// reproduce the original update sequence and output truth table.
StabilityReport stability_check(const std::vector<LabeledExample>& sample,
                                const CycleRobustResult& result, const LearnerFactory& factory,
                                AttackOracle& oracle, int pass_cap, int draws, Rng& rng);

// (2 / (m - 2k)) * (k ln 4 + ln(1/delta)); requires m > 2k.
double stable_compression_bound(int m, int k, double delta);

// (1 / (m - k)) * (k ln m + ln(1/delta)); requires m > k.
double robust_compression_bound(int m, int k, double delta);

}  // namespace upset
