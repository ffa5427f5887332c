#pragma once

#include <optional>
#include <unordered_set>
#include <vector>

#include "upset/compress.hpp"

namespace upset {

// Deduplicated predictors obtained by running cycle_robust on every sample
// subset of size 1..n (lexicographic enumeration). Subsets with no robustly
// consistent hypothesis are skipped and counted.
struct HypothesisPool {
    std::vector<Predictor> members;
    std::vector<std::vector<int>> generators;  // first subset producing each member
    int sample_size = 0;
    int subset_size = 0;
    long long enumerated = 0;
    long long skipped = 0;
    long long queries = 0;

    int find(const Predictor& p) const;  // -1 if absent
};

HypothesisPool build_pool(const std::vector<LabeledExample>& sample, int n,
                          const LearnerFactory& factory, AttackOracle& oracle,
                          long long enumeration_cap = 10000);

// One representative perturbation per distinct pool error pattern.
struct DiscretizedPoint {
    LabeledExample point;
    Bits pattern;  // bit per pool member: 1 iff member misclassifies (point, y)
    int origin_index = -1;
};

struct DiscretizedSet {
    std::vector<DiscretizedPoint> points;
    long long queries = 0;
    long long max_queries_per_example = 0;
};

// Pattern of (z, y) against the pool.
Bits pool_pattern(const HypothesisPool& pool, int z, Label y);

// Per training example, grows a pattern list P from the example itself until
// the pattern predictor f_P is robustly correct; every counterexample carries
// a pattern new to P. The example's own seed pattern joins the output only
// when x is a member of U(x) (otherwise it may not be realized inside U(x)).
DiscretizedSet discretize(const std::vector<LabeledExample>& sample, const HypothesisPool& pool,
                          AttackOracle& oracle, const PerturbationSet& u);

struct BoostConfig {
    int rounds = 0;       // 0 -> ceil(112 ln |dset|), at least 1
    double alpha = -1;    // <0 -> 0.5 ln(1 + sqrt(2 ln|dset| / rounds))
    int retry_cap = 100;  // redraws allowed per round
};

struct BoostRound {
    Predictor predictor;
    std::vector<int> drawn_points;   // dset indices drawn this round
    std::vector<int> origin_draws;   // their originating sample indices (size n)
    double weighted_error = 0;       // err under D_t after acceptance
    double normalizer = 1;
    int redraws = 0;
};

struct BoostRun {
    std::vector<BoostRound> rounds;
    std::vector<std::vector<double>> distributions;  // D_t per round (before update)
    std::vector<double> margins;                     // per dset point
    double alpha = 0;
    long long queries = 0;
};

// Distribution boosting over the discretized set. Each round draws n points
// iid from D_t, projects them to their originating examples, fits
// cycle_robust there, and reweights correctly classified points by e^(-2a).
// Rounds whose weighted error exceeds 1/3 are redrawn. Every margin must end
// at or above 5/9.
BoostRun alpha_boost(const DiscretizedSet& dset, const std::vector<LabeledExample>& sample, int n,
                     const LearnerFactory& factory, AttackOracle& oracle, const BoostConfig& config,
                     Rng& rng);

struct SparsifyResult {
    std::vector<int> chosen_rounds;  // N indices into the boost run
    Predictor majority;
    int draws_used = 0;
    long long queries = 0;
};

// Uniform round sampling until the sampled majority has zero empirical robust
// loss on the sample.
SparsifyResult sparsify(const BoostRun& run, const std::vector<LabeledExample>& sample,
                        AttackOracle& oracle, int N, int draw_cap, Rng& rng);

struct RluaConfig {
    int n = 0;      // pool subset size; must be set by the caller (>= 1)
    int N = 0;      // 0 -> max(ceil(324 (d* + ln 3)), 9)
    BoostConfig boost;
    int sparsify_draw_cap = 200;
    long long pool_cap = 10000;
};

struct RluaResult {
    Predictor predictor;
    long long pool_enumerated = 0;
    int pool_size = 0;
    int dset_size = 0;
    int dual_vc_pool = 0;
    int rounds = 0;
    double alpha = 0;
    int N = 0;
    std::vector<std::vector<int>> compression;  // N entries of n origin indices
    int compression_size = 0;                   // n * N
    long long queries = 0;
};

RluaResult rlua_learn(const std::vector<LabeledExample>& sample, const LearnerFactory& factory,
                      AttackOracle& oracle, const PerturbationSet& u, const RluaConfig& config,
                      Rng& rng);

struct ConfidenceConfig {
    int rounds = 0;      // 0 -> ceil(112 ln m), at least 1
    double alpha = -1;   // <0 -> lemma value for (m, rounds)
    int weak_sample = 8; // draw size handed to the weak learner
    RluaConfig weak;     // inner pipeline configuration
};

struct ConfidenceRun {
    Predictor majority;
    std::vector<Predictor> round_predictors;
    std::vector<double> round_errors;  // robust risk under D_t
    std::vector<int> round_retries;
    long long queries = 0;
};

// Outer boosting over training examples with robust-loss reweighting; each
// round retries the weak learner until its robust risk under D_t is at most
// 1/3. The final majority has zero empirical robust loss on the sample.
ConfidenceRun boost_confidence(const std::vector<LabeledExample>& sample,
                               const LearnerFactory& factory, AttackOracle& oracle,
                               const PerturbationSet& u, const ConfidenceConfig& config,
                               double delta, Rng& rng);

struct AgnosticResult {
    Predictor predictor;
    std::vector<int> kept_indices;  // the maximal realizable subsequence
    bool degenerate = false;        // no nonempty subsequence was realizable
    long long queries = 0;
};

// Size-descending subsequence search (first realizable size wins), then
// confidence boosting on the surviving subsequence. Worst case enumerates all
// 2^m subsequences; m is capped at 16.
AgnosticResult agnostic_reduce(const std::vector<LabeledExample>& sample,
                               const LearnerFactory& factory, AttackOracle& oracle,
                               const PerturbationSet& u, const ConfidenceConfig& config,
                               double delta, Rng& rng);

// ceil(112 ln m), at least 1.
int default_boost_rounds(int m);

// 0.5 ln(1 + sqrt(2 ln m / T)).
double default_boost_alpha(int m, int rounds);

// max(ceil(324 (dstar + ln 3)), 9): sparsification size at accuracy 1/18 and
// failure budget 1/3.
int default_sparsify_size(int dstar);

}  // namespace upset
