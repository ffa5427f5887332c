#pragma once

#include <utility>
#include <vector>

#include "upset/online.hpp"

namespace upset {

// a_eta = ln(1/eta) / ln(2/(1+eta)), b_eta = 1 / ln(2/(1+eta)); natural logs.
std::pair<double, double> regret_constants(double eta);

// 1 - eta = min(2 ln(family) / horizon, 1/2). A single-expert family would
// produce eta = 1; weights are irrelevant there, so 1/2 is substituted.
double default_eta(double ln_family, int horizon);

struct WmRound {
    int round = 0;  // 0-based stream position
    int z = -1;
    Label y = 0;
};

struct WmFiniteResult {
    std::vector<double> weights;     // final weight per row
    std::vector<WmRound> mistakes;   // counterexample rounds
    long long queries = 0;
    double eta = 0;
    int mistake_count() const { return int(mistakes.size()); }
};

// Weighted majority over the class rows. Every round queries the oracle with
// the current weighted vote (tie -> +1); on a counterexample exactly the rows
// erring at (z_t, y_t) are scaled by eta. Asserts the per-round total weight
// contraction W_t <= ((1+eta)/2) W_{t-1} on counterexample rounds.
WmFiniteResult wm_finite(const HypothesisClass& cls, const std::vector<LabeledExample>& stream,
                         double eta, AttackOracle& oracle);

// min over rows of the number of stream elements with robust loss 1.
int opt_robust_mistakes(const HypothesisClass& cls, const std::vector<LabeledExample>& stream,
                        const PerturbationSet& u);

// Flip rounds are positions in the realized counterexample subsequence
// (1-based); the expert ignores stream rounds where no counterexample was
// revealed, since nothing is disclosed on them.
struct ExpertSpec {
    std::vector<int> flips;
    bool operator==(const ExpertSpec&) const = default;
};

// All strictly increasing tuples over 1..horizon of length 0..max_flips,
// ordered by length then lexicographically.
std::vector<ExpertSpec> make_expert_family(int max_flips, int horizon, long long cap = 2000000);

// Family size without materializing: sum of C(horizon, L) for L <= max_flips.
long long expert_family_size(int max_flips, int horizon);

// Replays the expert over the counterexample prefix (revealed labels are
// recorded but never drive updates: the version space is restricted by the
// expert's own prediction, and an emptied version space pins the expert to
// +1). Returns the prediction at x on the next counterexample round.
Label expert_predict(const ExpertSpec& spec, const HypothesisClass& cls, LitCache& cache,
                     const std::vector<std::pair<int, Label>>& history, int x);

struct WmExpertsResult {
    std::vector<double> weights;                       // final weight per expert
    std::vector<WmRound> mistakes;                     // counterexample rounds
    std::vector<std::pair<int, Label>> counterexamples;  // the revealed (z, y) sequence
    std::vector<Predictor> round_votes;                // compound vote used each round
    long long queries = 0;
    double eta = 0;
    long long family_size = 0;
    int mistake_count() const { return int(mistakes.size()); }
};

// Weighted majority over the expert family. Experts advance only on
// counterexample rounds, so the compound vote is rebuilt exactly when a
// counterexample arrives; the oracle is still queried once per round.
// eta < 0 selects the default for (family, |stream|).
WmExpertsResult wm_experts(const HypothesisClass& cls, const std::vector<LabeledExample>& stream,
                           AttackOracle& oracle, double eta = -1, long long family_cap = 2000000);

// Same game without materializing the family: experts sharing a (version
// space, flips used) state and fire history are grouped, and the number of
// ways to extend a fire prefix enters the vote as an exact integer
// multiplicity. Votes, mistakes, and counterexamples match wm_experts on
// every stream; the per-expert weights vector is left empty. Requires the
// family size to stay below 2^53 so multiplicities are exact.
WmExpertsResult wm_experts_grouped(const HypothesisClass& cls,
                                   const std::vector<LabeledExample>& stream, AttackOracle& oracle,
                                   double eta = -1);

// The flip tuple whose expert tracks the given row on the realized
// counterexample sequence; its length never exceeds lit of the class.
ExpertSpec tracking_spec(const HypothesisClass& cls, LitCache& cache,
                         const std::vector<std::pair<int, Label>>& counterexamples, int row);

struct OnlineToBatchResult {
    std::vector<Predictor> prefix_predictors;  // predictor before each round
    double mixture_risk = 0;                   // exact average robust risk
    double opt_risk = 0;                       // exact inf over rows
    WmExpertsResult run;
};

// Draws an iid stream of length m, runs the expert weighted majority over it,
// and returns the uniform mixture over the m per-prefix compound predictors
// with its exact robust risk under the sampling distribution.
OnlineToBatchResult online_to_batch(const HypothesisClass& cls, const FiniteDistribution& dist,
                                    const PerturbationSet& u, AttackOracle& oracle, int m, Rng& rng,
                                    double eta = -1, long long family_cap = 2000000);

}  // namespace upset
