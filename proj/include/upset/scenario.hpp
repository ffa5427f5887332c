#pragma once

#include <string>
#include <vector>

#include "upset/rlua.hpp"

namespace upset {

// A self-contained experiment instance. realizable means the exact optimal
// robust risk under (cls, u, dist) is zero; target_row is the witness row
// when one was used to label the distribution.
struct Scenario {
    HypothesisClass cls;
    PerturbationSet u;
    FiniteDistribution dist;
    std::string kind;
    bool realizable = false;
    int target_row = -1;
};

// U(x) = [x - radius, x + radius] clamped to the instance range.
PerturbationSet neighbor_perturbation(int instances, int radius);

// Thresholds over n points with the neighbor perturbation. noise = 0 draws
// atoms only where the target row is robustly correct; noise > 0 moves that
// fraction of each atom's mass to the flipped label (making the exact optimal
// risk positive).
Scenario thresholds_scenario(int n, int atoms, double noise, int radius, Rng& rng);

// Random hypothesis masks over a small instance space; U is identity plus
// random extra members at the given density. Realizable scenarios are redrawn
// until a row is robustly correct on at least two instances.
Scenario random_scenario(int instances, int hypotheses, int atoms, double density,
                         bool realizable, Rng& rng);

// Every labeling of k instances, identity perturbation, realizable by
// construction.
Scenario cube_scenario(int k, int atoms, Rng& rng);

// Reference enumeration for the discretizer: every pattern realized by any
// z in U(x) over the sample, (z, y) patterns deduplicated, in first-occurrence
// order (sample order, then ascending z).
std::vector<Bits> brute_pattern_set(const std::vector<LabeledExample>& sample,
                                    const HypothesisPool& pool, const PerturbationSet& u);

// A sample with `pairs` contradictory pairs (x, +1), (x, -1) on distinct
// instances plus clean points labeled by the target row. Any predictor errs
// on at least one member of each pair, and dropping one member of each pair
// leaves a robustly realizable subsequence, so the exact optimal empirical
// robust count equals `pairs`.
struct PoisonedSample {
    std::vector<LabeledExample> sample;
    int expected_opt = 0;
};

PoisonedSample poison_sample(const Scenario& scenario, int clean, int pairs, Rng& rng);

// Uniformly random atoms labeled by the scenario's target row restricted to
// robustly correct instances; used to draw realizable training samples.
std::vector<LabeledExample> realizable_sample(const Scenario& scenario, int m, Rng& rng);

}  // namespace upset
