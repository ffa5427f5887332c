#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "upset/online.hpp"

namespace upset {

// A possibly randomized attack procedure. Membership-honest attackers promise
// z in U(x) for every call; unconstrained ones make no promise and the game
// skips the membership assert for them. Attackers must be stationary: the
// response may depend only on the arguments and the supplied randomness.
class Attacker {
  public:
    virtual ~Attacker() = default;
    virtual int attack(const Predictor& pred, const LabeledExample& ex, Rng& rng) = 0;
    virtual bool membership_honest() const = 0;
    // Exact err_A(pred; dist) when the attack distribution is enumerable.
    virtual std::optional<double> exact_error(const Predictor& pred,
                                              const FiniteDistribution& dist) const {
        (void)pred;
        (void)dist;
        return std::nullopt;
    }
};

// Always returns the unperturbed instance.
class IdentityAttacker final : public Attacker {
  public:
    int attack(const Predictor&, const LabeledExample& ex, Rng&) override { return ex.x; }
    bool membership_honest() const override { return false; }
    std::optional<double> exact_error(const Predictor& pred,
                                      const FiniteDistribution& dist) const override;
};

// Uniform draw from U(x); requires nonempty candidate sets.
class UniformAttacker final : public Attacker {
  public:
    explicit UniformAttacker(const PerturbationSet& u) : u_(&u) {}
    int attack(const Predictor& pred, const LabeledExample& ex, Rng& rng) override;
    bool membership_honest() const override { return true; }
    std::optional<double> exact_error(const Predictor& pred,
                                      const FiniteDistribution& dist) const override;

  private:
    const PerturbationSet* u_;
};

// The canonical perfect oracle as an attacker: first misclassified member of
// U(x) in ascending order, or the first member when none is misclassified.
class GreedyAttacker final : public Attacker {
  public:
    explicit GreedyAttacker(const PerturbationSet& u) : u_(&u) {}
    int attack(const Predictor& pred, const LabeledExample& ex, Rng& rng) override;
    bool membership_honest() const override { return true; }
    std::optional<double> exact_error(const Predictor& pred,
                                      const FiniteDistribution& dist) const override;

  private:
    const PerturbationSet* u_;
};

// Perfect with probability 1-p, identity with probability p.
class BlindAttacker final : public Attacker {
  public:
    BlindAttacker(const PerturbationSet& u, double p);
    int attack(const Predictor& pred, const LabeledExample& ex, Rng& rng) override;
    bool membership_honest() const override { return false; }
    std::optional<double> exact_error(const Predictor& pred,
                                      const FiniteDistribution& dist) const override;

  private:
    GreedyAttacker greedy_;
    double p_;
};

struct GameRound {
    LabeledExample drawn;  // (x_t, y_t); kept for verification, never shown to the learner
    int z = -1;
    Label prediction = 0;
    bool success = false;       // prediction != y_t
    uint64_t fingerprint = 0;   // predictor the attacker saw
};

struct GameTranscript {
    std::vector<GameRound> rounds;
    int successes = 0;
};

// Online attack game: each round draws (x_t, y_t) iid, the attacker picks z_t
// against the learner's current predictor, the learner predicts from z_t
// alone, then y_t is revealed. Membership-honest attackers are checked
// against U on every round.
GameTranscript attack_game(OnlineLearner& learner, Attacker& attacker,
                           const FiniteDistribution& dist, const PerturbationSet& u, int rounds,
                           Rng& rng);

// Monte Carlo estimate of err_A(pred; dist) with a 95% Hoeffding radius, or
// the attacker's exact value when it offers one (radius 0).
struct ErrorEstimate {
    double value = 0;
    double radius = 0;
    bool exact = false;
    long long trials = 0;
};

ErrorEstimate attacker_error(const Predictor& pred, Attacker& attacker,
                             const FiniteDistribution& dist, long long trials, Rng& rng);

enum class LowerBoundStrategy { BinarySearch, SoaDriven, UniformRandom };

// One run of the information-theoretic game over d thresholds: a secret
// threshold index is drawn, the strategy queries the constructed oracle until
// only one candidate survives, and the output must have exact robust risk 0
// on the two-point target distribution. version_sizes starts at |V_0| = d-1;
// ratios holds |V_t| / |V_{t-1}| per query.
struct LowerBoundRun {
    int secret = 0;  // 1..d-1
    int queries = 0;
    std::vector<int> version_sizes;
    std::vector<double> ratios;
    int output_threshold = 0;
    double output_risk = 0;
};

LowerBoundRun threshold_lower_bound_game(LowerBoundStrategy strategy, int d, Rng& rng,
                                         int round_cap = 0);  // 0 -> 4d

struct SurvivorResult {
    Predictor predictor;
    int rounds = 0;   // attacker calls consumed
    int updates = 0;  // learner updates
    int streak_target = 0;
    long long round_cap = 0;
};

// Streams iid examples through the attacker, updating the conservative
// learner on mistakes, until the current predictor survives
// ceil((1/eps) ln((L+1)/delta)) consecutive attacked examples; gives up past
// ceil(2 (L/eps) ln((L+1)/delta)) + streak rounds.
SurvivorResult survivor_learn(const FiniteDistribution& dist, OnlineLearner& learner,
                              Attacker& attacker, const PerturbationSet& u, double epsilon,
                              double delta, int littlestone, Rng& rng);

}  // namespace upset
