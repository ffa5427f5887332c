#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "upset/games.hpp"
#include "upset/scenario.hpp"

using namespace upset;

namespace {

// Membership-honest by claim, but leaves U(x) under the identity sets.
class EscapingAttacker final : public Attacker {
  public:
    explicit EscapingAttacker(int instances) : instances_(instances) {}
    int attack(const Predictor&, const LabeledExample& ex, Rng&) override {
        return (ex.x + 1) % instances_;
    }
    bool membership_honest() const override { return true; }

  private:
    int instances_;
};

// Greedy attack with the exact-error shortcut hidden, forcing Monte Carlo.
class SilentGreedyAttacker final : public Attacker {
  public:
    explicit SilentGreedyAttacker(const PerturbationSet& u) : greedy_(u) {}
    int attack(const Predictor& pred, const LabeledExample& ex, Rng& rng) override {
        return greedy_.attack(pred, ex, rng);
    }
    bool membership_honest() const override { return true; }

  private:
    GreedyAttacker greedy_;
};

struct TwoPointSetup {
    HypothesisClass cls = make_threshold_class(2);
    PerturbationSet u{2, {{0, 1}, {1}}};
    FiniteDistribution dist{{{{0, +1}, 0.4}, {{0, -1}, 0.1}, {{1, -1}, 0.4}, {{1, +1}, 0.1}}, 2};
};

}  // namespace

TEST_CASE("attacker exact errors on a two-point distribution") {
    TwoPointSetup setup;
    Predictor pred = Predictor::class_member(setup.cls, 0);  // (+1, -1)

    IdentityAttacker identity;
    CHECK(*identity.exact_error(pred, setup.dist) == doctest::Approx(0.2).epsilon(1e-12));

    GreedyAttacker greedy(setup.u);
    CHECK(*greedy.exact_error(pred, setup.dist) == doctest::Approx(0.6).epsilon(1e-12));

    UniformAttacker uniform(setup.u);
    CHECK(*uniform.exact_error(pred, setup.dist) == doctest::Approx(0.35).epsilon(1e-12));

    BlindAttacker blind(setup.u, 0.25);
    CHECK(*blind.exact_error(pred, setup.dist) == doctest::Approx(0.5).epsilon(1e-12));

    CHECK_THROWS_AS(BlindAttacker(setup.u, 1.5), Error);
    CHECK_THROWS_AS(BlindAttacker(setup.u, -0.1), Error);
}

TEST_CASE("attacker error estimation uses exact values when offered") {
    TwoPointSetup setup;
    Predictor pred = Predictor::class_member(setup.cls, 0);
    GreedyAttacker greedy(setup.u);
    Rng rng(7);
    auto est = attacker_error(pred, greedy, setup.dist, 100, rng);
    CHECK(est.exact);
    CHECK(est.radius == 0.0);
    CHECK(est.value == doctest::Approx(0.6).epsilon(1e-12));
    CHECK_THROWS_AS(attacker_error(pred, greedy, setup.dist, 0, rng), Error);
}

TEST_CASE("attacker error estimation falls back to Monte Carlo") {
    TwoPointSetup setup;
    Predictor pred = Predictor::class_member(setup.cls, 0);
    SilentGreedyAttacker silent(setup.u);
    Rng rng(1234);
    auto est = attacker_error(pred, silent, setup.dist, 4000, rng);
    CHECK_FALSE(est.exact);
    CHECK(est.trials == 4000);
    CHECK(est.radius == doctest::Approx(std::sqrt(std::log(2.0 / 0.05) / 8000.0)).epsilon(1e-12));
    CHECK(std::abs(est.value - 0.6) <= est.radius);
}

TEST_CASE("attack game structure and conservative fingerprints") {
    Rng rng(90210);
    Scenario s = thresholds_scenario(8, 5, 0.0, 1, rng);
    auto cache = make_lit_cache(s.cls);
    SoaLearner learner(s.cls, cache);
    GreedyAttacker attacker(s.u);
    auto transcript = attack_game(learner, attacker, s.dist, s.u, 60, rng);

    REQUIRE(int(transcript.rounds.size()) == 60);
    int counted = 0;
    for (const auto& round : transcript.rounds) counted += round.success;
    CHECK(counted == transcript.successes);
    // the learner is conservative: its predictor moves only on successes
    for (size_t t = 0; t + 1 < transcript.rounds.size(); ++t)
        if (!transcript.rounds[t].success)
            CHECK(transcript.rounds[t + 1].fingerprint == transcript.rounds[t].fingerprint);
    for (const auto& round : transcript.rounds) CHECK(s.u.contains(round.drawn.x, round.z));

    CHECK_THROWS_AS(attack_game(learner, attacker, s.dist, s.u, -1, rng), Error);
}

TEST_CASE("online learner concedes at most its mistake bound against every attacker") {
    Rng rng(445566);
    for (int trial = 0; trial < 30; ++trial) {
        Scenario s = thresholds_scenario(8, 5, 0.0, 1, rng);
        auto cache = make_lit_cache(s.cls);
        int lit = cache->lit(s.cls.full_version());

        GreedyAttacker greedy(s.u);
        UniformAttacker uniform(s.u);
        BlindAttacker blind(s.u, 0.3);
        IdentityAttacker identity;
        Attacker* attackers[] = {&greedy, &uniform, &blind, &identity};
        for (Attacker* attacker : attackers) {
            SoaLearner learner(s.cls, cache);
            auto transcript = attack_game(learner, *attacker, s.dist, s.u, 50, rng);
            CHECK(transcript.successes <= lit);
            CHECK(learner.updates() <= lit);
        }
    }
}

TEST_CASE("membership dishonesty is caught") {
    Rng rng(13);
    Scenario s = cube_scenario(2, 3, rng);  // identity perturbation
    auto cache = make_lit_cache(s.cls);
    EscapingAttacker escaping(s.cls.instances());
    {
        SoaLearner learner(s.cls, cache);
        CHECK_THROWS_AS(attack_game(learner, escaping, s.dist, s.u, 10, rng),
                        ContractViolationError);
    }
    {
        SoaLearner learner(s.cls, cache);
        CHECK_THROWS_AS(
            survivor_learn(s.dist, learner, escaping, s.u, 0.25, 0.25, learner.mistake_bound(), rng),
            ContractViolationError);
    }
}

TEST_CASE("binary search finds the secret threshold in exactly log2 queries") {
    Rng rng(2026);
    for (int d : {9, 17, 33}) {
        int expected = 0;
        while ((1 << expected) < d - 1) ++expected;
        for (int trial = 0; trial < 50; ++trial) {
            auto run = threshold_lower_bound_game(LowerBoundStrategy::BinarySearch, d, rng);
            CHECK(run.queries == expected);
            CHECK(run.output_threshold == run.secret);
            CHECK(run.output_risk == 0.0);
            REQUIRE(!run.version_sizes.empty());
            CHECK(run.version_sizes.front() == d - 1);
            CHECK(run.version_sizes.back() == 1);
        }
    }
}

TEST_CASE("every lower bound strategy terminates, identifies the secret, and shrinks the version") {
    Rng rng(355113);
    for (auto strategy : {LowerBoundStrategy::BinarySearch, LowerBoundStrategy::SoaDriven,
                          LowerBoundStrategy::UniformRandom}) {
        for (int trial = 0; trial < 40; ++trial) {
            int d = 5 + trial % 13;
            auto run = threshold_lower_bound_game(strategy, d, rng);
            CHECK(run.output_threshold == run.secret);
            CHECK(run.output_risk == 0.0);
            CHECK(run.queries <= 4 * d);
            CHECK(int(run.ratios.size()) == run.queries);
            for (size_t i = 0; i + 1 < run.version_sizes.size(); ++i)
                CHECK(run.version_sizes[i + 1] <= run.version_sizes[i]);
            double product = 1;
            for (double r : run.ratios) {
                CHECK(r > 0.0);
                CHECK(r <= 1.0 + 1e-12);
                product *= r;
            }
            CHECK(product * (d - 1) == doctest::Approx(run.version_sizes.back()).epsilon(1e-9));
        }
    }
    CHECK_THROWS_AS(threshold_lower_bound_game(LowerBoundStrategy::BinarySearch, 2, rng), Error);
    CHECK_THROWS_AS(threshold_lower_bound_game(LowerBoundStrategy::BinarySearch, 9, rng, 1),
                    NonTerminatingError);
}

TEST_CASE("randomized lower bound runs replay exactly under one seed") {
    auto once = [](uint64_t seed) {
        Rng rng(seed);
        return threshold_lower_bound_game(LowerBoundStrategy::UniformRandom, 17, rng);
    };
    auto a = once(8675309);
    auto b = once(8675309);
    CHECK(a.secret == b.secret);
    CHECK(a.queries == b.queries);
    CHECK(a.output_threshold == b.output_threshold);
    CHECK(a.version_sizes == b.version_sizes);
}

TEST_CASE("survivor learning finishes with few updates on realizable scenarios") {
    Rng rng(72727);
    for (int trial = 0; trial < 20; ++trial) {
        Scenario s = thresholds_scenario(8, 5, 0.0, 1, rng);
        auto cache = make_lit_cache(s.cls);
        int lit = cache->lit(s.cls.full_version());
        SoaLearner learner(s.cls, cache);
        GreedyAttacker attacker(s.u);
        double eps = 0.25, delta = 0.25;
        auto out = survivor_learn(s.dist, learner, attacker, s.u, eps, delta, lit, rng);

        double log_term = std::log(double(lit + 1) / delta);
        CHECK(out.streak_target == int(std::ceil(log_term / eps)));
        CHECK(out.round_cap == (long long)std::ceil(2.0 * lit / eps * log_term) + out.streak_target);
        CHECK(out.updates <= lit);
        CHECK(out.rounds <= out.round_cap);
        CHECK(robust_risk(out.predictor, s.dist, s.u) >= 0.0);
    }
}

TEST_CASE("survivor learning gives up when nothing survives") {
    HypothesisClass cls(2, {0b11});  // single always-positive row
    PerturbationSet u = PerturbationSet::identity(2);
    FiniteDistribution dist({{{0, -1}, 1.0}}, 2);
    auto cache = make_lit_cache(cls);
    SoaLearner learner(cls, cache);
    GreedyAttacker attacker(u);
    Rng rng(99);
    CHECK_THROWS_AS(survivor_learn(dist, learner, attacker, u, 0.5, 0.5, 1, rng),
                    SurvivorFailureError);

    SoaLearner fresh(cls, cache);
    CHECK_THROWS_AS(survivor_learn(dist, fresh, attacker, u, 0.0, 0.5, 1, rng), Error);
    CHECK_THROWS_AS(survivor_learn(dist, fresh, attacker, u, 0.5, 1.0, 1, rng), Error);
    CHECK_THROWS_AS(survivor_learn(dist, fresh, attacker, u, 0.5, 0.5, -1, rng), Error);
}
