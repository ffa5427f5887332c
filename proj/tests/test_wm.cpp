#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <climits>
#include <cmath>

#include "upset/scenario.hpp"
#include "upset/weighted_majority.hpp"

using namespace upset;

namespace {

// Exact best expert on the realized counterexample sequence, by replay.
int best_expert_mistakes(const HypothesisClass& cls, LitCache& cache,
                         const std::vector<ExpertSpec>& family,
                         const std::vector<std::pair<int, Label>>& cexs) {
    int best = INT_MAX;
    for (const auto& spec : family) {
        int errs = 0;
        std::vector<std::pair<int, Label>> prefix;
        for (const auto& [z, y] : cexs) {
            if (expert_predict(spec, cls, cache, prefix, z) != y) ++errs;
            prefix.push_back({z, y});
        }
        best = std::min(best, errs);
    }
    return best;
}

int find_spec(const std::vector<ExpertSpec>& family, const ExpertSpec& spec) {
    for (size_t i = 0; i < family.size(); ++i)
        if (family[i] == spec) return int(i);
    return -1;
}

}  // namespace

TEST_CASE("regret constants match hand-computed values") {
    auto [a, b] = regret_constants(0.5);
    CHECK(a == doctest::Approx(2.4094208396532095).epsilon(1e-12));
    CHECK(b == doctest::Approx(3.476059496782208).epsilon(1e-12));

    // a = b ln(1/eta) by definition
    for (double eta : {0.3, 0.5, 0.77}) {
        auto [ae, be] = regret_constants(eta);
        CHECK(ae == doctest::Approx(be * std::log(1.0 / eta)).epsilon(1e-12));
    }

    // eta -> 1 drives the multiplier toward 2 and the additive term up
    auto [a999, b999] = regret_constants(0.999);
    CHECK(a999 > 2.0);
    CHECK(a999 < 2.01);
    CHECK(b999 > regret_constants(0.9).second);
    CHECK(regret_constants(0.9).second > b);

    CHECK_THROWS_AS(regret_constants(0.0), Error);
    CHECK_THROWS_AS(regret_constants(1.0), Error);
    CHECK_THROWS_AS(regret_constants(-0.2), Error);
}

TEST_CASE("default eta clamps and degenerates sensibly") {
    CHECK(default_eta(0.0, 10) == 0.5);                      // single expert
    CHECK(default_eta(std::log(8.0), 4) == 0.5);             // clamp at 1/2
    CHECK(default_eta(std::log(8.0), 1000) ==
          doctest::Approx(1.0 - 2.0 * std::log(8.0) / 1000).epsilon(1e-12));
    CHECK_THROWS_AS(default_eta(1.0, 0), Error);
    CHECK_THROWS_AS(default_eta(-0.1, 10), Error);
}

TEST_CASE("finite weighted majority on a single row") {
    HypothesisClass cls(2, {0b01});
    PerturbationSet u = PerturbationSet::identity(2);
    CanonicalOracle oracle(u);
    std::vector<LabeledExample> stream = {{0, +1}, {0, -1}, {1, -1}};

    auto run = wm_finite(cls, stream, 0.5, oracle);
    CHECK(run.queries == 3);
    CHECK(run.mistake_count() == 1);
    CHECK(run.mistakes[0].round == 1);
    CHECK(run.mistakes[0].z == 0);
    CHECK(run.mistakes[0].y == -1);
    CHECK(run.weights == std::vector<double>{0.5});
    CHECK(opt_robust_mistakes(cls, stream, u) == 1);

    CHECK_THROWS_AS(wm_finite(cls, stream, 1.0, oracle), Error);
    CHECK_THROWS_AS(wm_finite(cls, stream, -0.5, oracle), Error);
}

TEST_CASE("finite weighted majority leaves weights alone on robust rounds") {
    HypothesisClass cls = make_threshold_class(4);
    PerturbationSet u = PerturbationSet::identity(4);
    CanonicalOracle oracle(u);
    // the unweighted vote is already robustly correct on both points
    std::vector<LabeledExample> stream = {{0, +1}, {3, -1}};
    auto run = wm_finite(cls, stream, 0.25, oracle);
    CHECK(run.mistake_count() == 0);
    CHECK(run.weights == std::vector<double>(4, 1.0));
    CHECK(run.queries == 2);
}

TEST_CASE("finite weighted majority obeys its mistake bound") {
    Rng rng(911);
    const double etas[] = {0.3, 0.5, 0.8};
    for (int trial = 0; trial < 100; ++trial) {
        Scenario s = random_scenario(4 + trial % 3, 4 + trial % 7, 3, 0.3, false, rng);
        std::vector<LabeledExample> stream = sample_iid(s.dist, 20, rng);
        CanonicalOracle oracle(s.u);
        double eta = etas[trial % 3];
        auto run = wm_finite(s.cls, stream, eta, oracle);

        std::vector<int> realized(s.cls.size(), 0);
        for (const auto& m : run.mistakes)
            for (int r = 0; r < s.cls.size(); ++r)
                if (s.cls.label(r, m.z) != m.y) ++realized[r];
        int opt = *std::min_element(realized.begin(), realized.end());
        auto [a, b] = regret_constants(eta);
        CHECK(run.mistake_count() <= a * opt + b * std::log(double(s.cls.size())) + 1e-9);
    }
}

TEST_CASE("expert family sizes") {
    CHECK(expert_family_size(2, 10) == 56);
    CHECK(expert_family_size(3, 20) == 1351);
    CHECK(expert_family_size(10, 10) == 1024);  // full power set of rounds
    CHECK(expert_family_size(0, 7) == 1);
    CHECK(expert_family_size(30, 80) == LLONG_MAX);  // saturates, no overflow
    CHECK_THROWS_AS(expert_family_size(2, 0), Error);
    CHECK_THROWS_AS(expert_family_size(-1, 5), Error);
}

TEST_CASE("expert family enumeration order and cap") {
    auto family = make_expert_family(2, 4);
    REQUIRE(family.size() == 11);
    CHECK(family[0].flips.empty());
    CHECK(family[1].flips == std::vector<int>{1});
    CHECK(family[4].flips == std::vector<int>{4});
    CHECK(family[5].flips == std::vector<int>{1, 2});
    CHECK(family[10].flips == std::vector<int>{3, 4});
    CHECK_THROWS_AS(make_expert_family(2, 10, 20), ScaleCapError);
}

TEST_CASE("expert replay flips, restricts by its own predictions, and pins emptied versions") {
    HypothesisClass one(1, {0b1});
    auto cache1 = make_lit_cache(one);
    // round-1 flip forces -1 against the forced +1 vote
    CHECK(expert_predict({{1}}, one, *cache1, {}, 0) == -1);
    // that prediction empties the version space; afterwards the expert says +1
    CHECK(expert_predict({{1}}, one, *cache1, {{0, +1}}, 0) == +1);
    CHECK(expert_predict({{1}}, one, *cache1, {{0, -1}}, 0) == +1);

    HypothesisClass cls = make_threshold_class(4);
    auto cache = make_lit_cache(cls);
    // initial vote at x0 is forced +1, and at x3 the deeper side is -1
    CHECK(expert_predict({}, cls, *cache, {}, 0) == +1);
    CHECK(expert_predict({}, cls, *cache, {{3, +1}}, 3) == -1);
    // a round-2 flip negates the second prediction only
    CHECK(expert_predict({{2}}, cls, *cache, {{3, +1}}, 3) == +1);
    CHECK(expert_predict({{2}}, cls, *cache, {}, 0) == +1);

    CHECK_THROWS_AS(expert_predict({{2, 2}}, cls, *cache, {}, 0), Error);
    CHECK_THROWS_AS(expert_predict({{0}}, cls, *cache, {}, 0), Error);

    // replay is deterministic
    Rng rng(5150);
    HypothesisClass big = make_threshold_class(8);
    auto cache8 = make_lit_cache(big);
    for (int trial = 0; trial < 20; ++trial) {
        ExpertSpec spec;
        for (int roundv = 1; roundv <= 7; ++roundv)
            if (rng.next_bool() && int(spec.flips.size()) < 3) spec.flips.push_back(roundv);
        std::vector<std::pair<int, Label>> history;
        for (int i = 0; i < 6; ++i)
            history.push_back({rng.next_int(8), rng.next_bool() ? Label(+1) : Label(-1)});
        int x = rng.next_int(8);
        CHECK(expert_predict(spec, big, *cache8, history, x) ==
              expert_predict(spec, big, *cache8, history, x));
    }
}

TEST_CASE("tracking specs stay within the mistake budget and mirror their row") {
    Rng rng(2718);
    HypothesisClass cls = make_threshold_class(8);
    auto cache = make_lit_cache(cls);
    int lit = cache->lit(cls.full_version());
    REQUIRE(lit == 3);
    for (int trial = 0; trial < 40; ++trial) {
        int row = rng.next_int(cls.size());
        std::vector<std::pair<int, Label>> cexs;
        int len = 1 + rng.next_int(10);
        for (int i = 0; i < len; ++i)
            cexs.push_back({rng.next_int(8), rng.next_bool() ? Label(+1) : Label(-1)});

        ExpertSpec spec = tracking_spec(cls, *cache, cexs, row);
        CHECK(int(spec.flips.size()) <= lit);
        CHECK(std::is_sorted(spec.flips.begin(), spec.flips.end()));

        std::vector<std::pair<int, Label>> prefix;
        for (const auto& [z, y] : cexs) {
            CHECK(expert_predict(spec, cls, *cache, prefix, z) == cls.label(row, z));
            prefix.push_back({z, y});
        }
        (void)prefix;
    }
    CHECK_THROWS_AS(tracking_spec(cls, *cache, {}, 99), Error);
}

TEST_CASE("the tracking expert of a robustly consistent row keeps full weight") {
    Rng rng(31337);
    for (int trial = 0; trial < 5; ++trial) {
        Scenario s = thresholds_scenario(8, 5, 0.0, 1, rng);
        REQUIRE(s.realizable);
        std::vector<LabeledExample> stream = realizable_sample(s, 12, rng);
        CanonicalOracle oracle(s.u);
        auto run = wm_experts(s.cls, stream, oracle);

        auto cache = make_lit_cache(s.cls);
        int lit = cache->lit(s.cls.full_version());
        auto family = make_expert_family(lit, int(stream.size()));
        REQUIRE((long long)family.size() == run.family_size);

        ExpertSpec spec = tracking_spec(s.cls, *cache, run.counterexamples, s.target_row);
        int idx = find_spec(family, spec);
        REQUIRE(idx >= 0);
        CHECK(run.weights[size_t(idx)] == 1.0);
        for (double w : run.weights) {
            CHECK(w <= 1.0);
            CHECK(w > 0.0);
        }
    }
}

TEST_CASE("expert weighted majority obeys its regret bound") {
    Rng rng(40962);
    for (int trial = 0; trial < 30; ++trial) {
        Scenario s = random_scenario(4, 5 + trial % 5, 3, 0.4, false, rng);
        std::vector<LabeledExample> stream = sample_iid(s.dist, 10, rng);
        CanonicalOracle oracle(s.u);
        auto run = wm_experts(s.cls, stream, oracle);

        auto cache = make_lit_cache(s.cls);
        int lit = cache->lit(s.cls.full_version());
        auto family = make_expert_family(lit, int(stream.size()));
        int opt = best_expert_mistakes(s.cls, *cache, family, run.counterexamples);
        auto [a, b] = regret_constants(run.eta);
        CHECK(run.mistake_count() <= a * opt + b * std::log(double(run.family_size)) + 1e-9);
        CHECK(run.queries == int(stream.size()));
    }
}

TEST_CASE("expert weighted majority on realizable streams stays within the additive term") {
    Rng rng(77001);
    for (int trial = 0; trial < 20; ++trial) {
        Scenario s = thresholds_scenario(4, 4, 0.0, 1, rng);
        std::vector<LabeledExample> stream = realizable_sample(s, 10, rng);
        CanonicalOracle oracle(s.u);
        auto run = wm_experts(s.cls, stream, oracle);
        // the tracking expert never errs, so the comparator term vanishes
        auto [a, b] = regret_constants(run.eta);
        (void)a;
        CHECK(run.mistake_count() <= b * std::log(double(run.family_size)) + 1e-9);
    }
}

TEST_CASE("grouped expert weighted majority matches the materialized game exactly") {
    Rng rng(60601);
    const double etas[] = {0.25, 0.5, 0.75};  // dyadic: both runs sum exactly
    for (int trial = 0; trial < 30; ++trial) {
        Scenario s = trial % 2 == 0 ? random_scenario(4, 4 + trial % 5, 3, 0.5, false, rng)
                                    : thresholds_scenario(4 + trial % 3, 4, 0.3, 1, rng);
        std::vector<LabeledExample> stream = sample_iid(s.dist, 8 + trial % 5, rng);
        CanonicalOracle oracle(s.u);
        double eta = etas[trial % 3];

        auto full = wm_experts(s.cls, stream, oracle, eta);
        auto grouped = wm_experts_grouped(s.cls, stream, oracle, eta);

        CHECK(grouped.family_size == full.family_size);
        CHECK(grouped.eta == full.eta);
        CHECK(grouped.queries == full.queries);
        CHECK(grouped.weights.empty());
        REQUIRE(grouped.mistakes.size() == full.mistakes.size());
        for (size_t i = 0; i < full.mistakes.size(); ++i) {
            CHECK(grouped.mistakes[i].round == full.mistakes[i].round);
            CHECK(grouped.mistakes[i].z == full.mistakes[i].z);
            CHECK(grouped.mistakes[i].y == full.mistakes[i].y);
        }
        CHECK(grouped.counterexamples == full.counterexamples);
        REQUIRE(grouped.round_votes.size() == full.round_votes.size());
        for (size_t i = 0; i < full.round_votes.size(); ++i) {
            CHECK(grouped.round_votes[i] == full.round_votes[i]);
            CHECK(grouped.round_votes[i].fingerprint() == full.round_votes[i].fingerprint());
        }
    }
}

TEST_CASE("online to batch aggregation on a noisy two-point distribution") {
    HypothesisClass cls = make_threshold_class(2);
    PerturbationSet u = PerturbationSet::identity(2);
    FiniteDistribution dist({{{0, +1}, 0.4}, {{0, -1}, 0.1}, {{1, -1}, 0.4}, {{1, +1}, 0.1}}, 2);
    REQUIRE(opt_robust_risk(cls, dist, u).risk == doctest::Approx(0.2).epsilon(1e-12));

    CanonicalOracle oracle(u);
    Rng rng(880011);
    auto out = online_to_batch(cls, dist, u, oracle, 6000, rng);
    CHECK(out.run.family_size == 6001);
    CHECK(out.opt_risk == doctest::Approx(0.2).epsilon(1e-12));
    CHECK(int(out.prefix_predictors.size()) == 6000);
    // 2 opt + eps at eps = 0.2
    CHECK(out.mixture_risk <= 0.6);
}

TEST_CASE("online to batch on a realizable scenario") {
    Rng rng(5225);
    Scenario s = thresholds_scenario(4, 4, 0.0, 1, rng);
    CanonicalOracle oracle(s.u);
    auto out = online_to_batch(s.cls, s.dist, s.u, oracle, 15, rng);
    CHECK(out.opt_risk == 0.0);
    CHECK(out.mixture_risk >= 0.0);
    CHECK(out.mixture_risk <= 1.0);
    CHECK(int(out.run.round_votes.size()) == 15);
    CHECK_THROWS_AS(online_to_batch(s.cls, s.dist, s.u, oracle, 0, rng), Error);
}
