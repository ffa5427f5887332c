#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "upset/io.hpp"
#include "upset/scenario.hpp"

using namespace upset;

namespace {

LearnerFactory soa_factory(const HypothesisClass& cls) {
    auto cache = make_lit_cache(cls);
    return [&cls, cache]() { return std::make_unique<SoaLearner>(cls, cache); };
}

bool same_pattern_set(const std::vector<DiscretizedPoint>& points, const std::vector<Bits>& brute) {
    std::unordered_map<Bits, int, BitsHash> got, want;
    for (const auto& p : points) ++got[p.pattern];
    for (const auto& b : brute) ++want[b];
    return got == want;
}

}  // namespace

TEST_CASE("default parameter formulas") {
    CHECK(default_boost_rounds(100) == 516);
    CHECK(default_boost_rounds(1) == 1);
    CHECK(default_boost_alpha(100, 516) ==
          doctest::Approx(0.5 * std::log(1.0 + std::sqrt(2.0 * std::log(100.0) / 516))).epsilon(1e-12));
    CHECK(default_sparsify_size(0) == 356);
    CHECK(default_sparsify_size(2) == int(std::ceil(324.0 * (2 + std::log(3.0)))));
}

TEST_CASE("pool enumerates subsets, dedups, and skips unrealizable ones") {
    HypothesisClass cls = make_threshold_class(4);
    PerturbationSet u = PerturbationSet::identity(4);
    CanonicalOracle oracle(u);
    // (x_1,+1) and (x_4,-1) are each realizable; the pair too; (x_1,-1) never.
    std::vector<LabeledExample> sample{{0, +1}, {3, -1}, {0, -1}};
    HypothesisPool pool = build_pool(sample, 2, soa_factory(cls), oracle);
    CHECK(pool.enumerated == 6);  // 3 singletons + 3 pairs
    CHECK(pool.skipped >= 1);     // {(x_1,-1)} has no consistent threshold
    for (size_t i = 0; i < pool.members.size(); ++i) {
        CHECK(pool.find(pool.members[i]) == int(i));
        std::vector<LabeledExample> gen;
        for (int idx : pool.generators[i]) gen.push_back(sample[idx]);
        CHECK(empirical_robust_loss(pool.members[i], gen, u) == 0);
    }
    CHECK_THROWS_AS(build_pool(sample, 2, soa_factory(cls), oracle, 3), ScaleCapError);
}

TEST_CASE("single-member pool discretizes with at most two queries per example") {
    HypothesisClass cls(3, {0b111});
    PerturbationSet u(3, {{0, 1, 2}, {0, 1, 2}, {2}});
    CanonicalOracle oracle(u);
    HypothesisPool pool;
    pool.members.push_back(Predictor::class_member(cls, 0));
    pool.generators.push_back({0});
    pool.sample_size = 2;
    pool.subset_size = 1;
    std::vector<LabeledExample> sample{{0, +1}, {1, -1}, {2, +1}};
    DiscretizedSet dset = discretize(sample, pool, oracle, u);
    CHECK(dset.max_queries_per_example <= 2);
    CHECK(dset.points.size() <= 2);  // one pool member, two possible patterns
    CHECK(same_pattern_set(dset.points, brute_pattern_set(sample, pool, u)));
}

TEST_CASE("discretizer reproduces the brute-force pattern enumeration") {
    Rng rng(1212);
    for (int trial = 0; trial < 30; ++trial) {
        Scenario s = random_scenario(4 + int(rng.next_int(3)), 4 + int(rng.next_int(10)), 3, 0.3,
                                     true, rng);
        auto sample = realizable_sample(s, 8, rng);
        CanonicalOracle oracle(s.u);
        HypothesisPool pool = build_pool(sample, 2, soa_factory(s.cls), oracle);
        DiscretizedSet dset = discretize(sample, pool, oracle, s.u);
        CHECK(same_pattern_set(dset.points, brute_pattern_set(sample, pool, s.u)));
        long long max_u = 0;
        for (const auto& ex : sample) max_u = std::max(max_u, (long long)s.u.at(ex.x).size());
        CHECK(dset.max_queries_per_example <= max_u + 1);
        // Every representative pattern is realized at its recorded point.
        for (const auto& p : dset.points)
            CHECK(pool_pattern(pool, p.point.x, p.point.y) == p.pattern);
    }
}

TEST_CASE("boost rounds stay under the error bar and margins clear 5/9") {
    Rng rng(77);
    for (int trial = 0; trial < 10; ++trial) {
        Scenario s = thresholds_scenario(8, 4, 0, 1, rng);
        auto sample = realizable_sample(s, 10, rng);
        CanonicalOracle oracle(s.u);
        HypothesisPool pool = build_pool(sample, 2, soa_factory(s.cls), oracle);
        DiscretizedSet dset = discretize(sample, pool, oracle, s.u);
        BoostRun run = alpha_boost(dset, sample, 2, soa_factory(s.cls), oracle, {}, rng);
        CHECK(int(run.rounds.size()) == default_boost_rounds(int(dset.points.size())));
        for (const auto& round : run.rounds) CHECK(round.weighted_error <= 1.0 / 3 + 1e-12);
        for (double m : run.margins) CHECK(m >= 5.0 / 9 - 1e-12);
        SparsifyResult sp = sparsify(run, sample, oracle, 9, 200, rng);
        CHECK(empirical_robust_loss(sp.majority, sample, s.u) == 0);
        CHECK(int(sp.chosen_rounds.size()) == 9);
    }
}

TEST_CASE("full pipeline emits a compression-sized certificate") {
    Rng rng(99);
    Scenario s = thresholds_scenario(8, 4, 0, 1, rng);
    auto sample = realizable_sample(s, 12, rng);
    CanonicalOracle oracle(s.u);
    RluaConfig config;
    config.n = 2;
    RluaResult res = rlua_learn(sample, soa_factory(s.cls), oracle, s.u, config, rng);
    CHECK(empirical_robust_loss(res.predictor, sample, s.u) == 0);
    CHECK(res.compression_size == 2 * res.N);
    CHECK(int(res.compression.size()) == res.N);
    for (const auto& entry : res.compression) {
        CHECK(int(entry.size()) == 2);
        for (int idx : entry) {
            CHECK(idx >= 0);
            CHECK(idx < int(sample.size()));
        }
    }
    CHECK(res.dset_size >= 1);
    CHECK(res.queries > 0);
}

TEST_CASE("confidence boosting ends robustly correct on the whole sample") {
    Rng rng(1001);
    Scenario s = thresholds_scenario(8, 4, 0, 1, rng);
    auto sample = realizable_sample(s, 14, rng);
    CanonicalOracle oracle(s.u);
    ConfidenceConfig config;
    config.rounds = 24;  // keep the unit test quick
    config.weak_sample = 6;
    config.weak.n = 2;
    ConfidenceRun run = boost_confidence(sample, soa_factory(s.cls), oracle, s.u, config, 0.1, rng);
    CHECK(empirical_robust_loss(run.majority, sample, s.u) == 0);
    CHECK(int(run.round_predictors.size()) == 24);
    for (double e : run.round_errors) CHECK(e <= 1.0 / 3 + 1e-12);
}

TEST_CASE("agnostic reduction matches the brute-force optimum on poisoned samples") {
    Rng rng(313);
    for (int trial = 0; trial < 6; ++trial) {
        Scenario s = thresholds_scenario(8, 4, 0, 1, rng);
        PoisonedSample ps = poison_sample(s, 5, 1 + int(rng.next_int(2)), rng);
        CHECK(int(ps.sample.size()) <= 12);
        CHECK(opt_empirical_robust_count(s.cls, ps.sample, s.u) == ps.expected_opt);
        CanonicalOracle oracle(s.u);
        ConfidenceConfig config;
        config.rounds = 16;
        config.weak_sample = 5;
        config.weak.n = 2;
        AgnosticResult res =
            agnostic_reduce(ps.sample, soa_factory(s.cls), oracle, s.u, config, 0.2, rng);
        int errors = 0;
        for (const auto& ex : ps.sample) errors += robust_loss(res.predictor, ex, s.u);
        CHECK(errors == ps.expected_opt);
        CHECK(int(res.kept_indices.size()) == int(ps.sample.size()) - ps.expected_opt);
    }
}

TEST_CASE("agnostic reduction degenerates gracefully") {
    HypothesisClass cls(2, {0b11});  // always +1
    PerturbationSet u = PerturbationSet::identity(2);
    CanonicalOracle oracle(u);
    ConfidenceConfig config;
    config.weak.n = 1;
    Rng rng(5);
    AgnosticResult res = agnostic_reduce({{0, -1}}, soa_factory(cls), oracle, u, config, 0.2, rng);
    CHECK(res.degenerate);
    CHECK(res.predictor(0) == +1);
    CHECK(res.kept_indices.empty());
    std::vector<LabeledExample> big(17, LabeledExample{0, +1});
    CHECK_THROWS_AS(agnostic_reduce(big, soa_factory(cls), oracle, u, config, 0.2, rng),
                    ScaleCapError);
}
