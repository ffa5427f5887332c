#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "upset/compress.hpp"

using namespace upset;

namespace {

HypothesisClass random_class(int instances, int want, Rng& rng) {
    std::vector<uint64_t> masks;
    for (int i = 0; i < want; ++i)
        masks.push_back(rng.next_u64() & ((uint64_t(1) << instances) - 1));
    std::sort(masks.begin(), masks.end());
    masks.erase(std::unique(masks.begin(), masks.end()), masks.end());
    return HypothesisClass(instances, masks);
}

PerturbationSet random_u(int instances, double density, Rng& rng) {
    std::vector<std::vector<int>> sets(instances);
    for (int x = 0; x < instances; ++x) {
        sets[x].push_back(x);
        for (int z = 0; z < instances; ++z)
            if (z != x && rng.next_unit() < density) sets[x].push_back(z);
    }
    return PerturbationSet(instances, std::move(sets));
}

// Sample points where the target row is robustly correct, so the sequence is
// robustly realizable by construction.
std::vector<LabeledExample> robust_sample(const HypothesisClass& cls, int row,
                                          const PerturbationSet& u, int m, Rng& rng) {
    Predictor h = Predictor::class_member(cls, row);
    std::vector<int> safe;
    for (int x = 0; x < cls.instances(); ++x)
        if (robust_loss(h, {x, cls.label(row, x)}, u) == 0) safe.push_back(x);
    std::vector<LabeledExample> sample;
    if (safe.empty()) return sample;
    for (int i = 0; i < m; ++i) {
        int x = safe[size_t(rng.next_int(int(safe.size())))];
        sample.push_back({x, cls.label(row, x)});
    }
    return sample;
}

}  // namespace

TEST_CASE("cycle_robust outputs a robustly correct predictor with a small kernel") {
    Rng rng(515);
    int ran = 0;
    while (ran < 60) {
        HypothesisClass cls = random_class(3 + int(rng.next_int(4)), 3 + int(rng.next_int(14)), rng);
        PerturbationSet u = random_u(cls.instances(), 0.3, rng);
        int row = int(rng.next_int(cls.size()));
        auto sample = robust_sample(cls, row, u, 12, rng);
        if (sample.empty()) continue;
        ++ran;

        auto cache = make_lit_cache(cls);
        int lit = littlestone_dimension(cls);
        CanonicalOracle oracle(u);
        QueryLog log;
        LoggingOracle logging(oracle, log);
        SoaLearner learner(cls, cache);
        CycleRobustResult res = cycle_robust(sample, learner, logging);

        CHECK(empirical_robust_loss(res.predictor, sample, u) == 0);
        CHECK(int(res.record.kappa_indices().size()) <= lit);
        CHECK(res.record.size() <= lit);
        CHECK(res.record.queries <= (long long)(sample.size()) * (lit + 1));
        CHECK(res.record.queries == log.total());
        CHECK(res.record.passes <= lit + 2);
    }
}

TEST_CASE("compression kernel is stable under supersets") {
    Rng rng(616);
    int ran = 0;
    while (ran < 25) {
        HypothesisClass cls = random_class(4, 3 + int(rng.next_int(10)), rng);
        PerturbationSet u = random_u(4, 0.25, rng);
        int row = int(rng.next_int(cls.size()));
        auto sample = robust_sample(cls, row, u, 10, rng);
        if (sample.empty()) continue;
        ++ran;

        auto cache = make_lit_cache(cls);
        CanonicalOracle oracle(u);
        LearnerFactory factory = [&]() { return std::make_unique<SoaLearner>(cls, cache); };
        auto learner = factory();
        CycleRobustResult res = cycle_robust(sample, *learner, oracle);
        StabilityReport rep =
            stability_check(sample, res, factory, oracle, learner->mistake_bound() + 2, 8, rng);
        CHECK(rep.passed);
        CHECK(rep.draws_checked == 8);
    }
}

TEST_CASE("non-realizable samples raise with the partial record attached") {
    HypothesisClass cls = make_threshold_class(4);
    PerturbationSet u = PerturbationSet::identity(4);
    CanonicalOracle oracle(u);
    SoaLearner learner(cls, make_lit_cache(cls));
    // No threshold is negative at x_1 and positive at x_4.
    std::vector<LabeledExample> bad{{0, -1}, {3, +1}};
    try {
        cycle_robust(bad, learner, oracle);
        FAIL("expected NonRealizableError");
    } catch (const CycleRobustError& e) {
        CHECK(e.partial_record.size() >= 1);
    }
}

TEST_CASE("generalization bound formulas match hand-computed values") {
    CHECK(stable_compression_bound(102, 0, std::exp(-1.0)) ==
          doctest::Approx(0.0196078431).epsilon(1e-9));
    CHECK(stable_compression_bound(1000, 3, 0.05) == doctest::Approx(0.0143956043).epsilon(1e-9));
    CHECK(robust_compression_bound(500, 5, 0.05) == doctest::Approx(0.0688258036).epsilon(1e-9));
    CHECK_THROWS_AS(stable_compression_bound(6, 3, 0.1), ScaleCapError);
    CHECK_THROWS_AS(robust_compression_bound(5, 5, 0.1), ScaleCapError);
}

TEST_CASE("kappa preserves first-update order without duplicates") {
    CompressionRecord rec;
    rec.updates = {{{1, +1}, {5, +1}, 3, 1},
                   {{2, -1}, {7, -1}, 6, 1},
                   {{1, -1}, {5, +1}, 3, 2}};
    CHECK(rec.kappa_indices() == std::vector<int>{3, 6});
}
