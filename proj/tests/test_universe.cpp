#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "upset/universe.hpp"

using namespace upset;

namespace {

// Definitional check, independent of the memoized recursion in the library:
// a full mistake tree of depth k exists iff some instance splits the version
// space both ways and both halves admit a tree of depth k-1.
bool admits_tree(const HypothesisClass& cls, const Bits& version, int depth) {
    if (version.none()) return false;
    if (depth == 0) return true;
    for (int x = 0; x < cls.instances(); ++x) {
        Bits pos = cls.restrict(version, x, +1);
        Bits neg = cls.restrict(version, x, -1);
        if (pos.none() || neg.none()) continue;
        if (admits_tree(cls, pos, depth - 1) && admits_tree(cls, neg, depth - 1)) return true;
    }
    return false;
}

int lit_by_trees(const HypothesisClass& cls) {
    int k = 0;
    while (admits_tree(cls, cls.full_version(), k + 1)) ++k;
    return k;
}

HypothesisClass full_cube(int k) {
    std::vector<uint64_t> masks(size_t(1) << k);
    for (size_t m = 0; m < masks.size(); ++m) masks[m] = m;
    return HypothesisClass(k, std::move(masks));
}

}  // namespace

TEST_CASE("threshold class dimensions match closed forms") {
    for (int n : {2, 4, 8, 16}) {
        HypothesisClass cls = make_threshold_class(n);
        CHECK(cls.size() == n);
        DimensionReport rep = dimension_report(cls);
        CHECK(rep.vc == 1);
        CHECK(rep.threshold == n);
        CHECK(rep.littlestone == int(std::floor(std::log2(double(n)))));
    }
}

TEST_CASE("full cube dimensions") {
    for (int k : {1, 2, 3}) {
        HypothesisClass cls = full_cube(k);
        DimensionReport rep = dimension_report(cls);
        CHECK(rep.vc == k);
        CHECK(rep.littlestone == k);
    }
}

TEST_CASE("littlestone recursion agrees with explicit tree search") {
    Rng rng(404);
    for (int trial = 0; trial < 60; ++trial) {
        int instances = 2 + int(rng.next_int(3));  // 2..4
        int want = 2 + int(rng.next_int(7));
        std::vector<uint64_t> masks;
        for (int i = 0; i < want; ++i) masks.push_back(rng.next_u64() & ((1u << instances) - 1));
        std::sort(masks.begin(), masks.end());
        masks.erase(std::unique(masks.begin(), masks.end()), masks.end());
        HypothesisClass cls(instances, masks);
        CHECK(littlestone_dimension(cls) == lit_by_trees(cls));
    }
}

TEST_CASE("dimension relations hold on random classes") {
    Rng rng(777);
    for (int trial = 0; trial < 40; ++trial) {
        int instances = 2 + int(rng.next_int(5));
        int want = 2 + int(rng.next_int(12));
        std::vector<uint64_t> masks;
        for (int i = 0; i < want; ++i)
            masks.push_back(rng.next_u64() & ((uint64_t(1) << instances) - 1));
        std::sort(masks.begin(), masks.end());
        masks.erase(std::unique(masks.begin(), masks.end()), masks.end());
        HypothesisClass cls(instances, masks);
        DimensionReport rep = dimension_report(cls);
        CHECK(rep.vc <= rep.littlestone);
        CHECK(rep.dual_vc < (1 << (rep.vc + 1)));
        if (rep.littlestone >= 1)
            CHECK(int(std::floor(std::log2(double(rep.littlestone)))) <= rep.threshold);
    }
}

TEST_CASE("dual vc via transpose") {
    HypothesisClass cls = make_threshold_class(8);
    CHECK(dual_vc_dimension(cls) == vc_dimension(transpose_class(cls)));
}

TEST_CASE("restrict and version spaces") {
    HypothesisClass cls = make_threshold_class(4);
    Bits all = cls.full_version();
    Bits pos = cls.restrict(all, 2, +1);  // rows with x_3 positive: h_3, h_4
    CHECK(pos.count() == 2);
    CHECK(pos.test(2));
    CHECK(pos.test(3));
    Bits neg = cls.restrict(all, 2, -1);
    CHECK((pos & neg).none());
    CHECK(pos.count() + neg.count() == cls.size());
}

TEST_CASE("duplicate rows are rejected") {
    CHECK_THROWS_AS(HypothesisClass(2, {1, 1}), ScaleCapError);
    CHECK_THROWS_AS(HypothesisClass(65, {1}), ScaleCapError);
}

TEST_CASE("distribution sampling is reproducible and respects atoms") {
    FiniteDistribution dist({{{0, +1}, 0.25}, {{1, -1}, 0.75}}, 2);
    Rng a(9), b(9);
    for (int i = 0; i < 50; ++i) {
        LabeledExample ea = dist.sample(a);
        LabeledExample eb = dist.sample(b);
        CHECK(ea == eb);
        CHECK((ea == LabeledExample{0, +1} || ea == LabeledExample{1, -1}));
    }
    CHECK_THROWS_AS(FiniteDistribution({{{0, +1}, 0.5}}, 1), ScaleCapError);
    CHECK_THROWS_AS(FiniteDistribution({{{0, +1}, 0.5}, {{0, +1}, 0.5}}, 1), ScaleCapError);
}
