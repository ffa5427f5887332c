#include "upset/acceptance.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>
#include <unordered_map>
#include <unordered_set>

#include "upset/compress.hpp"
#include "upset/games.hpp"
#include "upset/rlua.hpp"
#include "upset/scenario.hpp"
#include "upset/universe.hpp"
#include "upset/weighted_majority.hpp"

namespace upset {

void for_each_trial(int trials, int jobs, const std::function<void(int)>& body) {
    if (jobs <= 1 || trials <= 1) {
        for (int i = 0; i < trials; ++i) body(i);
        return;
    }
    std::atomic<int> next{0};
    std::mutex mu;
    std::exception_ptr first;
    auto worker = [&] {
        while (true) {
            int i = next.fetch_add(1);
            if (i >= trials) return;
            try {
                body(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(mu);
                if (!first) first = std::current_exception();
                next.store(trials);
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    int workers = std::min(jobs, trials);
    pool.reserve(size_t(workers));
    for (int t = 0; t < workers; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    if (first) std::rethrow_exception(first);
}

namespace {

struct Stopwatch {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
};

double freq_sigma(double p, int trials) { return std::sqrt(p * (1 - p) / double(trials)); }

std::string fmt(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

void embed_query_log(Json& row, const QueryLog& log, const PerturbationSet& u) {
    row["query_log"] = query_log_jsonl(log);
    row["perturbation"] = perturbation_to_json(u);
}

// ---------------------------------------------------------------------------
// dims: thresholds dimensions plus an exhaustive cross-check of the mistake
// bound recursion against an explicit tree search on every class with at most
// four instances.

// Version spaces as plain row bitmasks; restriction re-derived from the raw
// row masks so this path shares nothing with the library recursion.
uint32_t tree_restrict(const std::vector<uint64_t>& rows, uint32_t version, int x, bool positive) {
    uint32_t out = 0;
    for (size_t r = 0; r < rows.size(); ++r) {
        if (!((version >> r) & 1u)) continue;
        if (bool((rows[r] >> x) & 1ull) == positive) out |= (1u << r);
    }
    return out;
}

// Depth-first search for a complete depth-d mistake tree: pick a node
// instance, branch on both labels, and require every leaf to keep at least
// one consistent row.
bool tree_exists(const std::vector<uint64_t>& rows, int instances, uint32_t version, int depth,
                 std::unordered_map<uint32_t, bool>& memo) {
    if (depth == 0) return version != 0;
    uint32_t key = (version << 3) | uint32_t(depth);
    auto it = memo.find(key);
    if (it != memo.end()) return it->second;
    bool found = false;
    for (int x = 0; x < instances && !found; ++x) {
        uint32_t pos = tree_restrict(rows, version, x, true);
        uint32_t neg = version & ~pos;
        found = tree_exists(rows, instances, pos, depth - 1, memo) &&
                tree_exists(rows, instances, neg, depth - 1, memo);
    }
    memo.emplace(key, found);
    return found;
}

int lit_by_tree_search(int instances, const std::vector<uint64_t>& rows) {
    uint32_t full = uint32_t((1ull << rows.size()) - 1);
    std::unordered_map<uint32_t, bool> memo;
    int depth = 0;
    while (tree_exists(rows, instances, full, depth + 1, memo)) ++depth;
    return depth;
}

CriterionResult run_dims(const AcceptanceOptions&) {
    Stopwatch watch;
    CriterionResult res;
    res.name = "dims";
    bool ok = true;

    for (int n : {2, 4, 8, 16}) {
        HypothesisClass cls = make_threshold_class(n);
        DimensionReport rep = dimension_report(cls);
        int expect_lit = 0;
        while ((1 << (expect_lit + 1)) <= n) ++expect_lit;
        bool good = rep.vc == 1 && rep.threshold == n && rep.littlestone == expect_lit;
        ok = ok && good;
        res.rows.push_back({{"kind", "thresholds"},
                            {"n", n},
                            {"vc", rep.vc},
                            {"dual_vc", rep.dual_vc},
                            {"littlestone", rep.littlestone},
                            {"threshold", rep.threshold},
                            {"expected_littlestone", expect_lit},
                            {"ok", good}});
    }

    long long total_classes = 0;
    long long total_mismatches = 0;
    for (int k = 1; k <= 4; ++k) {
        int nrows = 1 << k;
        long long subsets = (1ll << nrows) - 1;
        long long mismatches = 0;
        std::vector<uint64_t> masks;
        for (long long s = 1; s <= subsets; ++s) {
            masks.clear();
            for (int r = 0; r < nrows; ++r)
                if ((s >> r) & 1) masks.push_back(uint64_t(r));
            HypothesisClass cls(k, masks);
            if (littlestone_dimension(cls) != lit_by_tree_search(k, masks)) ++mismatches;
        }
        total_classes += subsets;
        total_mismatches += mismatches;
        res.rows.push_back({{"kind", "exhaustive-lit"},
                            {"instances", k},
                            {"classes", subsets},
                            {"mismatches", mismatches},
                            {"ok", mismatches == 0}});
    }
    ok = ok && total_mismatches == 0;

    double secs = watch.seconds();
    ok = ok && secs < 10.0;
    res.passed = ok;
    res.detail = "thresholds n=2,4,8,16 exact; recursion == tree search on " +
                 std::to_string(total_classes) + " classes, " + std::to_string(total_mismatches) +
                 " mismatches; " + fmt(secs) + "s (budget 10s)";
    return res;
}

// ---------------------------------------------------------------------------
// cyclerobust: zero empirical robust loss, compression size and query budget,
// and stability on 500 realizable trials.

Scenario cyclerobust_scenario(int i, Rng& rng) {
    switch (i % 5) {
        case 0: return thresholds_scenario(4, 4, 0.0, 1, rng);
        case 1: return thresholds_scenario(8, 5, 0.0, 1, rng);
        case 2: return thresholds_scenario(16, 6, 0.0, 2, rng);
        case 3: return random_scenario(5, 10, 4, 0.3, true, rng);
        default: return cube_scenario(3, 5, rng);
    }
}

CriterionResult run_cyclerobust(const AcceptanceOptions& opts) {
    Stopwatch watch;
    const int trials = 500;
    std::vector<Json> rows(trials);
    std::vector<char> oks(trials, 0);

    for_each_trial(trials, opts.jobs, [&](int i) {
        Rng rng(derive_seed(opts.seed, "accept/cyclerobust", uint64_t(i)));
        Scenario s = cyclerobust_scenario(i, rng);
        int m = 20 + i % 41;
        auto sample = realizable_sample(s, m, rng);
        auto cache = make_lit_cache(s.cls);
        int lit = cache->lit(s.cls.full_version());
        LearnerFactory factory = [&] { return std::make_unique<SoaLearner>(s.cls, cache); };

        CanonicalOracle base(s.u);
        VerifyingOracle oracle(base, s.u);
        bool capture = i % 100 == 0;
        QueryLog log(true);
        LoggingOracle logging(base, log);
        VerifyingOracle capturing(logging, s.u);

        auto learner = factory();
        CycleRobustResult out =
            cycle_robust(sample, *learner, capture ? static_cast<AttackOracle&>(capturing) : oracle);
        double loss = empirical_robust_loss(out.predictor, sample, s.u);
        StabilityReport st = stability_check(sample, out, factory, oracle, lit + 2, 6, rng);

        bool good = loss == 0.0 && out.record.size() <= lit &&
                    out.record.queries <= (long long)m * (lit + 1) && st.passed;
        Json row = {{"trial", i},
                    {"kind", s.kind},
                    {"m", m},
                    {"lit", lit},
                    {"size", out.record.size()},
                    {"passes", out.record.passes},
                    {"queries", out.record.queries},
                    {"loss", loss},
                    {"stability_draws", st.draws_checked},
                    {"ok", good}};
        if (capture) embed_query_log(row, log, s.u);
        rows[i] = std::move(row);
        oks[i] = good ? 1 : 0;
    });

    int bad = 0;
    for (char c : oks)
        if (!c) ++bad;
    double secs = watch.seconds();
    CriterionResult res;
    res.name = "cyclerobust";
    res.rows = std::move(rows);
    res.passed = bad == 0 && secs < 60.0;
    res.detail = std::to_string(trials - bad) + "/" + std::to_string(trials) +
                 " trials with zero loss, size <= lit, queries <= m(lit+1), stable; " + fmt(secs) +
                 "s (budget 60s)";
    return res;
}

// ---------------------------------------------------------------------------
// cyclerobust-generalization: exact robust risk of the compressed output
// against the stable-compression bound at m = 400, delta = 0.1.

CriterionResult run_generalization(const AcceptanceOptions& opts) {
    Stopwatch watch;
    const int trials = 2000;
    const int m = 400;
    const double delta = 0.1;
    std::vector<Json> rows(trials);
    std::vector<char> violations(trials, 0);
    std::vector<char> errors(trials, 0);

    for_each_trial(trials, opts.jobs, [&](int i) {
        Rng rng(derive_seed(opts.seed, "accept/cyclerobust-generalization", uint64_t(i)));
        Scenario s = i % 2 == 0 ? thresholds_scenario(8, 6, 0.0, 1, rng)
                                : random_scenario(5, 8, 4, 0.3, true, rng);
        auto cache = make_lit_cache(s.cls);
        int lit = cache->lit(s.cls.full_version());
        auto sample = sample_iid(s.dist, m, rng);
        SoaLearner learner(s.cls, cache);
        CanonicalOracle base(s.u);
        VerifyingOracle oracle(base, s.u);
        CycleRobustResult out = cycle_robust(sample, learner, oracle);

        double risk = robust_risk(out.predictor, s.dist, s.u);
        double bound = stable_compression_bound(m, lit, delta);
        bool viol = risk > bound;
        bool bad = lit > 3 || out.record.size() > lit;
        rows[i] = {{"trial", i},
                   {"kind", s.kind},
                   {"lit", lit},
                   {"size", out.record.size()},
                   {"risk", risk},
                   {"bound", bound},
                   {"violation", viol}};
        violations[i] = viol ? 1 : 0;
        errors[i] = bad ? 1 : 0;
    });

    int viol = 0, bad = 0;
    for (char c : violations) viol += c;
    for (char c : errors) bad += c;
    double freq = double(viol) / trials;
    double cap = delta + 3 * freq_sigma(delta, trials);
    double secs = watch.seconds();
    CriterionResult res;
    res.name = "cyclerobust-generalization";
    res.rows = std::move(rows);
    res.passed = bad == 0 && freq <= cap && secs < 600.0;
    res.detail = "violation frequency " + fmt(freq) + " <= " + fmt(cap) + " (delta " + fmt(delta) +
                 " + 3 sigma) over " + std::to_string(trials) + " trials at m=400; " + fmt(secs) +
                 "s (budget 600s)";
    return res;
}

// ---------------------------------------------------------------------------
// rlua: discretizer set equality, boost margins, sparsified majority loss,
// and the compression-based risk bound at desk scale.

Scenario rlua_scenario(int i, Rng& rng) {
    switch (i % 3) {
        case 0: return thresholds_scenario(4, 4, 0.0, 1, rng);
        case 1: return random_scenario(5, 8, 4, 0.35, true, rng);
        default: return cube_scenario(2, 4, rng);
    }
}

CriterionResult run_rlua(const AcceptanceOptions& opts) {
    Stopwatch watch;
    const int scenarios = 50;
    const int trials = 1000;
    const double delta = 0.1;
    std::vector<Json> part_a(scenarios);
    std::vector<char> a_ok(scenarios, 0);

    for_each_trial(scenarios, opts.jobs, [&](int i) {
        Rng rng(derive_seed(opts.seed, "accept/rlua-discretize", uint64_t(i)));
        Scenario s = rlua_scenario(i, rng);
        int m = 8 + i % 9;
        auto sample = realizable_sample(s, m, rng);
        auto cache = make_lit_cache(s.cls);
        LearnerFactory factory = [&] { return std::make_unique<SoaLearner>(s.cls, cache); };
        CanonicalOracle base(s.u);
        VerifyingOracle oracle(base, s.u);

        HypothesisPool pool = build_pool(sample, std::min(2, m), factory, oracle);

        bool capture = i % 10 == 0;
        QueryLog log(true);
        LoggingOracle logging(base, log);
        VerifyingOracle capturing(logging, s.u);
        DiscretizedSet dset =
            discretize(sample, pool, capture ? static_cast<AttackOracle&>(capturing) : oracle, s.u);
        std::vector<Bits> brute = brute_pattern_set(sample, pool, s.u);

        std::unordered_set<Bits, BitsHash> got, want;
        for (const auto& p : dset.points) got.insert(p.pattern);
        for (const auto& b : brute) want.insert(b);
        bool equal = got == want;

        BoostRun boost = alpha_boost(dset, sample, 2, factory, oracle, BoostConfig{}, rng);
        double min_margin = 1.0;
        for (double g : boost.margins) min_margin = std::min(min_margin, g);
        bool margins_ok = min_margin >= 5.0 / 9.0 - 1e-12;

        SparsifyResult sp = sparsify(boost, sample, oracle, 9, 200, rng);
        double sparse_loss = empirical_robust_loss(sp.majority, sample, s.u);

        bool good = equal && margins_ok && sparse_loss == 0.0;
        Json row = {{"part", "discretize"},
                    {"scenario", i},
                    {"kind", s.kind},
                    {"m", m},
                    {"pool", pool.members.size()},
                    {"dset", dset.points.size()},
                    {"brute", brute.size()},
                    {"equal", equal},
                    {"min_margin", min_margin},
                    {"sparse_loss", sparse_loss},
                    {"ok", good}};
        if (capture) embed_query_log(row, log, s.u);
        part_a[i] = std::move(row);
        a_ok[i] = good ? 1 : 0;
    });

    std::vector<Json> part_b(trials);
    std::vector<char> b_ok(trials, 0);
    std::vector<char> b_viol(trials, 0);

    for_each_trial(trials, opts.jobs, [&](int i) {
        Rng rng(derive_seed(opts.seed, "accept/rlua-trials", uint64_t(i)));
        Scenario s = i % 2 == 0 ? thresholds_scenario(4, 4, 0.0, 1, rng)
                                : random_scenario(4, 6, 3, 0.3, true, rng);
        int m = 24 + i % 17;
        auto sample = realizable_sample(s, m, rng);
        auto cache = make_lit_cache(s.cls);
        LearnerFactory factory = [&] { return std::make_unique<SoaLearner>(s.cls, cache); };
        CanonicalOracle base(s.u);
        VerifyingOracle oracle(base, s.u);

        RluaConfig config;
        config.n = 1 + i % 2;
        config.N = 9;  // keeps the compression size n*N below m at this scale
        RluaResult out = rlua_learn(sample, factory, oracle, s.u, config, rng);

        double loss = empirical_robust_loss(out.predictor, sample, s.u);
        double risk = robust_risk(out.predictor, s.dist, s.u);
        int k = config.n * out.N;
        double bound = robust_compression_bound(m, k, delta);
        bool viol = risk > bound;
        bool good = loss == 0.0 && out.N == 9 && out.compression_size == k &&
                    int(out.compression.size()) == out.N && out.pool_enumerated <= 10000;
        part_b[i] = {{"part", "bound"},
                     {"trial", i},
                     {"kind", s.kind},
                     {"m", m},
                     {"n", config.n},
                     {"N", out.N},
                     {"k", k},
                     {"loss", loss},
                     {"risk", risk},
                     {"bound", bound},
                     {"violation", viol},
                     {"ok", good}};
        b_ok[i] = good ? 1 : 0;
        b_viol[i] = viol ? 1 : 0;
    });

    int bad = 0, viol = 0;
    for (char c : a_ok)
        if (!c) ++bad;
    for (char c : b_ok)
        if (!c) ++bad;
    for (char c : b_viol) viol += c;
    double freq = double(viol) / trials;
    double cap = delta + 3 * freq_sigma(delta, trials);
    double secs = watch.seconds();

    CriterionResult res;
    res.name = "rlua";
    res.rows = std::move(part_a);
    res.rows.insert(res.rows.end(), part_b.begin(), part_b.end());
    res.passed = bad == 0 && freq <= cap && secs < 1800.0;
    res.detail = "pattern sets equal on " + std::to_string(scenarios) +
                 " scenarios, margins >= 5/9, sparse majorities clean; bound violation frequency " +
                 fmt(freq) + " <= " + fmt(cap) + " over " + std::to_string(trials) + " trials; " +
                 fmt(secs) + "s (budget 1800s)";
    return res;
}

// ---------------------------------------------------------------------------
// agnostic: output empirical robust loss equals the brute-forced optimum on
// every trial (m <= 12).

CriterionResult run_agnostic(const AcceptanceOptions& opts) {
    Stopwatch watch;
    const int trials = 200;
    std::vector<Json> rows(trials);
    std::vector<char> oks(trials, 0);

    for_each_trial(trials, opts.jobs, [&](int i) {
        Rng rng(derive_seed(opts.seed, "accept/agnostic", uint64_t(i)));
        Scenario s = thresholds_scenario(4 + 2 * (i % 2), 4, 0.0, 1, rng);
        int pairs = i % 3;
        int clean = 4 + i % 3;
        PoisonedSample ps = poison_sample(s, clean, pairs, rng);
        int m = int(ps.sample.size());

        auto cache = make_lit_cache(s.cls);
        LearnerFactory factory = [&] { return std::make_unique<SoaLearner>(s.cls, cache); };
        CanonicalOracle base(s.u);
        VerifyingOracle oracle(base, s.u);

        // The weak learner needs pairs in its pool: with subset size 1 the
        // compressed predictors cannot cover the 6-threshold scenarios and the
        // confidence boost exhausts its retries.
        ConfidenceConfig cfg;
        cfg.weak_sample = 6;
        cfg.weak.n = 2;
        cfg.weak.N = 9;
        AgnosticResult out = agnostic_reduce(ps.sample, factory, oracle, s.u, cfg, 0.2, rng);

        int loss = 0;
        for (const auto& ex : ps.sample) loss += robust_loss(out.predictor, ex, s.u);
        int brute = opt_empirical_robust_count(s.cls, ps.sample, s.u);

        bool good = loss == brute && brute == ps.expected_opt && !out.degenerate &&
                    int(out.kept_indices.size()) == m - pairs;
        rows[i] = {{"trial", i},
                   {"m", m},
                   {"pairs", pairs},
                   {"loss", loss},
                   {"brute_opt", brute},
                   {"expected_opt", ps.expected_opt},
                   {"kept", out.kept_indices.size()},
                   {"ok", good}};
        oks[i] = good ? 1 : 0;
    });

    int bad = 0;
    for (char c : oks)
        if (!c) ++bad;
    double secs = watch.seconds();
    CriterionResult res;
    res.name = "agnostic";
    res.rows = std::move(rows);
    res.passed = bad == 0 && secs < 600.0;
    res.detail = std::to_string(trials - bad) + "/" + std::to_string(trials) +
                 " trials where output loss == brute-forced optimum; " + fmt(secs) +
                 "s (budget 600s)";
    return res;
}

// ---------------------------------------------------------------------------
// wm-regret: finite weighted majority against its regret bound on 500
// streams, and the expert variant against the displayed/raw bounds on 100
// streams with a brute-forced expert optimum.

CriterionResult run_wm_regret(const AcceptanceOptions& opts) {
    Stopwatch watch;
    const int finite_trials = 500;
    std::vector<Json> part_a(finite_trials);
    std::vector<char> a_ok(finite_trials, 0);
    const double etas[4] = {0.3, 0.5, 0.7, 0.9};

    for_each_trial(finite_trials, opts.jobs, [&](int i) {
        Rng rng(derive_seed(opts.seed, "accept/wm-finite", uint64_t(i)));
        Scenario s = [&]() -> Scenario {
            switch (i % 4) {
                case 0: return random_scenario(4 + i % 3, 4 + i % 9, 3, 0.4, false, rng);
                case 1: return thresholds_scenario(8, 5, 0.3, 1, rng);
                case 2: return thresholds_scenario(4, 4, 0.0, 1, rng);
                default: return cube_scenario(2, 4, rng);
            }
        }();
        std::vector<LabeledExample> stream;
        if (i % 4 == 2) {
            stream = realizable_sample(s, 25, rng);
        } else if (i % 4 == 3) {
            int x0 = s.dist.atoms()[0].example.x;
            for (int t = 0; t < 12; ++t) stream.push_back({x0, t % 2 == 0 ? +1 : -1});
            auto extra = sample_iid(s.dist, 6, rng);
            stream.insert(stream.end(), extra.begin(), extra.end());
        } else {
            stream = sample_iid(s.dist, 10 + i % 41, rng);
        }
        double eta = etas[(i / 4) % 4];

        CanonicalOracle base(s.u);
        VerifyingOracle oracle(base, s.u);
        WmFiniteResult run = wm_finite(s.cls, stream, eta, oracle);
        int opt = opt_robust_mistakes(s.cls, stream, s.u);
        auto [a, b] = regret_constants(eta);
        double bound = a * opt + b * std::log(double(s.cls.size()));
        bool good = run.mistake_count() <= bound + 1e-9;
        part_a[i] = {{"variant", "finite"},
                     {"trial", i},
                     {"kind", s.kind},
                     {"T", stream.size()},
                     {"eta", eta},
                     {"mistakes", run.mistake_count()},
                     {"opt", opt},
                     {"bound", bound},
                     {"ok", good}};
        a_ok[i] = good ? 1 : 0;
    });

    const int expert_trials = 100;
    std::vector<Json> part_b(expert_trials);
    std::vector<char> b_ok(expert_trials, 0);

    for_each_trial(expert_trials, opts.jobs, [&](int i) {
        Rng rng(derive_seed(opts.seed, "accept/wm-experts", uint64_t(i)));
        int n = i % 4 < 2 ? 4 : 8;
        Scenario s = thresholds_scenario(n, 4, 0.0, 1, rng);
        auto cache = make_lit_cache(s.cls);
        int lit = cache->lit(s.cls.full_version());
        bool realizable = i % 2 == 0;

        std::vector<LabeledExample> stream;
        if (realizable) {
            stream = realizable_sample(s, 12 + i % 9, rng);
        } else {
            int T = 14 + i % 7;
            int conflicts = 4 + i % 3;
            for (int t = 0; t < T; ++t) stream.push_back({0, t < conflicts ? -1 : +1});
            for (int t = T - 1; t > 0; --t) std::swap(stream[t], stream[rng.next_int(t + 1)]);
        }
        int T = int(stream.size());

        CanonicalOracle base(s.u);
        VerifyingOracle oracle(base, s.u);
        WmExpertsResult run = wm_experts_grouped(s.cls, stream, oracle);

        // Brute-force the best expert on the realized counterexample sequence.
        auto family = make_expert_family(lit, T);
        int opt = std::numeric_limits<int>::max();
        for (const auto& spec : family) {
            int errs = 0;
            std::vector<std::pair<int, Label>> hist;
            for (const auto& [z, y] : run.counterexamples) {
                if (expert_predict(spec, s.cls, *cache, hist, z) != y) ++errs;
                hist.emplace_back(z, y);
            }
            opt = std::min(opt, errs);
        }

        long long famsz = expert_family_size(lit, T);
        double ln_family = std::log(double(famsz));
        auto [a, b] = regret_constants(run.eta);
        int M = run.mistake_count();
        double raw_bound = a * opt + b * ln_family;
        bool good = run.family_size == famsz && M <= raw_bound + 1e-9;
        double displayed = 0;
        if (opt == 0) {
            displayed = b * ln_family;
            good = good && M <= displayed + 1e-9;
        } else {
            displayed = 2.0 * opt + 4.0 * std::sqrt(double(opt) * ln_family);
            good = good && M <= displayed + 1e-9;
        }
        if (!realizable) good = good && opt >= 3;
        if (realizable) good = good && opt == 0;

        part_b[i] = {{"variant", "experts"},
                     {"trial", i},
                     {"realizable", realizable},
                     {"n", n},
                     {"T", T},
                     {"family", famsz},
                     {"eta", run.eta},
                     {"mistakes", M},
                     {"opt", opt},
                     {"raw_bound", raw_bound},
                     {"displayed_bound", displayed},
                     {"ok", good}};
        b_ok[i] = good ? 1 : 0;
    });

    int bad = 0;
    for (char c : a_ok)
        if (!c) ++bad;
    for (char c : b_ok)
        if (!c) ++bad;
    double secs = watch.seconds();
    CriterionResult res;
    res.name = "wm-regret";
    res.rows = std::move(part_a);
    res.rows.insert(res.rows.end(), part_b.begin(), part_b.end());
    res.passed = bad == 0 && secs < 600.0;
    res.detail = std::to_string(finite_trials) + " finite + " + std::to_string(expert_trials) +
                 " expert streams within their regret bounds, " + std::to_string(bad) +
                 " failures; " + fmt(secs) + "s (budget 600s)";
    return res;
}

// ---------------------------------------------------------------------------
// online-to-batch: mixture robust risk <= 2*opt + eps with frequency >= 1 -
// delta at the conversion's own sample size.

CriterionResult run_online_to_batch(const AcceptanceOptions& opts) {
    Stopwatch watch;
    const int trials = 500;
    const double eps = 0.2, delta = 0.2;
    // Smallest m with 4*sqrt(ln(m+1)/m) + 2*sqrt(2 ln(1/delta)/m) <= eps for
    // a class with lit = 1 (family size m+1).
    const int m = 6000;

    HypothesisClass cls = make_threshold_class(2);
    PerturbationSet u = PerturbationSet::identity(2);
    FiniteDistribution dist({{{0, +1}, 0.4}, {{0, -1}, 0.1}, {{1, -1}, 0.4}, {{1, +1}, 0.1}}, 2);

    std::vector<Json> rows(trials);
    std::vector<char> fails(trials, 0);
    std::vector<char> errors(trials, 0);

    for_each_trial(trials, opts.jobs, [&](int i) {
        Rng rng(derive_seed(opts.seed, "accept/online-to-batch", uint64_t(i)));
        CanonicalOracle base(u);
        VerifyingOracle oracle(base, u);
        OnlineToBatchResult out = online_to_batch(cls, dist, u, oracle, m, rng);
        bool fail = out.mixture_risk > 2 * out.opt_risk + eps + 1e-12;
        bool bad = std::abs(out.opt_risk - 0.2) > 1e-12;
        rows[i] = {{"trial", i},
                   {"m", m},
                   {"mixture_risk", out.mixture_risk},
                   {"opt_risk", out.opt_risk},
                   {"mistakes", out.run.mistake_count()},
                   {"eta", out.run.eta},
                   {"fail", fail}};
        fails[i] = fail ? 1 : 0;
        errors[i] = bad ? 1 : 0;
    });

    int failed = 0, bad = 0;
    for (char c : fails) failed += c;
    for (char c : errors) bad += c;
    double freq = double(failed) / trials;
    double cap = delta + 3 * freq_sigma(delta, trials);
    double secs = watch.seconds();
    CriterionResult res;
    res.name = "online-to-batch";
    res.rows = std::move(rows);
    res.passed = bad == 0 && freq <= cap && secs < 600.0;
    res.detail = "mixture risk <= 2*opt + 0.2 failed in " + fmt(freq) + " of trials (cap " +
                 fmt(cap) + ") at m=6000, opt=0.2; " + fmt(secs) + "s (budget 600s)";
    return res;
}

// ---------------------------------------------------------------------------
// soa-mistake-bound: successes never exceed lit for every attacker and
// scenario at a 10^4-round horizon.

Scenario soa_scenario(int idx, Rng& rng) {
    if (idx < 4) {
        int n = 2 << idx;
        return thresholds_scenario(n, 4 + idx, 0.0, 1, rng);
    }
    if (idx < 7) return cube_scenario(idx - 3, 3 + idx % 3, rng);
    return random_scenario(4 + idx % 3, 6 + idx % 9, 4, 0.3, true, rng);
}

CriterionResult run_soa_bound(const AcceptanceOptions& opts) {
    Stopwatch watch;
    const int scenarios = 27;
    const int horizon = 10000;
    const int games = scenarios * 4;
    std::vector<Json> rows(games);
    std::vector<char> oks(games, 0);

    for_each_trial(games, opts.jobs, [&](int g) {
        int scenario_idx = g / 4;
        int attacker_idx = g % 4;
        Rng srng(derive_seed(opts.seed, "accept/soa-scenario", uint64_t(scenario_idx)));
        Scenario s = soa_scenario(scenario_idx, srng);
        auto cache = make_lit_cache(s.cls);
        int lit = cache->lit(s.cls.full_version());

        IdentityAttacker identity;
        UniformAttacker uniform(s.u);
        GreedyAttacker greedy(s.u);
        BlindAttacker blind(s.u, 0.25);
        Attacker* attackers[4] = {&identity, &uniform, &greedy, &blind};
        const char* names[4] = {"identity", "uniform", "greedy", "blind"};

        Rng rng(derive_seed(opts.seed, "accept/soa-game", uint64_t(g)));
        SoaLearner learner(s.cls, cache);
        GameTranscript t =
            attack_game(learner, *attackers[attacker_idx], s.dist, s.u, horizon, rng);
        bool good = t.successes <= lit;
        rows[g] = {{"scenario", scenario_idx},
                   {"kind", s.kind},
                   {"attacker", names[attacker_idx]},
                   {"rounds", horizon},
                   {"successes", t.successes},
                   {"lit", lit},
                   {"ok", good}};
        oks[g] = good ? 1 : 0;
    });

    int bad = 0;
    for (char c : oks)
        if (!c) ++bad;
    double secs = watch.seconds();
    CriterionResult res;
    res.name = "soa-mistake-bound";
    res.rows = std::move(rows);
    res.passed = bad == 0 && secs < 300.0;
    res.detail = std::to_string(games - bad) + "/" + std::to_string(games) +
                 " games with successes <= lit at horizon 10000; " + fmt(secs) +
                 "s (budget 300s)";
    return res;
}

// ---------------------------------------------------------------------------
// threshold-lower-bound: mean query count against the half-log floor and the
// per-query contraction average, for every strategy and d in {9, 17, 33}.

CriterionResult run_lower_bound(const AcceptanceOptions& opts) {
    Stopwatch watch;
    const int runs = 5000;
    const LowerBoundStrategy strategies[3] = {LowerBoundStrategy::BinarySearch,
                                              LowerBoundStrategy::SoaDriven,
                                              LowerBoundStrategy::UniformRandom};
    const char* names[3] = {"binary-search", "soa-driven", "uniform-random"};
    const int ds[3] = {9, 17, 33};

    CriterionResult res;
    res.name = "threshold-lower-bound";
    bool ok = true;

    for (int di = 0; di < 3; ++di) {
        for (int si = 0; si < 3; ++si) {
            int d = ds[di];
            std::string scope =
                std::string("accept/threshold-lower-bound/") + std::to_string(d) + "/" + names[si];
            std::vector<int> queries(runs, 0);
            std::vector<double> ratio_sum(runs, 0);
            std::vector<int> ratio_count(runs, 0);
            std::vector<char> identified(runs, 0);

            for_each_trial(runs, opts.jobs, [&](int j) {
                Rng rng(derive_seed(opts.seed, scope, uint64_t(j)));
                LowerBoundRun run = threshold_lower_bound_game(strategies[si], d, rng);
                queries[j] = run.queries;
                for (double r : run.ratios) ratio_sum[j] += r;
                ratio_count[j] = int(run.ratios.size());
                identified[j] = run.output_threshold == run.secret && run.output_risk == 0.0 &&
                                        !run.version_sizes.empty() &&
                                        run.version_sizes.front() == d - 1 &&
                                        run.version_sizes.back() == 1
                                    ? 1
                                    : 0;
            });

            long double sum = 0, sumsq = 0, ratios = 0;
            long long nratios = 0;
            int missed = 0;
            for (int j = 0; j < runs; ++j) {
                sum += queries[j];
                sumsq += (long double)queries[j] * queries[j];
                ratios += ratio_sum[j];
                nratios += ratio_count[j];
                if (!identified[j]) ++missed;
            }
            double mean = double(sum / runs);
            double var = double((sumsq - sum * sum / runs) / (runs - 1));
            double stderr_mean = std::sqrt(std::max(0.0, var) / runs);
            double floor_bound = std::log2(double(d - 1)) / 2.0 - 2.0 * stderr_mean;
            double contraction = nratios > 0 ? double(ratios / nratios) : 0.0;
            bool good = missed == 0 && mean >= floor_bound && contraction >= 0.25;
            ok = ok && good;
            res.rows.push_back({{"d", d},
                                {"strategy", names[si]},
                                {"runs", runs},
                                {"mean_queries", mean},
                                {"stderr", stderr_mean},
                                {"floor", floor_bound},
                                {"avg_contraction", contraction},
                                {"missed_secrets", missed},
                                {"ok", good}});
        }
    }

    double secs = watch.seconds();
    res.passed = ok && secs < 300.0;
    res.detail = "9 strategy/d combinations: mean queries above the half-log floor, contraction >= "
                 "1/4, all secrets identified; " +
                 fmt(secs) + "s (budget 300s)";
    return res;
}

// ---------------------------------------------------------------------------
// survivor: error at most eps with frequency >= 1 - delta against a
// stationary randomized attacker; updates and rounds within their caps.

CriterionResult run_survivor(const AcceptanceOptions& opts) {
    Stopwatch watch;
    const int trials = 2000;
    const double eps = 0.2, delta = 0.2;
    std::vector<Json> rows(trials);
    std::vector<char> fails(trials, 0);
    std::vector<char> errors(trials, 0);

    for_each_trial(trials, opts.jobs, [&](int i) {
        Rng rng(derive_seed(opts.seed, "accept/survivor", uint64_t(i)));
        Scenario s = i % 2 == 0 ? thresholds_scenario(4, 4, 0.0, 1, rng)
                                : thresholds_scenario(8, 5, 0.0, 1, rng);
        auto cache = make_lit_cache(s.cls);
        int lit = cache->lit(s.cls.full_version());
        SoaLearner learner(s.cls, cache);

        UniformAttacker uniform(s.u);
        BlindAttacker blind(s.u, 0.4);
        Attacker& attacker = i % 4 < 2 ? static_cast<Attacker&>(uniform) : blind;

        bool fail = false, bad = false;
        double err = 0;
        int updates = 0, rounds = 0;
        long long cap = 0;
        try {
            SurvivorResult out = survivor_learn(s.dist, learner, attacker, s.u, eps, delta, lit, rng);
            ErrorEstimate est = attacker_error(out.predictor, attacker, s.dist, 1, rng);
            err = est.value;
            updates = out.updates;
            rounds = out.rounds;
            cap = out.round_cap;
            fail = !est.exact || err > eps + 1e-12;
            bad = out.updates > lit || out.rounds > out.round_cap;
        } catch (const SurvivorFailureError&) {
            fail = true;
        }
        rows[i] = {{"trial", i},
                   {"kind", s.kind},
                   {"lit", lit},
                   {"attacker", i % 4 < 2 ? "uniform" : "blind"},
                   {"error", err},
                   {"updates", updates},
                   {"rounds", rounds},
                   {"round_cap", cap},
                   {"fail", fail}};
        fails[i] = fail ? 1 : 0;
        errors[i] = bad ? 1 : 0;
    });

    int failed = 0, bad = 0;
    for (char c : fails) failed += c;
    for (char c : errors) bad += c;
    double freq = double(failed) / trials;
    double cap = delta + 3 * freq_sigma(delta, trials);
    double secs = watch.seconds();
    CriterionResult res;
    res.name = "survivor";
    res.rows = std::move(rows);
    res.passed = bad == 0 && freq <= cap && secs < 600.0;
    res.detail = "attacker error > 0.2 in " + fmt(freq) + " of trials (cap " + fmt(cap) +
                 "); updates <= lit and rounds within cap everywhere; " + fmt(secs) +
                 "s (budget 600s)";
    return res;
}

// ---------------------------------------------------------------------------
// determinism: every other criterion, run twice with the same options, emits
// byte-identical rows; every embedded query log re-verifies.

std::string dump_rows(const std::vector<Json>& rows) {
    std::string out;
    for (const auto& r : rows) {
        out += r.dump();
        out += '\n';
    }
    return out;
}

CriterionResult run_determinism(const AcceptanceOptions& opts) {
    CriterionResult res;
    res.name = "determinism";
    bool ok = true;
    long long checked = 0, failures = 0;

    for (const auto& c : acceptance_criteria()) {
        if (c.name == "determinism") continue;
        CriterionResult first = c.run(opts);
        CriterionResult second = c.run(opts);
        std::string a = dump_rows(first.rows);
        std::string b = dump_rows(second.rows);
        bool identical = a == b;

        long long crit_checked = 0, crit_failures = 0;
        for (const auto& row : first.rows) {
            if (!row.is_object() || !row.contains("query_log") || !row.contains("perturbation"))
                continue;
            PerturbationSet u = perturbation_from_json(row["perturbation"]);
            AttackCheckReport rep = attack_check_text(row["query_log"].get<std::string>(), u);
            crit_checked += rep.checked;
            crit_failures += rep.failures;
        }
        checked += crit_checked;
        failures += crit_failures;
        ok = ok && identical && crit_failures == 0;
        res.rows.push_back({{"criterion", c.name},
                            {"bytes", a.size()},
                            {"identical", identical},
                            {"replayed_queries", crit_checked},
                            {"replay_failures", crit_failures}});
    }

    ok = ok && checked > 0;
    res.passed = ok;
    res.detail = "two runs byte-identical for every criterion; " + std::to_string(checked) +
                 " logged oracle responses re-verified with " + std::to_string(failures) +
                 " failures";
    return res;
}

}  // namespace

const std::vector<Criterion>& acceptance_criteria() {
    static const std::vector<Criterion> all = {
        {"dims", run_dims},
        {"cyclerobust", run_cyclerobust},
        {"cyclerobust-generalization", run_generalization},
        {"rlua", run_rlua},
        {"agnostic", run_agnostic},
        {"wm-regret", run_wm_regret},
        {"online-to-batch", run_online_to_batch},
        {"soa-mistake-bound", run_soa_bound},
        {"threshold-lower-bound", run_lower_bound},
        {"survivor", run_survivor},
        {"determinism", run_determinism},
    };
    return all;
}

int run_acceptance(const std::vector<std::string>& names, const AcceptanceOptions& opts,
                   std::ostream& out) {
    const auto& all = acceptance_criteria();
    std::vector<const Criterion*> todo;
    for (const auto& c : all) {
        bool wanted = names.empty();
        for (const auto& n : names) wanted = wanted || n == c.name;
        if (wanted) todo.push_back(&c);
    }
    if (!names.empty() && todo.size() != names.size())
        throw ScaleCapError("unknown acceptance criterion name");

    int failures = 0;
    for (const Criterion* c : todo) {
        CriterionResult res;
        try {
            res = c->run(opts);
        } catch (const std::exception& e) {
            res.name = c->name;
            res.passed = false;
            res.detail = std::string("exception: ") + e.what();
        }
        out << (res.passed ? "PASS " : "FAIL ") << res.name << ": " << res.detail << "\n";
        out.flush();
        if (!res.passed) ++failures;
        if (!opts.out_dir.empty()) {
            std::filesystem::create_directories(opts.out_dir);
            std::ofstream f(opts.out_dir + "/" + res.name + ".jsonl", std::ios::binary);
            write_jsonl(f, res.rows);
        }
    }
    return failures;
}

}  // namespace upset
