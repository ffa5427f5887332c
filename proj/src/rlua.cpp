#include "upset/rlua.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <unordered_map>

#include "upset/errors.hpp"

namespace upset {

namespace {

// Advances a k-combination over {0..m-1} in lexicographic order.
bool next_combination(std::vector<int>& comb, int m) {
    int k = int(comb.size());
    for (int i = k - 1; i >= 0; --i) {
        if (comb[i] < m - k + i) {
            ++comb[i];
            for (int j = i + 1; j < k; ++j) comb[j] = comb[j - 1] + 1;
            return true;
        }
    }
    return false;
}

uint64_t table_hash(const Predictor& p) {
    uint64_t h = 1469598103934665603ull;
    for (Label v : p.truth_table()) {
        h ^= uint64_t(v + 2);
        h *= 1099511628211ull;
    }
    return h;
}

double sauer_sum(int p, int d) {
    double total = 0, term = 1;
    for (int i = 0; i <= d; ++i) {
        total += term;
        term = term * (p - i) / (i + 1);
    }
    return total;
}

}  // namespace

int HypothesisPool::find(const Predictor& p) const {
    for (int i = 0; i < int(members.size()); ++i)
        if (members[i] == p) return i;
    return -1;
}

HypothesisPool build_pool(const std::vector<LabeledExample>& sample, int n,
                          const LearnerFactory& factory, AttackOracle& oracle,
                          long long enumeration_cap) {
    int m = int(sample.size());
    if (m == 0) throw Error("build_pool: empty sample");
    if (n < 1) throw Error("build_pool: subset size must be at least 1");
    HypothesisPool pool;
    pool.sample_size = m;
    pool.subset_size = n;
    std::unordered_map<uint64_t, std::vector<int>> by_hash;
    for (int k = 1; k <= std::min(n, m); ++k) {
        std::vector<int> comb(k);
        for (int i = 0; i < k; ++i) comb[i] = i;
        do {
            if (++pool.enumerated > enumeration_cap)
                throw ScaleCapError("build_pool: subset enumeration exceeds the cap");
            std::vector<LabeledExample> sub;
            sub.reserve(k);
            for (int idx : comb) sub.push_back(sample[idx]);
            auto learner = factory();
            auto res = try_cycle_robust(sub, *learner, oracle, learner->mistake_bound() + 2);
            if (!res) {
                ++pool.skipped;
                continue;
            }
            pool.queries += res->record.queries;
            uint64_t h = table_hash(res->predictor);
            bool fresh = true;
            for (int i : by_hash[h]) {
                if (pool.members[i] == res->predictor) {
                    fresh = false;
                    break;
                }
            }
            if (fresh) {
                by_hash[h].push_back(int(pool.members.size()));
                pool.members.push_back(res->predictor);
                pool.generators.push_back(comb);
            }
        } while (next_combination(comb, m));
    }
    if (pool.members.empty())
        throw NonRealizableError("build_pool: no sample subset admits a robustly consistent predictor");
    return pool;
}

Bits pool_pattern(const HypothesisPool& pool, int z, Label y) {
    check_label(y);
    Bits pat(int(pool.members.size()));
    for (int i = 0; i < int(pool.members.size()); ++i)
        if (pool.members[i](z) != y) pat.set(i);
    return pat;
}

DiscretizedSet discretize(const std::vector<LabeledExample>& sample, const HypothesisPool& pool,
                          AttackOracle& oracle, const PerturbationSet& u) {
    if (pool.members.empty()) throw Error("discretize: empty pool");
    int domain = pool.members.front().domain_size();
    DiscretizedSet out;
    std::unordered_set<Bits, BitsHash> seen;
    // Patterns depend on (instance, label); memoize both labels per instance.
    std::vector<std::array<std::optional<Bits>, 2>> memo(domain);
    auto pattern_of = [&](int z, Label y) -> const Bits& {
        auto& slot = memo[z][y > 0 ? 1 : 0];
        if (!slot) slot = pool_pattern(pool, z, y);
        return *slot;
    };
    for (int i = 0; i < int(sample.size()); ++i) {
        const auto& ex = sample[i];
        if (ex.x < 0 || ex.x >= domain) throw Error("discretize: example outside the pool domain");
        std::unordered_set<Bits, BitsHash> local;
        std::vector<std::pair<int, Bits>> found;  // counterexamples in discovery order
        const Bits& seed = pattern_of(ex.x, ex.y);
        local.insert(seed);
        // Each counterexample must land on a pattern absent from the local
        // list, so the loop finishes within |U(x)| + 1 oracle queries.
        long long cap = (long long)u.at(ex.x).size() + 1;
        long long used = 0;
        for (;;) {
            if (used >= cap + 1)
                throw ContractViolationError("discretize: query budget exceeded for one example");
            std::vector<Label> table(domain);
            for (int z = 0; z < domain; ++z)
                table[z] = local.count(pattern_of(z, ex.y)) ? ex.y : Label(-ex.y);
            auto resp = oracle.query(Predictor::table(std::move(table), PredictorKind::Pattern), ex);
            ++used;
            if (resp.robustly_correct) break;
            const Bits& pat = pattern_of(resp.z, ex.y);
            if (local.count(pat))
                throw ContractViolationError("discretize: counterexample repeats a known pattern");
            local.insert(pat);
            found.emplace_back(resp.z, pat);
        }
        out.queries += used;
        out.max_queries_per_example = std::max(out.max_queries_per_example, used);
        // The seed pattern is only known to occur inside U(x) when x itself
        // is a member; counterexample patterns are always genuine.
        if (u.contains(ex.x, ex.x) && !seen.count(seed)) {
            seen.insert(seed);
            out.points.push_back({{ex.x, ex.y}, seed, i});
        }
        for (const auto& [z, pat] : found) {
            if (!seen.count(pat)) {
                seen.insert(pat);
                out.points.push_back({{z, ex.y}, pat, i});
            }
        }
    }
    return out;
}

int default_boost_rounds(int m) {
    if (m < 1) throw Error("default_boost_rounds: need m >= 1");
    return std::max(1, int(std::ceil(112.0 * std::log(double(m)))));
}

double default_boost_alpha(int m, int rounds) {
    if (m < 1 || rounds < 1) throw Error("default_boost_alpha: need m, rounds >= 1");
    return 0.5 * std::log(1.0 + std::sqrt(2.0 * std::log(double(m)) / rounds));
}

int default_sparsify_size(int dstar) {
    if (dstar < 0) throw Error("default_sparsify_size: negative dimension");
    return std::max(int(std::ceil(324.0 * (dstar + std::log(3.0)))), 9);
}

BoostRun alpha_boost(const DiscretizedSet& dset, const std::vector<LabeledExample>& sample, int n,
                     const LearnerFactory& factory, AttackOracle& oracle, const BoostConfig& config,
                     Rng& rng) {
    int d = int(dset.points.size());
    if (d == 0) throw Error("alpha_boost: empty discretized set");
    if (n < 1) throw Error("alpha_boost: draw size must be at least 1");
    int rounds = config.rounds > 0 ? config.rounds : default_boost_rounds(d);
    double alpha = config.alpha >= 0 ? config.alpha : default_boost_alpha(d, rounds);
    const double kSlack = 1e-12;
    BoostRun run;
    run.alpha = alpha;
    std::vector<double> dist(d, 1.0 / d);
    std::vector<int> correct_rounds(d, 0);
    for (int t = 0; t < rounds; ++t) {
        run.distributions.push_back(dist);
        BoostRound round;
        bool accepted = false;
        for (int attempt = 0; attempt <= config.retry_cap; ++attempt) {
            std::vector<int> drawn(n);
            for (int& v : drawn) v = rng.pick_weighted(dist);
            std::vector<int> origins(n);
            std::vector<LabeledExample> proj;
            proj.reserve(n);
            for (int j = 0; j < n; ++j) {
                origins[j] = dset.points[drawn[j]].origin_index;
                proj.push_back(sample[origins[j]]);
            }
            auto learner = factory();
            auto res = try_cycle_robust(proj, *learner, oracle, learner->mistake_bound() + 2);
            if (!res) {
                ++round.redraws;
                continue;
            }
            run.queries += res->record.queries;
            double err = 0;
            for (int p = 0; p < d; ++p)
                if (res->predictor(dset.points[p].point.x) != dset.points[p].point.y) err += dist[p];
            if (err > 1.0 / 3 + kSlack) {
                ++round.redraws;
                continue;
            }
            round.predictor = res->predictor;
            round.drawn_points = std::move(drawn);
            round.origin_draws = std::move(origins);
            round.weighted_error = err;
            accepted = true;
            break;
        }
        if (!accepted) throw BoostFailureError("alpha_boost: no round passed the 1/3 error bar within the redraw budget");
        double z = 0;
        double down = std::exp(-2.0 * alpha);
        for (int p = 0; p < d; ++p) {
            if (round.predictor(dset.points[p].point.x) == dset.points[p].point.y) {
                dist[p] *= down;
                ++correct_rounds[p];
            }
            z += dist[p];
        }
        for (double& w : dist) w /= z;
        round.normalizer = z;
        run.rounds.push_back(std::move(round));
    }
    run.margins.resize(d);
    for (int p = 0; p < d; ++p) {
        run.margins[p] = double(correct_rounds[p]) / rounds;
        if (run.margins[p] < 5.0 / 9 - kSlack)
            throw BoostFailureError("alpha_boost: a point finished below the 5/9 margin");
    }
    return run;
}

SparsifyResult sparsify(const BoostRun& run, const std::vector<LabeledExample>& sample,
                        AttackOracle& oracle, int N, int draw_cap, Rng& rng) {
    int rounds = int(run.rounds.size());
    if (rounds == 0) throw Error("sparsify: empty boost run");
    if (N < 1) throw Error("sparsify: N must be at least 1");
    SparsifyResult out;
    for (int attempt = 0; attempt < draw_cap; ++attempt) {
        std::vector<int> pick(N);
        for (int& v : pick) v = rng.next_int(rounds);
        std::vector<Predictor> parts;
        parts.reserve(N);
        for (int j : pick) parts.push_back(run.rounds[j].predictor);
        Predictor maj = Predictor::majority_vote(parts);
        ++out.draws_used;
        bool clean = true;
        for (const auto& ex : sample) {
            auto resp = oracle.query(maj, ex);
            ++out.queries;
            if (!resp.robustly_correct) {
                clean = false;
                break;
            }
        }
        if (clean) {
            out.chosen_rounds = std::move(pick);
            out.majority = std::move(maj);
            return out;
        }
    }
    throw SparsifyFailureError("sparsify: no draw reached zero empirical robust loss within the cap");
}

RluaResult rlua_learn(const std::vector<LabeledExample>& sample, const LearnerFactory& factory,
                      AttackOracle& oracle, const PerturbationSet& u, const RluaConfig& config,
                      Rng& rng) {
    if (sample.empty()) throw Error("rlua_learn: empty sample");
    if (config.n < 1) throw Error("rlua_learn: config.n must be at least 1");
    RluaResult out;
    HypothesisPool pool = build_pool(sample, config.n, factory, oracle, config.pool_cap);
    out.pool_enumerated = pool.enumerated;
    out.pool_size = int(pool.members.size());
    out.queries += pool.queries;

    DiscretizedSet dset = discretize(sample, pool, oracle, u);
    out.dset_size = int(dset.points.size());
    out.queries += dset.queries;

    int p = int(pool.members.size());
    if (p > kMaxHypotheses)
        throw ScaleCapError("rlua_learn: pool too large for the dual dimension check");
    std::vector<std::vector<Label>> rows;
    rows.reserve(p);
    for (const auto& member : pool.members) rows.push_back(member.truth_table());
    HypothesisClass pool_cls = HypothesisClass::from_rows(rows);
    int dstar = dual_vc_dimension(pool_cls);
    out.dual_vc_pool = dstar;
    if (dstar == 0) {
        // All pool members constant: at most two members, four patterns.
        if (out.dset_size > (1 << p))
            throw ContractViolationError("rlua_learn: discretized set exceeds the pattern count bound");
    } else {
        double envelope = std::pow(std::exp(1.0) * p / dstar, dstar);
        double sum = 2.0 * sauer_sum(p, dstar);  // each column or its complement
        if (double(out.dset_size) > std::min(envelope, sum) + 1e-9)
            throw ContractViolationError("rlua_learn: discretized set exceeds the dual growth bound");
    }

    BoostRun run = alpha_boost(dset, sample, config.n, factory, oracle, config.boost, rng);
    out.rounds = int(run.rounds.size());
    out.alpha = run.alpha;
    out.queries += run.queries;

    int N = config.N > 0 ? config.N : default_sparsify_size(dstar);
    SparsifyResult sp = sparsify(run, sample, oracle, N, config.sparsify_draw_cap, rng);
    out.queries += sp.queries;
    out.N = N;
    out.predictor = sp.majority;
    out.compression.reserve(N);
    for (int j : sp.chosen_rounds) out.compression.push_back(run.rounds[j].origin_draws);
    out.compression_size = config.n * N;
    return out;
}

ConfidenceRun boost_confidence(const std::vector<LabeledExample>& sample,
                               const LearnerFactory& factory, AttackOracle& oracle,
                               const PerturbationSet& u, const ConfidenceConfig& config,
                               double delta, Rng& rng) {
    int m = int(sample.size());
    if (m == 0) throw Error("boost_confidence: empty sample");
    if (!(delta > 0 && delta < 1)) throw Error("boost_confidence: delta must lie in (0, 1)");
    if (config.weak_sample < 1) throw Error("boost_confidence: weak draw size must be at least 1");
    int rounds = config.rounds > 0 ? config.rounds : default_boost_rounds(m);
    double alpha = config.alpha >= 0 ? config.alpha : default_boost_alpha(m, rounds);
    int retries = std::max(1, int(std::ceil(std::log(2.0 * rounds / delta))));
    const double kSlack = 1e-12;
    ConfidenceRun run;
    std::vector<double> dist(m, 1.0 / m);
    for (int t = 0; t < rounds; ++t) {
        bool accepted = false;
        Predictor chosen;
        double chosen_err = 0;
        std::vector<char> ok(m, 0);
        int used = 0;
        for (int attempt = 0; attempt < retries && !accepted; ++attempt) {
            ++used;
            std::vector<LabeledExample> draw(config.weak_sample);
            for (auto& e : draw) e = sample[rng.pick_weighted(dist)];
            RluaResult weak;
            try {
                weak = rlua_learn(draw, factory, oracle, u, config.weak, rng);
            } catch (const NonRealizableError&) {
                continue;
            } catch (const BoostFailureError&) {
                continue;
            } catch (const SparsifyFailureError&) {
                continue;
            }
            run.queries += weak.queries;
            double err = 0;
            for (int i = 0; i < m; ++i) {
                auto resp = oracle.query(weak.predictor, sample[i]);
                ++run.queries;
                ok[i] = resp.robustly_correct;
                if (!resp.robustly_correct) err += dist[i];
            }
            if (err <= 1.0 / 3 + kSlack) {
                chosen = weak.predictor;
                chosen_err = err;
                accepted = true;
            }
        }
        if (!accepted)
            throw ConfidenceBoostFailureError(
                "boost_confidence: no weak predictor reached robust risk 1/3 within the retry budget");
        double z = 0;
        double down = std::exp(-2.0 * alpha);
        for (int i = 0; i < m; ++i) {
            if (ok[i]) dist[i] *= down;
            z += dist[i];
        }
        for (double& w : dist) w /= z;
        run.round_predictors.push_back(chosen);
        run.round_errors.push_back(chosen_err);
        run.round_retries.push_back(used - 1);
    }
    run.majority = Predictor::majority_vote(run.round_predictors);
    for (const auto& ex : sample) {
        auto resp = oracle.query(run.majority, ex);
        ++run.queries;
        if (!resp.robustly_correct)
            throw ConfidenceBoostFailureError("boost_confidence: final majority not robustly correct on the sample");
    }
    return run;
}

AgnosticResult agnostic_reduce(const std::vector<LabeledExample>& sample,
                               const LearnerFactory& factory, AttackOracle& oracle,
                               const PerturbationSet& u, const ConfidenceConfig& config,
                               double delta, Rng& rng) {
    int m = int(sample.size());
    if (m == 0) throw Error("agnostic_reduce: empty sample");
    if (m > 16) throw ScaleCapError("agnostic_reduce: sample larger than 16 would enumerate past 2^16 subsequences");
    AgnosticResult out;
    for (int k = m; k >= 1; --k) {
        std::vector<int> comb(k);
        for (int i = 0; i < k; ++i) comb[i] = i;
        do {
            std::vector<LabeledExample> sub;
            sub.reserve(k);
            for (int idx : comb) sub.push_back(sample[idx]);
            auto learner = factory();
            auto res = try_cycle_robust(sub, *learner, oracle, learner->mistake_bound() + 2);
            if (res) {
                out.queries += res->record.queries;
                out.kept_indices = comb;
                ConfidenceRun boosted = boost_confidence(sub, factory, oracle, u, config, delta, rng);
                out.queries += boosted.queries;
                out.predictor = boosted.majority;
                return out;
            }
        } while (next_combination(comb, m));
    }
    out.degenerate = true;
    out.predictor = Predictor::constant(+1, u.instances());
    return out;
}

}  // namespace upset
