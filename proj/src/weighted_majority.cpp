#include "upset/weighted_majority.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <climits>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>
#include <unordered_map>

#include "upset/errors.hpp"

namespace upset {

namespace {

const double kSlack = 1e-12;

// Scale-aware contraction test: summing many weights carries rounding of
// order eps * total, so the slack must grow with the total.
bool contraction_violated(double after, double before, double eta) {
    double bound = (1.0 + eta) / 2.0 * before;
    return after > bound + 1e-9 * std::max(1.0, before) + kSlack;
}

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

void check_spec(const ExpertSpec& spec) {
    for (size_t i = 0; i < spec.flips.size(); ++i) {
        if (spec.flips[i] < 1 || (i > 0 && spec.flips[i] <= spec.flips[i - 1]))
            throw Error("expert flip rounds must be strictly increasing and positive");
    }
}

}  // namespace

std::pair<double, double> regret_constants(double eta) {
    if (!(eta > 0 && eta < 1)) throw Error("regret_constants: eta must lie in (0, 1)");
    double denom = std::log(2.0 / (1.0 + eta));
    return {std::log(1.0 / eta) / denom, 1.0 / denom};
}

double default_eta(double ln_family, int horizon) {
    if (horizon < 1) throw Error("default_eta: horizon must be at least 1");
    if (ln_family < 0) throw Error("default_eta: negative log family size");
    double one_minus = std::min(2.0 * ln_family / horizon, 0.5);
    if (one_minus <= 0) return 0.5;  // single expert: weights never matter
    return 1.0 - one_minus;
}

WmFiniteResult wm_finite(const HypothesisClass& cls, const std::vector<LabeledExample>& stream,
                         double eta, AttackOracle& oracle) {
    if (!(eta >= 0 && eta < 1)) throw Error("wm_finite: eta must lie in [0, 1)");
    WmFiniteResult out;
    out.eta = eta;
    out.weights.assign(cls.size(), 1.0);
    Predictor vote = Predictor::weighted_rows(cls, out.weights);
    for (int t = 0; t < int(stream.size()); ++t) {
        const auto& ex = stream[t];
        auto resp = oracle.query(vote, ex);
        ++out.queries;
        if (resp.robustly_correct) continue;
        double before = std::accumulate(out.weights.begin(), out.weights.end(), 0.0);
        for (int r = 0; r < cls.size(); ++r)
            if (cls.label(r, resp.z) != ex.y) out.weights[r] *= eta;
        double after = std::accumulate(out.weights.begin(), out.weights.end(), 0.0);
        // the erring side held at least half the weight, so the total drops
        if (contraction_violated(after, before, eta))
            throw ContractViolationError("wm_finite: total weight failed to contract on a counterexample round");
        out.mistakes.push_back({t, resp.z, ex.y});
        vote = Predictor::weighted_rows(cls, out.weights);
    }
    return out;
}

int opt_robust_mistakes(const HypothesisClass& cls, const std::vector<LabeledExample>& stream,
                        const PerturbationSet& u) {
    int best = INT_MAX;
    for (int r = 0; r < cls.size(); ++r) {
        Predictor p = Predictor::class_member(cls, r);
        int count = 0;
        for (const auto& ex : stream) count += robust_loss(p, ex, u);
        best = std::min(best, count);
    }
    return best;
}

long long expert_family_size(int max_flips, int horizon) {
    if (horizon < 1) throw Error("expert_family_size: horizon must be at least 1");
    if (max_flips < 0) throw Error("expert_family_size: negative flip budget");
    const __int128 kSat = (__int128)4 * 1000 * 1000 * 1000 * (long long)1000 * 1000 * 1000;
    __int128 total = 1, term = 1;
    for (int L = 1; L <= std::min(max_flips, horizon); ++L) {
        term = term * (horizon - L + 1) / L;  // exact: L divides C(h, L-1)*(h-L+1)
        total += term;
        if (total > kSat || term > kSat) return LLONG_MAX;
    }
    return (long long)total;
}

std::vector<ExpertSpec> make_expert_family(int max_flips, int horizon, long long cap) {
    long long size = expert_family_size(max_flips, horizon);
    if (size > cap)
        throw ScaleCapError("expert family of " + std::to_string(size) +
                            " exceeds the cap of " + std::to_string(cap) +
                            "; shrink the horizon or the flip budget");
    std::vector<ExpertSpec> family;
    family.reserve(size_t(size));
    family.push_back({});
    for (int L = 1; L <= std::min(max_flips, horizon); ++L) {
        std::vector<int> comb(L);
        for (int i = 0; i < L; ++i) comb[i] = i;
        do {
            ExpertSpec spec;
            spec.flips.resize(L);
            for (int i = 0; i < L; ++i) spec.flips[i] = comb[i] + 1;
            family.push_back(std::move(spec));
        } while (next_combination(comb, horizon));
    }
    return family;
}

Label expert_predict(const ExpertSpec& spec, const HypothesisClass& cls, LitCache& cache,
                     const std::vector<std::pair<int, Label>>& history, int x) {
    check_spec(spec);
    auto flips_at = [&](int round) {
        return std::binary_search(spec.flips.begin(), spec.flips.end(), round);
    };
    Bits version = cls.full_version();
    bool flagged = false;
    int local = 0;
    for (const auto& [z, y] : history) {
        (void)y;
        ++local;
        if (flagged) continue;
        Label base = soa_vote(cls, cache, version, z);
        Label mine = flips_at(local) ? Label(-base) : base;
        version = cls.restrict(version, z, mine);
        if (version.none()) flagged = true;
    }
    if (flagged) return +1;
    Label base = soa_vote(cls, cache, version, x);
    return flips_at(local + 1) ? Label(-base) : base;
}

WmExpertsResult wm_experts(const HypothesisClass& cls, const std::vector<LabeledExample>& stream,
                           AttackOracle& oracle, double eta, long long family_cap) {
    int horizon = int(stream.size());
    if (horizon < 1) throw Error("wm_experts: empty stream");
    auto cache = make_lit_cache(cls);
    int lit = cache->lit(cls.full_version());
    std::vector<ExpertSpec> family = make_expert_family(lit, horizon, family_cap);
    long long count = (long long)family.size();

    WmExpertsResult out;
    out.family_size = count;
    out.eta = eta >= 0 ? eta : default_eta(std::log(double(count)), horizon);
    if (!(out.eta >= 0 && out.eta < 1)) throw Error("wm_experts: eta must lie in [0, 1)");
    out.weights.assign(count, 1.0);

    std::vector<Bits> versions(count, cls.full_version());
    std::vector<char> flagged(count, 0);
    int local = 0;  // counterexamples processed; shared by every expert

    auto flips_at = [&](long long e, int round) {
        return std::binary_search(family[e].flips.begin(), family[e].flips.end(), round);
    };
    auto build_vote = [&]() {
        struct Group {
            double w[2] = {0, 0};
        };
        std::unordered_map<Bits, Group, BitsHash> groups;
        double flagged_weight = 0, total = 0;
        for (long long e = 0; e < count; ++e) {
            total += out.weights[e];
            if (flagged[e]) {
                flagged_weight += out.weights[e];
                continue;
            }
            groups[versions[e]].w[flips_at(e, local + 1) ? 1 : 0] += out.weights[e];
        }
        std::vector<Label> table(cls.instances());
        for (int x = 0; x < cls.instances(); ++x) {
            double sum = flagged_weight;
            for (const auto& [version, g] : groups) {
                Label base = soa_vote(cls, *cache, version, x);
                sum += (g.w[0] - g.w[1]) * base;
            }
            table[x] = sum >= 0 ? +1 : -1;  // tie -> +1
        }
        uint64_t salt = std::bit_cast<uint64_t>(total) ^ (uint64_t(local) * 0x9e3779b97f4a7c15ull);
        return Predictor::table(std::move(table), PredictorKind::WeightedMajority, salt);
    };

    Predictor vote = build_vote();
    for (int t = 0; t < horizon; ++t) {
        out.round_votes.push_back(vote);
        const auto& ex = stream[t];
        auto resp = oracle.query(vote, ex);
        ++out.queries;
        if (resp.robustly_correct) continue;
        int z = resp.z;
        double before = std::accumulate(out.weights.begin(), out.weights.end(), 0.0);
        ++local;
        // one transition per distinct (version space, flip) this round
        struct Step {
            Label pred;
            Bits next;
            bool emptied;
        };
        std::unordered_map<Bits, std::array<std::optional<Step>, 2>, BitsHash> steps;
        for (long long e = 0; e < count; ++e) {
            Label pred = +1;
            if (!flagged[e]) {
                bool f = flips_at(e, local);
                auto& slot = steps[versions[e]][f ? 1 : 0];
                if (!slot) {
                    Label base = soa_vote(cls, *cache, versions[e], z);
                    Label mine = f ? Label(-base) : base;
                    Bits next = cls.restrict(versions[e], z, mine);
                    slot = Step{mine, next, next.none()};
                }
                pred = slot->pred;
                versions[e] = slot->next;
                flagged[e] = slot->emptied;
            }
            if (pred != ex.y) out.weights[e] *= out.eta;
        }
        double after = std::accumulate(out.weights.begin(), out.weights.end(), 0.0);
        if (contraction_violated(after, before, out.eta))
            throw ContractViolationError("wm_experts: total weight failed to contract on a counterexample round");
        out.mistakes.push_back({t, z, ex.y});
        out.counterexamples.push_back({z, ex.y});
        vote = build_vote();
    }
    return out;
}

namespace {

// Sum of C(remaining, i) for i <= budget, exact in integers. Values are
// bounded by the family size, which the caller keeps below 2^53, so the
// double conversion is exact.
double extension_count(int remaining, int budget) {
    if (budget < 0) return 0;
    __int128 total = 0, term = 1;
    for (int i = 0; i <= std::min(budget, remaining); ++i) {
        total += term;
        term = term * (remaining - i) / (i + 1);
    }
    return double((long long)total);
}

struct GroupKey {
    Bits version;
    int flips_used = 0;
    bool operator==(const GroupKey&) const = default;
};

struct GroupKeyHash {
    size_t operator()(const GroupKey& k) const {
        return BitsHash{}(k.version) * 1000003u + size_t(k.flips_used);
    }
};

}  // namespace

WmExpertsResult wm_experts_grouped(const HypothesisClass& cls,
                                   const std::vector<LabeledExample>& stream, AttackOracle& oracle,
                                   double eta) {
    int horizon = int(stream.size());
    if (horizon < 1) throw Error("wm_experts_grouped: empty stream");
    auto cache = make_lit_cache(cls);
    int max_flips = cache->lit(cls.full_version());
    long long count = expert_family_size(max_flips, horizon);
    if (count > (1ll << 53))
        throw ScaleCapError("wm_experts_grouped: family size above 2^53 breaks exact multiplicities");

    WmExpertsResult out;
    out.family_size = count;
    out.eta = eta >= 0 ? eta : default_eta(std::log(double(count)), horizon);
    if (!(out.eta >= 0 && out.eta < 1)) throw Error("wm_experts_grouped: eta must lie in [0, 1)");

    // states[i] = (key, summed weight of the fire prefixes living there);
    // insertion order is kept so float accumulation is reproducible.
    std::vector<std::pair<GroupKey, double>> states;
    std::unordered_map<GroupKey, int, GroupKeyHash> index;
    auto add_weight = [&](const GroupKey& key, double w) {
        auto [it, fresh] = index.try_emplace(key, int(states.size()));
        if (fresh) states.push_back({key, 0.0});
        states[size_t(it->second)].second += w;
    };
    add_weight({cls.full_version(), 0}, 1.0);
    double flagged_weight = 0;  // extension multiplicities already folded in
    int local = 0;

    auto total_weight = [&]() {
        double total = flagged_weight;
        for (const auto& [key, w] : states)
            total += w * extension_count(horizon - local, max_flips - key.flips_used);
        return total;
    };
    auto build_vote = [&]() {
        double total = total_weight();
        std::vector<Label> table(cls.instances());
        for (int x = 0; x < cls.instances(); ++x) {
            double sum = flagged_weight;
            for (const auto& [key, w] : states) {
                double fire = extension_count(horizon - local - 1, max_flips - key.flips_used - 1);
                double stay = extension_count(horizon - local - 1, max_flips - key.flips_used);
                sum += w * (stay - fire) * soa_vote(cls, *cache, key.version, x);
            }
            table[x] = sum >= 0 ? +1 : -1;  // tie -> +1
        }
        uint64_t salt = std::bit_cast<uint64_t>(total) ^ (uint64_t(local) * 0x9e3779b97f4a7c15ull);
        return Predictor::table(std::move(table), PredictorKind::WeightedMajority, salt);
    };

    Predictor vote = build_vote();
    for (int t = 0; t < horizon; ++t) {
        out.round_votes.push_back(vote);
        const auto& ex = stream[t];
        auto resp = oracle.query(vote, ex);
        ++out.queries;
        if (resp.robustly_correct) continue;
        int z = resp.z;
        double before = total_weight();
        ++local;
        std::vector<std::pair<GroupKey, double>> prior;
        prior.swap(states);
        index.clear();
        // Flagged experts predicted +1 this round; newly flagged ones joined
        // after predicting, so their update is already in `moved`.
        if (+1 != ex.y) flagged_weight *= out.eta;
        for (const auto& [key, w] : prior) {
            Label base = soa_vote(cls, *cache, key.version, z);
            // Branch 1: experts whose tuple skips this round.
            {
                double moved = w * (base != ex.y ? out.eta : 1.0);
                Bits next = cls.restrict(key.version, z, base);
                if (next.none())
                    flagged_weight +=
                        moved * extension_count(horizon - local, max_flips - key.flips_used);
                else
                    add_weight({std::move(next), key.flips_used}, moved);
            }
            // Branch 2: experts firing a flip now.
            if (key.flips_used < max_flips) {
                Label mine = Label(-base);
                double moved = w * (mine != ex.y ? out.eta : 1.0);
                Bits next = cls.restrict(key.version, z, mine);
                if (next.none())
                    flagged_weight +=
                        moved * extension_count(horizon - local, max_flips - key.flips_used - 1);
                else
                    add_weight({std::move(next), key.flips_used + 1}, moved);
            }
        }
        double after = total_weight();
        if (contraction_violated(after, before, out.eta))
            throw ContractViolationError(
                "wm_experts_grouped: total weight failed to contract on a counterexample round");
        out.mistakes.push_back({t, z, ex.y});
        out.counterexamples.push_back({z, ex.y});
        vote = build_vote();
    }
    return out;
}

ExpertSpec tracking_spec(const HypothesisClass& cls, LitCache& cache,
                         const std::vector<std::pair<int, Label>>& counterexamples, int row) {
    if (row < 0 || row >= cls.size()) throw Error("tracking_spec: row out of range");
    ExpertSpec spec;
    Bits version = cls.full_version();
    int local = 0;
    for (const auto& [z, y] : counterexamples) {
        (void)y;
        ++local;
        Label target = cls.label(row, z);
        if (soa_vote(cls, cache, version, z) != target) spec.flips.push_back(local);
        version = cls.restrict(version, z, target);
        if (version.none())
            throw ContractViolationError("tracking_spec: tracked row left the version space");
    }
    if (int(spec.flips.size()) > cache.lit(cls.full_version()))
        throw ContractViolationError("tracking_spec: more flips than the mistake bound allows");
    return spec;
}

OnlineToBatchResult online_to_batch(const HypothesisClass& cls, const FiniteDistribution& dist,
                                    const PerturbationSet& u, AttackOracle& oracle, int m, Rng& rng,
                                    double eta, long long family_cap) {
    if (m < 1) throw Error("online_to_batch: m must be at least 1");
    (void)family_cap;  // the grouped game never materializes the family
    std::vector<LabeledExample> stream = sample_iid(dist, m, rng);
    WmExpertsResult run = wm_experts_grouped(cls, stream, oracle, eta);

    OnlineToBatchResult out;
    out.prefix_predictors = run.round_votes;
    // identical tables share one exact risk evaluation
    std::map<std::vector<Label>, int> occurrences;
    for (const auto& pred : out.prefix_predictors) ++occurrences[pred.truth_table()];
    double total = 0;
    for (const auto& [table, times] : occurrences) {
        Predictor p = Predictor::table(table);
        total += robust_risk(p, dist, u) * times;
    }
    out.mixture_risk = total / m;
    out.opt_risk = opt_robust_risk(cls, dist, u).risk;
    out.run = std::move(run);
    return out;
}

}  // namespace upset
