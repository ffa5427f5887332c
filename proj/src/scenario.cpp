#include "upset/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_set>

namespace upset {

namespace {

// Instances where the row is robustly correct against its own label.
std::vector<int> safe_instances(const HypothesisClass& cls, int row, const PerturbationSet& u) {
    Predictor h = Predictor::class_member(cls, row);
    std::vector<int> safe;
    for (int x = 0; x < cls.instances(); ++x) {
        if (robust_loss(h, {x, cls.label(row, x)}, u) == 0) safe.push_back(x);
    }
    return safe;
}

std::vector<int> pick_distinct(const std::vector<int>& from, int count, Rng& rng) {
    std::vector<int> shuffled = from;
    // Fisher-Yates driven by the shared rng so scenarios replay exactly.
    for (int i = int(shuffled.size()) - 1; i > 0; --i) {
        int j = int(rng.next_int(i + 1));
        std::swap(shuffled[i], shuffled[j]);
    }
    shuffled.resize(std::min<size_t>(count, shuffled.size()));
    std::sort(shuffled.begin(), shuffled.end());
    return shuffled;
}

std::vector<double> random_probs(int count, Rng& rng) {
    std::vector<double> p(count);
    double total = 0;
    for (double& v : p) {
        v = rng.next_unit() + 0.05;
        total += v;
    }
    for (double& v : p) v /= total;
    return p;
}

FiniteDistribution labeled_atoms(const HypothesisClass& cls, int row, const std::vector<int>& xs,
                                 double noise, Rng& rng) {
    std::vector<double> probs = random_probs(int(xs.size()), rng);
    std::vector<FiniteDistribution::Atom> atoms;
    for (size_t i = 0; i < xs.size(); ++i) {
        Label y = cls.label(row, xs[i]);
        if (noise > 0) {
            atoms.push_back({{xs[i], y}, probs[i] * (1 - noise)});
            atoms.push_back({{xs[i], Label(-y)}, probs[i] * noise});
        } else {
            atoms.push_back({{xs[i], y}, probs[i]});
        }
    }
    return FiniteDistribution(std::move(atoms), cls.instances());
}

void check_realizable(const Scenario& s) {
    if (opt_robust_risk(s.cls, s.dist, s.u).risk != 0)
        throw ContractViolationError("generated scenario is not robustly realizable");
}

}  // namespace

PerturbationSet neighbor_perturbation(int instances, int radius) {
    if (radius < 0) throw ScaleCapError("neighbor radius must be nonnegative");
    std::vector<std::vector<int>> sets(instances);
    for (int x = 0; x < instances; ++x) {
        int lo = std::max(0, x - radius);
        int hi = std::min(instances - 1, x + radius);
        for (int z = lo; z <= hi; ++z) sets[x].push_back(z);
    }
    return PerturbationSet(instances, std::move(sets));
}

Scenario thresholds_scenario(int n, int atoms, double noise, int radius, Rng& rng) {
    if (n < 2) throw ScaleCapError("thresholds scenario needs n >= 2");
    if (atoms < 1) throw ScaleCapError("scenario needs at least one atom");
    if (noise < 0 || noise >= 0.5) throw ScaleCapError("noise must lie in [0, 0.5)");
    HypothesisClass cls = make_threshold_class(n);
    PerturbationSet u = neighbor_perturbation(n, radius);

    std::vector<int> candidates;
    for (int r = 0; r < cls.size(); ++r) {
        if (int(safe_instances(cls, r, u).size()) >= 2) candidates.push_back(r);
    }
    if (candidates.empty()) throw NonRealizableError("no threshold row is robustly correct anywhere");
    int row = candidates[size_t(rng.next_int(int(candidates.size())))];
    std::vector<int> xs = pick_distinct(safe_instances(cls, row, u), atoms, rng);

    Scenario s{cls, std::move(u), labeled_atoms(cls, row, xs, noise, rng), "thresholds",
               noise == 0, row};
    if (s.realizable) check_realizable(s);
    return s;
}

Scenario random_scenario(int instances, int hypotheses, int atoms, double density, bool realizable,
                         Rng& rng) {
    if (instances < 1 || instances > kMaxInstances) throw ScaleCapError("bad instance count");
    if (hypotheses < 1 ||
        (instances < 12 && (int64_t(1) << instances) < hypotheses) ||
        hypotheses > kMaxHypotheses)
        throw ScaleCapError("hypothesis count not drawable over this instance space");
    uint64_t all = instances == 64 ? ~uint64_t(0) : (uint64_t(1) << instances) - 1;

    for (int attempt = 0; attempt < 100; ++attempt) {
        std::set<uint64_t> masks;
        for (int guard = 0; int(masks.size()) < hypotheses; ++guard) {
            if (guard > 200 * hypotheses) throw ScaleCapError("mask drawing stalled");
            masks.insert(rng.next_u64() & all);
        }
        HypothesisClass cls(instances, std::vector<uint64_t>(masks.begin(), masks.end()));

        std::vector<std::vector<int>> sets(instances);
        for (int x = 0; x < instances; ++x) {
            sets[x].push_back(x);
            for (int z = 0; z < instances; ++z)
                if (z != x && rng.next_unit() < density) sets[x].push_back(z);
        }
        PerturbationSet u(instances, std::move(sets));

        if (realizable) {
            int row = int(rng.next_int(cls.size()));
            std::vector<int> safe = safe_instances(cls, row, u);
            if (int(safe.size()) < 2) continue;
            std::vector<int> xs = pick_distinct(safe, atoms, rng);
            FiniteDistribution dist = labeled_atoms(cls, row, xs, 0, rng);
            Scenario s{std::move(cls), std::move(u), std::move(dist), "random", true, row};
            check_realizable(s);
            return s;
        }

        std::set<std::pair<int, Label>> pairs;
        int want = std::min(atoms, 2 * instances);
        for (int guard = 0; int(pairs.size()) < want; ++guard) {
            if (guard > 200 * want) break;
            pairs.insert({int(rng.next_int(instances)), rng.next_bool() ? +1 : -1});
        }
        std::vector<int> xs;
        std::vector<FiniteDistribution::Atom> raw;
        std::vector<double> probs = random_probs(int(pairs.size()), rng);
        size_t i = 0;
        for (const auto& [x, y] : pairs) raw.push_back({{x, y}, probs[i++]});
        Scenario s{std::move(cls), std::move(u),
                   FiniteDistribution(std::move(raw), instances), "random", false, -1};
        s.realizable = opt_robust_risk(s.cls, s.dist, s.u).risk == 0;
        return s;
    }
    throw NonRealizableError("could not draw a realizable random scenario");
}

Scenario cube_scenario(int k, int atoms, Rng& rng) {
    if (k < 1 || k > 12) throw ScaleCapError("cube scenario supports 1 <= k <= 12");
    std::vector<uint64_t> masks(size_t(1) << k);
    for (size_t m = 0; m < masks.size(); ++m) masks[m] = m;
    HypothesisClass cls(k, std::move(masks));
    PerturbationSet u = PerturbationSet::identity(k);

    int row = int(rng.next_int(cls.size()));
    std::vector<int> every(k);
    for (int x = 0; x < k; ++x) every[x] = x;
    std::vector<int> xs = pick_distinct(every, atoms, rng);

    FiniteDistribution dist = labeled_atoms(cls, row, xs, 0, rng);
    Scenario s{std::move(cls), std::move(u), std::move(dist), "cube", true, row};
    check_realizable(s);
    return s;
}

std::vector<Bits> brute_pattern_set(const std::vector<LabeledExample>& sample,
                                    const HypothesisPool& pool, const PerturbationSet& u) {
    std::vector<Bits> out;
    std::unordered_set<Bits, BitsHash> seen;
    for (const auto& ex : sample) {
        for (int z : u.at(ex.x)) {
            Bits pattern = pool_pattern(pool, z, ex.y);
            if (seen.insert(pattern).second) out.push_back(pattern);
        }
    }
    return out;
}

PoisonedSample poison_sample(const Scenario& scenario, int clean, int pairs, Rng& rng) {
    if (scenario.target_row < 0) throw ContractViolationError("poison sample needs a target row");
    if (!scenario.u.includes_self())
        throw ContractViolationError("poison pairs need x in U(x) to force one error per pair");
    std::vector<int> safe = safe_instances(scenario.cls, scenario.target_row, scenario.u);
    if (int(safe.size()) < pairs) throw ScaleCapError("not enough robustly correct instances for the pairs");

    PoisonedSample out;
    out.expected_opt = pairs;
    std::vector<int> pair_xs = pick_distinct(safe, pairs, rng);
    for (int x : pair_xs) {
        Label y = scenario.cls.label(scenario.target_row, x);
        out.sample.push_back({x, y});
        out.sample.push_back({x, Label(-y)});
    }
    for (int i = 0; i < clean; ++i) {
        int x = safe[size_t(rng.next_int(int(safe.size())))];
        out.sample.push_back({x, scenario.cls.label(scenario.target_row, x)});
    }
    return out;
}

std::vector<LabeledExample> realizable_sample(const Scenario& scenario, int m, Rng& rng) {
    if (!scenario.realizable)
        throw ContractViolationError("realizable_sample requires a realizable scenario");
    return sample_iid(scenario.dist, m, rng);
}

}  // namespace upset
