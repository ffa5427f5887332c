#include "upset/universe.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace upset {

namespace {

uint64_t splitmix64(uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

}  // namespace

int Rng::pick_weighted(const std::vector<double>& weights) {
    double total = 0;
    for (double w : weights) total += w;
    if (total <= 0) throw ScaleCapError("pick_weighted: nonpositive total weight");
    double u = next_unit() * total;
    double acc = 0;
    for (size_t i = 0; i < weights.size(); ++i) {
        acc += weights[i];
        if (u < acc) return int(i);
    }
    return int(weights.size()) - 1;
}

uint64_t derive_seed(uint64_t master, std::string_view scope, uint64_t index) {
    uint64_t h = 1469598103934665603ull;
    for (char c : scope) {
        h ^= uint64_t(uint8_t(c));
        h *= 1099511628211ull;
    }
    uint64_t s = splitmix64(master ^ h);
    s = splitmix64(s ^ index);
    return splitmix64(s);
}

HypothesisClass::HypothesisClass(int instances, std::vector<uint64_t> positive_masks)
    : instances_(instances), masks_(std::move(positive_masks)) {
    if (instances_ < 1 || instances_ > kMaxInstances)
        throw ScaleCapError("instance space size must be in 1..64");
    if (masks_.empty()) throw ScaleCapError("hypothesis class must be nonempty");
    if (int(masks_.size()) > kMaxHypotheses)
        throw ScaleCapError("hypothesis class exceeds the 4096-row cap");
    uint64_t domain = instances_ == 64 ? ~0ull : ((1ull << instances_) - 1);
    std::unordered_set<uint64_t> seen;
    for (uint64_t m : masks_) {
        if (m & ~domain) throw ScaleCapError("hypothesis mask uses instances outside the space");
        if (!seen.insert(m).second) throw ScaleCapError("duplicate hypothesis row");
    }
    column_.reserve(instances_);
    for (int x = 0; x < instances_; ++x) {
        Bits col(size());
        for (int r = 0; r < size(); ++r)
            if ((masks_[r] >> x) & 1u) col.set(r);
        column_.push_back(std::move(col));
    }
}

HypothesisClass HypothesisClass::from_rows(const std::vector<std::vector<Label>>& rows) {
    if (rows.empty()) throw ScaleCapError("hypothesis class must be nonempty");
    int n = int(rows[0].size());
    std::vector<uint64_t> masks;
    masks.reserve(rows.size());
    for (const auto& row : rows) {
        if (int(row.size()) != n) throw ScaleCapError("ragged hypothesis rows");
        uint64_t m = 0;
        for (int x = 0; x < n; ++x) {
            check_label(row[x]);
            if (row[x] > 0) m |= 1ull << x;
        }
        masks.push_back(m);
    }
    return HypothesisClass(n, std::move(masks));
}

std::vector<Label> HypothesisClass::row_labels(int row) const {
    std::vector<Label> out(instances_);
    for (int x = 0; x < instances_; ++x) out[x] = label(row, x);
    return out;
}

Bits HypothesisClass::restrict(const Bits& version, int x, Label y) const {
    return y > 0 ? version & column_[x] : version.and_not(column_[x]);
}

FiniteDistribution::FiniteDistribution(std::vector<Atom> atoms, int instances)
    : atoms_(std::move(atoms)), instances_(instances) {
    if (atoms_.empty()) throw ScaleCapError("distribution needs at least one atom");
    double total = 0;
    std::unordered_set<uint64_t> seen;
    for (const auto& a : atoms_) {
        check_label(a.example.y);
        if (a.example.x < 0 || a.example.x >= instances_)
            throw ScaleCapError("distribution atom outside the instance space");
        if (a.prob <= 0) throw ScaleCapError("atom probabilities must be positive");
        uint64_t key = uint64_t(a.example.x) << 1 | uint64_t(a.example.y > 0);
        if (!seen.insert(key).second) throw ScaleCapError("duplicate distribution atom");
        total += a.prob;
    }
    if (std::abs(total - 1.0) > 1e-12)
        throw ScaleCapError("atom probabilities must sum to 1");
    cumulative_.reserve(atoms_.size());
    double acc = 0;
    for (const auto& a : atoms_) {
        acc += a.prob;
        cumulative_.push_back(acc);
    }
    cumulative_.back() = 1.0;
}

LabeledExample FiniteDistribution::sample(Rng& rng) const {
    double u = rng.next_unit();
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    size_t i = size_t(it - cumulative_.begin());
    if (i >= atoms_.size()) i = atoms_.size() - 1;
    return atoms_[i].example;
}

std::vector<LabeledExample> sample_iid(const FiniteDistribution& dist, int m, Rng& rng) {
    if (m < 0) throw ScaleCapError("sample size must be nonnegative");
    std::vector<LabeledExample> out;
    out.reserve(m);
    for (int i = 0; i < m; ++i) out.push_back(dist.sample(rng));
    return out;
}

namespace {

// True iff the given instance subset is shattered: all 2^k sign patterns
// appear among the rows restricted to it.
bool shatters(const HypothesisClass& cls, const std::vector<int>& xs) {
    size_t k = xs.size();
    std::unordered_set<uint32_t> patterns;
    for (int r = 0; r < cls.size(); ++r) {
        uint32_t p = 0;
        uint64_t mask = cls.positive_mask(r);
        for (size_t j = 0; j < k; ++j)
            p |= uint32_t((mask >> xs[j]) & 1u) << j;
        patterns.insert(p);
        if (patterns.size() == (1u << k)) return true;
    }
    return false;
}

bool some_subset_shatters(const HypothesisClass& cls, int k, std::vector<int>& xs, int start) {
    if (int(xs.size()) == k) return shatters(cls, xs);
    for (int x = start; x < cls.instances(); ++x) {
        xs.push_back(x);
        if (some_subset_shatters(cls, k, xs, x + 1)) {
            xs.pop_back();
            return true;
        }
        xs.pop_back();
    }
    return false;
}

}  // namespace

int vc_dimension(const HypothesisClass& cls) {
    int cap = cls.instances();
    while ((1ll << cap) > cls.size() && cap > 0) --cap;  // need 2^k distinct rows
    int best = 0;
    for (int k = 1; k <= cap; ++k) {
        std::vector<int> xs;
        if (some_subset_shatters(cls, k, xs, 0)) best = k;
        else break;
    }
    return best;
}

HypothesisClass transpose_class(const HypothesisClass& cls) {
    // Dual point h becomes instance index; dual function g_x(h) = h(x).
    std::vector<uint64_t> masks;
    masks.reserve(cls.instances());
    std::unordered_set<uint64_t> seen;
    for (int x = 0; x < cls.instances(); ++x) {
        uint64_t m = 0;
        for (int r = 0; r < cls.size(); ++r)
            if (cls.label(r, x) > 0) m |= 1ull << r;
        if (seen.insert(m).second) masks.push_back(m);
    }
    if (cls.size() > kMaxInstances)
        throw ScaleCapError("transpose needs at most 64 hypotheses");
    return HypothesisClass(cls.size(), std::move(masks));
}

namespace {

// DFS over shattered column sets of the dual matrix. columns[i] is the dual
// point i's evaluation mask over the (at most 64) dual functions.
struct DualSearch {
    const std::vector<uint64_t>* columns;
    int functions;  // number of dual functions (original instances)
    int best = 0;

    bool set_shattered(const std::vector<int>& set) const {
        int k = int(set.size());
        uint64_t seen = 0;
        uint64_t want = k == 6 ? ~0ull : ((1ull << (1 << k)) - 1);
        for (int f = 0; f < functions; ++f) {
            uint32_t p = 0;
            for (int j = 0; j < k; ++j)
                p |= uint32_t(((*columns)[set[j]] >> f) & 1u) << j;
            seen |= 1ull << p;
            if (seen == want) return true;
        }
        return false;
    }

    void extend(std::vector<int>& set, int start, int cap) {
        best = std::max(best, int(set.size()));
        if (int(set.size()) == cap) return;
        for (int c = start; c < int(columns->size()); ++c) {
            set.push_back(c);
            if (set_shattered(set)) extend(set, c + 1, cap);
            set.pop_back();
        }
    }
};

}  // namespace

int dual_vc_dimension(const HypothesisClass& cls) {
    // Shattering k dual points needs 2^k distinct function patterns, and there
    // are only `instances` dual functions.
    int cap = 0;
    while ((1 << (cap + 1)) <= cls.instances() && cap + 1 <= 6) ++cap;
    if (cap == 0) return 0;
    std::vector<uint64_t> columns;  // per hypothesis: evaluation mask over instances
    columns.reserve(cls.size());
    for (int r = 0; r < cls.size(); ++r) columns.push_back(cls.positive_mask(r));
    DualSearch search{&columns, cls.instances(), 0};
    std::vector<int> set;
    search.extend(set, 0, cap);
    return search.best;
}

int LitCache::lit(const Bits& version) {
    std::lock_guard<std::mutex> lock(mu_);
    return lit_locked(version);
}

int LitCache::lit_locked(const Bits& version) {
    int count = version.count();
    if (count == 0) throw ScaleCapError("littlestone of empty version space");
    if (count == 1) return 0;
    auto it = memo_.find(version);
    if (it != memo_.end()) return it->second;
    int best = 0;
    for (int x = 0; x < cls_->instances(); ++x) {
        Bits pos = cls_->restrict(version, x, +1);
        if (pos.none() || pos.count() == count) continue;
        Bits neg = version.and_not(pos);
        int d = 1 + std::min(lit_locked(pos), lit_locked(neg));
        best = std::max(best, d);
    }
    memo_.emplace(version, best);
    return best;
}

int littlestone_dimension(const HypothesisClass& cls) {
    LitCache cache(cls);
    return cache.lit(cls.full_version());
}

namespace {

// Chain search: A = instances still labeled -1 by every chosen hypothesis,
// B = hypotheses labeling every chosen instance +1.
int threshold_chain(const HypothesisClass& cls, uint64_t inst_cand, const Bits& hyp_cand,
                    int depth, int& best) {
    int reachable = depth + std::min(std::popcount(inst_cand), hyp_cand.count());
    if (reachable <= best) return best;
    for (uint64_t rest = inst_cand; rest;) {
        int x = std::countr_zero(rest);
        rest &= rest - 1;
        Bits next_hyps = cls.restrict(hyp_cand, x, +1);
        if (next_hyps.none()) continue;
        // Any hypothesis in next_hyps works as h_{depth+1}; pick one to prune
        // the instance candidates, trying each distinct positive mask once.
        std::unordered_set<uint64_t> tried;
        for (int r = next_hyps.first(); r != -1;) {
            uint64_t mask = cls.positive_mask(r);
            if (tried.insert(mask).second) {
                uint64_t next_insts = inst_cand & ~mask & ~(1ull << x);
                best = std::max(best, depth + 1);
                threshold_chain(cls, next_insts, next_hyps, depth + 1, best);
            }
            // advance to next set row
            int nxt = -1;
            for (int i = r + 1; i < next_hyps.size(); ++i)
                if (next_hyps.test(i)) { nxt = i; break; }
            r = nxt;
        }
    }
    return best;
}

}  // namespace

int threshold_dimension(const HypothesisClass& cls) {
    uint64_t all = cls.instances() == 64 ? ~0ull : ((1ull << cls.instances()) - 1);
    int best = 0;
    threshold_chain(cls, all, cls.full_version(), 0, best);
    return best;
}

DimensionReport dimension_report(const HypothesisClass& cls) {
    DimensionReport r;
    r.vc = vc_dimension(cls);
    r.dual_vc = dual_vc_dimension(cls);
    r.littlestone = littlestone_dimension(cls);
    r.threshold = threshold_dimension(cls);
    if (r.vc > r.littlestone) throw ContractViolationError("vc exceeds littlestone");
    if (r.dual_vc >= (1ll << (r.vc + 1)))
        throw ContractViolationError("dual vc out of range");
    return r;
}

HypothesisClass make_threshold_class(int n) {
    if (n < 1 || n > kMaxInstances) throw ScaleCapError("threshold class size must be in 1..64");
    std::vector<uint64_t> masks;
    masks.reserve(n);
    for (int i = 1; i <= n; ++i)
        masks.push_back(i == 64 ? ~0ull : ((1ull << i) - 1));  // +1 on x_1..x_i
    return HypothesisClass(n, std::move(masks));
}

}  // namespace upset
