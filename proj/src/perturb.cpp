#include "upset/perturb.hpp"

#include <algorithm>
#include <cmath>

namespace upset {

PerturbationSet::PerturbationSet(int instances, std::vector<std::vector<int>> sets)
    : instances_(instances), sets_(std::move(sets)) {
    if (instances_ < 1 || instances_ > kMaxInstances)
        throw ScaleCapError("perturbation set needs an instance space of size 1..64");
    if (int(sets_.size()) != instances_)
        throw ScaleCapError("perturbation set must cover every instance");
    for (auto& s : sets_) {
        std::sort(s.begin(), s.end());
        s.erase(std::unique(s.begin(), s.end()), s.end());
        for (int z : s)
            if (z < 0 || z >= instances_)
                throw ScaleCapError("perturbation outside the instance space");
    }
}

PerturbationSet PerturbationSet::identity(int instances) {
    std::vector<std::vector<int>> sets(instances);
    for (int x = 0; x < instances; ++x) sets[x] = {x};
    return PerturbationSet(instances, std::move(sets));
}

const std::vector<int>& PerturbationSet::at(int x) const {
    if (x < 0 || x >= instances_) throw ScaleCapError("perturbation lookup outside the space");
    return sets_[x];
}

bool PerturbationSet::contains(int x, int z) const {
    const auto& s = at(x);
    return std::binary_search(s.begin(), s.end(), z);
}

bool PerturbationSet::includes_self() const {
    for (int x = 0; x < instances_; ++x)
        if (!contains(x, x)) return false;
    return true;
}

namespace {

uint64_t fnv_bytes(const void* data, size_t len, uint64_t h) {
    const uint8_t* p = static_cast<const uint8_t*>(data);
    for (size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace

Predictor::Predictor(std::vector<Label> labels, PredictorKind kind, uint64_t salt)
    : labels_(std::move(labels)), kind_(kind) {
    if (labels_.empty() || int(labels_.size()) > kMaxInstances)
        throw ScaleCapError("predictor table must cover 1..64 instances");
    for (Label y : labels_) check_label(y);
    uint64_t h = 1469598103934665603ull ^ salt;
    for (Label y : labels_) {
        uint8_t b = y > 0 ? 1 : 0;
        h = fnv_bytes(&b, 1, h);
    }
    fingerprint_ = h;
}

Predictor Predictor::class_member(const HypothesisClass& cls, int row) {
    if (row < 0 || row >= cls.size()) throw ScaleCapError("class member row out of range");
    return Predictor(cls.row_labels(row), PredictorKind::ClassMember, 0);
}

Predictor Predictor::table(std::vector<Label> labels, PredictorKind kind, uint64_t salt) {
    return Predictor(std::move(labels), kind, salt);
}

Predictor Predictor::constant(Label y, int instances) {
    check_label(y);
    return Predictor(std::vector<Label>(instances, y), PredictorKind::Constant, 0);
}

Predictor Predictor::majority_vote(const std::vector<Predictor>& parts) {
    if (parts.empty()) throw ScaleCapError("majority vote needs at least one predictor");
    int n = parts[0].domain_size();
    std::vector<Label> labels(n);
    for (int x = 0; x < n; ++x) {
        int sum = 0;
        for (const auto& p : parts) {
            if (p.domain_size() != n) throw ScaleCapError("majority vote over mixed domains");
            sum += p(x);
        }
        labels[x] = sum >= 0 ? +1 : -1;  // tie -> +1
    }
    return Predictor(std::move(labels), PredictorKind::MajorityVote, 0);
}

Predictor Predictor::weighted_rows(const HypothesisClass& cls, const std::vector<double>& weights) {
    if (int(weights.size()) != cls.size())
        throw ScaleCapError("weighted majority needs one weight per row");
    std::vector<Label> labels(cls.instances());
    for (int x = 0; x < cls.instances(); ++x) {
        double sum = 0;
        for (int r = 0; r < cls.size(); ++r) sum += weights[r] * cls.label(r, x);
        labels[x] = sum >= 0 ? +1 : -1;  // tie -> +1
    }
    uint64_t salt = 0;
    for (double w : weights) salt = fnv_bytes(&w, sizeof w, salt ^ 0x9e3779b97f4a7c15ull);
    Predictor p(std::move(labels), PredictorKind::WeightedMajority, salt);
    return p;
}

void QueryLog::add(const Predictor& pred, const LabeledExample& ex, const OracleResponse& resp) {
    QueryRecord rec;
    rec.fingerprint = pred.fingerprint();
    rec.example = ex;
    rec.response = resp;
    if (capture_tables_) rec.table = pred.truth_table();
    entries_.push_back(std::move(rec));
    ++total_;
}

OracleResponse CanonicalOracle::query(const Predictor& pred, const LabeledExample& ex) {
    check_label(ex.y);
    for (int z : u_->at(ex.x))
        if (pred(z) != ex.y) return OracleResponse{false, z};
    return OracleResponse{true, -1};
}

OracleResponse LoggingOracle::query(const Predictor& pred, const LabeledExample& ex) {
    OracleResponse resp = inner_->query(pred, ex);
    log_->add(pred, ex, resp);
    return resp;
}

OracleResponse VerifyingOracle::query(const Predictor& pred, const LabeledExample& ex) {
    OracleResponse resp = inner_->query(pred, ex);
    if (resp.robustly_correct) {
        for (int z : u_->at(ex.x))
            if (pred(z) != ex.y)
                throw ContractViolationError("oracle claimed robust correctness over a misclassified member");
    } else {
        if (!u_->contains(ex.x, resp.z))
            throw ContractViolationError("oracle counterexample outside U(x)");
        if (pred(resp.z) == ex.y)
            throw ContractViolationError("oracle counterexample is not misclassified");
    }
    return resp;
}

int robust_loss(const Predictor& pred, const LabeledExample& ex, const PerturbationSet& u) {
    check_label(ex.y);
    for (int z : u.at(ex.x))
        if (pred(z) != ex.y) return 1;
    return 0;
}

double robust_risk(const Predictor& pred, const FiniteDistribution& dist, const PerturbationSet& u) {
    double risk = 0;
    for (const auto& atom : dist.atoms())
        if (robust_loss(pred, atom.example, u)) risk += atom.prob;
    return risk;
}

double empirical_robust_loss(const Predictor& pred, const std::vector<LabeledExample>& sample,
                             const PerturbationSet& u) {
    if (sample.empty()) throw ScaleCapError("empirical robust loss of an empty sample");
    int bad = 0;
    for (const auto& ex : sample) bad += robust_loss(pred, ex, u);
    return double(bad) / double(sample.size());
}

OptResult opt_robust_risk(const HypothesisClass& cls, const FiniteDistribution& dist,
                          const PerturbationSet& u) {
    OptResult best;
    best.risk = 2.0;
    for (int r = 0; r < cls.size(); ++r) {
        double risk = robust_risk(Predictor::class_member(cls, r), dist, u);
        if (risk < best.risk) {
            best.risk = risk;
            best.argmin_row = r;
        }
    }
    return best;
}

int opt_empirical_robust_count(const HypothesisClass& cls, const std::vector<LabeledExample>& sample,
                               const PerturbationSet& u) {
    int best = int(sample.size()) + 1;
    for (int r = 0; r < cls.size(); ++r) {
        Predictor p = Predictor::class_member(cls, r);
        int bad = 0;
        for (const auto& ex : sample) bad += robust_loss(p, ex, u);
        best = std::min(best, bad);
    }
    return best;
}

}  // namespace upset
