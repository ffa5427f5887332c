#include "upset/online.hpp"

namespace upset {

std::shared_ptr<LitCache> make_lit_cache(const HypothesisClass& cls) {
    return std::make_shared<LitCache>(cls);
}

SoaLearner::SoaLearner(const HypothesisClass& cls, std::shared_ptr<LitCache> cache,
                       bool update_on_correct)
    : cls_(&cls),
      cache_(std::move(cache)),
      version_(cls.full_version()),
      update_on_correct_(update_on_correct) {
    if (!cache_ || &cache_->cls() != cls_)
        throw ScaleCapError("lit cache must belong to the learner's class");
    full_lit_ = cache_->lit(version_);
}

Label soa_vote(const HypothesisClass& cls, LitCache& cache, const Bits& version, int x) {
    Bits pos = cls.restrict(version, x, +1);
    Bits neg = version.and_not(pos);
    if (pos.none()) return -1;
    if (neg.none()) return +1;
    int dp = cache.lit(pos);
    int dn = cache.lit(neg);
    return dp >= dn ? +1 : -1;  // tie -> +1
}

Label SoaLearner::predict(int x) const {
    if (empty_) return +1;
    return soa_vote(*cls_, *cache_, version_, x);
}

Predictor SoaLearner::current_predictor() const {
    std::vector<Label> table(cls_->instances());
    for (int x = 0; x < cls_->instances(); ++x) table[x] = predict(x);
    return Predictor::table(std::move(table), PredictorKind::OnlineState);
}

void SoaLearner::observe(const LabeledExample& ex) {
    check_label(ex.y);
    if (empty_) return;
    if (!update_on_correct_ && predict(ex.x) == ex.y) return;
    Bits next = cls_->restrict(version_, ex.x, ex.y);
    ++updates_;
    if (next.none()) {
        empty_ = true;
        return;
    }
    version_ = std::move(next);
}

MistakeRecord run_sequence(OnlineLearner& learner, const std::vector<LabeledExample>& sequence) {
    MistakeRecord rec;
    rec.length = int(sequence.size());
    for (int t = 0; t < int(sequence.size()); ++t) {
        const auto& ex = sequence[t];
        Label guess = learner.predict(ex.x);
        Predictor before = learner.current_predictor();
        learner.observe(ex);
        if (guess != ex.y) {
            rec.mistake_rounds.push_back(t);
        } else if (learner.conservative() && !(learner.current_predictor() == before)) {
            throw ContractViolationError("conservative learner changed on a correct round");
        }
    }
    rec.final_predictor = learner.current_predictor();
    rec.version_space_emptied = learner.version_space_empty();
    return rec;
}

}  // namespace upset
