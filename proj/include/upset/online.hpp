#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "upset/perturb.hpp"
#include "upset/universe.hpp"

namespace upset {

// Sequential learner over instance indices. Conservative learners leave their
// predictor untouched on rounds where the prediction was correct.
class OnlineLearner {
  public:
    virtual ~OnlineLearner() = default;
    virtual Label predict(int x) const = 0;
    virtual Predictor current_predictor() const = 0;
    virtual void observe(const LabeledExample& ex) = 0;
    virtual bool version_space_empty() const = 0;
    virtual int updates() const = 0;
    // Worst-case mistake bound on realizable sequences.
    virtual int mistake_bound() const = 0;
    virtual bool conservative() const = 0;
};

using LearnerFactory = std::function<std::unique_ptr<OnlineLearner>()>;

// Standard optimal algorithm: predict the label whose restricted version
// space has the deeper mistake tree, tie -> +1. Updates restrict the version
// space by the revealed label; conservative by default. If the version space
// empties the learner is flagged and predicts +1 from then on.
class SoaLearner final : public OnlineLearner {
  public:
    SoaLearner(const HypothesisClass& cls, std::shared_ptr<LitCache> cache,
               bool update_on_correct = false);

    Label predict(int x) const override;
    Predictor current_predictor() const override;
    void observe(const LabeledExample& ex) override;
    bool version_space_empty() const override { return empty_; }
    int updates() const override { return updates_; }
    int mistake_bound() const override { return full_lit_; }
    bool conservative() const override { return !update_on_correct_; }

    const Bits& version_space() const { return version_; }

  private:
    const HypothesisClass* cls_;
    std::shared_ptr<LitCache> cache_;
    Bits version_;
    bool update_on_correct_ = false;
    bool empty_ = false;
    int updates_ = 0;
    int full_lit_ = 0;
};

// Shared cache helper so callers can reuse one memo per class.
std::shared_ptr<LitCache> make_lit_cache(const HypothesisClass& cls);

// The SOA vote at x for a nonempty version space: side with the deeper
// mistake tree, tie -> +1, one-sided version spaces forced.
Label soa_vote(const HypothesisClass& cls, LitCache& cache, const Bits& version, int x);

struct MistakeRecord {
    int length = 0;
    std::vector<int> mistake_rounds;  // 0-based
    Predictor final_predictor;
    bool version_space_emptied = false;
    int mistakes() const { return int(mistake_rounds.size()); }
};

// Feeds the sequence through the learner, checking the conservative contract
// (truth table unchanged on correct rounds).
MistakeRecord run_sequence(OnlineLearner& learner, const std::vector<LabeledExample>& sequence);

}  // namespace upset
