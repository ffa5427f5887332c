#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "upset/universe.hpp"

namespace upset {

// U maps each instance to a finite candidate set, stored sorted ascending and
// deduplicated. Sets may be empty unless an operation requires otherwise.
class PerturbationSet {
  public:
    PerturbationSet(int instances, std::vector<std::vector<int>> sets);

    static PerturbationSet identity(int instances);

    int instances() const { return instances_; }
    const std::vector<int>& at(int x) const;
    bool contains(int x, int z) const;

    // True iff z' in U(x) for every x (used by generators and checks).
    bool includes_self() const;

  private:
    int instances_ = 0;
    std::vector<std::vector<int>> sets_;
};

enum class PredictorKind {
    ClassMember,
    TableLookup,
    MajorityVote,
    WeightedMajority,
    Pattern,
    OnlineState,
    Constant,
};

// Evaluable +-1 rule over instance indices. All variants materialize a truth
// table at construction; the fingerprint hashes the table (and, for weighted
// majorities, the weights) so query logs stay replayable.
class Predictor {
  public:
    Predictor() = default;

    static Predictor class_member(const HypothesisClass& cls, int row);
    static Predictor table(std::vector<Label> labels, PredictorKind kind = PredictorKind::TableLookup,
                           uint64_t salt = 0);
    static Predictor constant(Label y, int instances);
    static Predictor majority_vote(const std::vector<Predictor>& parts);  // tie -> +1
    static Predictor weighted_rows(const HypothesisClass& cls, const std::vector<double>& weights);

    Label operator()(int x) const { return labels_[x]; }
    int domain_size() const { return int(labels_.size()); }
    const std::vector<Label>& truth_table() const { return labels_; }
    uint64_t fingerprint() const { return fingerprint_; }
    PredictorKind kind() const { return kind_; }

    bool operator==(const Predictor& o) const { return labels_ == o.labels_; }

  private:
    Predictor(std::vector<Label> labels, PredictorKind kind, uint64_t salt);
    std::vector<Label> labels_;
    PredictorKind kind_ = PredictorKind::TableLookup;
    uint64_t fingerprint_ = 0;
};

struct OracleResponse {
    bool robustly_correct = true;
    int z = -1;  // valid iff !robustly_correct
    bool operator==(const OracleResponse&) const = default;
};

struct QueryRecord {
    uint64_t fingerprint = 0;
    LabeledExample example;
    OracleResponse response;
    std::vector<Label> table;  // retained only when the log captures tables
};

// Single-writer log of oracle traffic.
class QueryLog {
  public:
    explicit QueryLog(bool capture_tables = false) : capture_tables_(capture_tables) {}

    void add(const Predictor& pred, const LabeledExample& ex, const OracleResponse& resp);
    long long total() const { return total_; }
    const std::vector<QueryRecord>& entries() const { return entries_; }
    bool captures_tables() const { return capture_tables_; }

  private:
    bool capture_tables_ = false;
    long long total_ = 0;
    std::vector<QueryRecord> entries_;
};

class AttackOracle {
  public:
    virtual ~AttackOracle() = default;
    virtual OracleResponse query(const Predictor& pred, const LabeledExample& ex) = 0;
};

// Perfect attack oracle with the fixed tie-break: scan U(x) in ascending
// instance order and return the first misclassified point.
class CanonicalOracle final : public AttackOracle {
  public:
    explicit CanonicalOracle(const PerturbationSet& u) : u_(&u) {}
    OracleResponse query(const Predictor& pred, const LabeledExample& ex) override;
    const PerturbationSet& perturbations() const { return *u_; }

  private:
    const PerturbationSet* u_;
};

// Forwards to another oracle and records each exchange.
class LoggingOracle final : public AttackOracle {
  public:
    LoggingOracle(AttackOracle& inner, QueryLog& log) : inner_(&inner), log_(&log) {}
    OracleResponse query(const Predictor& pred, const LabeledExample& ex) override;

  private:
    AttackOracle* inner_;
    QueryLog* log_;
};

// Re-checks every response as it is issued: counterexamples must be members
// of U(x) and misclassified; robust claims must have no misclassified member.
class VerifyingOracle final : public AttackOracle {
  public:
    VerifyingOracle(AttackOracle& inner, const PerturbationSet& u) : inner_(&inner), u_(&u) {}
    OracleResponse query(const Predictor& pred, const LabeledExample& ex) override;

  private:
    AttackOracle* inner_;
    const PerturbationSet* u_;
};

// sup over z in U(x) of the 0-1 error; empty U(x) incurs no loss.
int robust_loss(const Predictor& pred, const LabeledExample& ex, const PerturbationSet& u);

double robust_risk(const Predictor& pred, const FiniteDistribution& dist, const PerturbationSet& u);

double empirical_robust_loss(const Predictor& pred, const std::vector<LabeledExample>& sample,
                             const PerturbationSet& u);

struct OptResult {
    double risk = 0;
    int argmin_row = -1;
};

OptResult opt_robust_risk(const HypothesisClass& cls, const FiniteDistribution& dist,
                          const PerturbationSet& u);

// Minimum over rows of the number of sample points with robust loss 1.
int opt_empirical_robust_count(const HypothesisClass& cls, const std::vector<LabeledExample>& sample,
                               const PerturbationSet& u);

}  // namespace upset
