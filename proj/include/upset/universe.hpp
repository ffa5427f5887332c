#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "upset/bits.hpp"
#include "upset/errors.hpp"
#include "upset/rng.hpp"

namespace upset {

using Label = int;  // +1 or -1

inline void check_label(Label y) {
    if (y != 1 && y != -1) throw ScaleCapError("label must be +1 or -1");
}

// Instances are indices 0..size-1.
struct InstanceSpace {
    int size = 0;
};

struct LabeledExample {
    int x = 0;
    Label y = 1;
    bool operator==(const LabeledExample&) const = default;
};

inline constexpr int kMaxInstances = 64;    // hypotheses are single-word bitmasks
inline constexpr int kMaxHypotheses = 4096;

// Finite hypothesis class over at most 64 instances. Row i's positive set is
// stored as a bitmask; duplicate rows are rejected.
class HypothesisClass {
  public:
    HypothesisClass(int instances, std::vector<uint64_t> positive_masks);

    static HypothesisClass from_rows(const std::vector<std::vector<Label>>& rows);

    int instances() const { return instances_; }
    int size() const { return int(masks_.size()); }
    Label label(int row, int x) const { return (masks_[row] >> x) & 1u ? +1 : -1; }
    uint64_t positive_mask(int row) const { return masks_[row]; }
    std::vector<Label> row_labels(int row) const;

    // Rows of the given version space whose label at x equals y.
    Bits restrict(const Bits& version, int x, Label y) const;
    Bits full_version() const { return Bits(size(), true); }

  private:
    int instances_ = 0;
    std::vector<uint64_t> masks_;
    std::vector<Bits> column_;  // column_[x] = rows positive at x
};

// Atoms are distinct (x,y) pairs with positive probability summing to 1.
class FiniteDistribution {
  public:
    struct Atom {
        LabeledExample example;
        double prob = 0;
    };

    explicit FiniteDistribution(std::vector<Atom> atoms, int instances);

    const std::vector<Atom>& atoms() const { return atoms_; }
    int instances() const { return instances_; }

    LabeledExample sample(Rng& rng) const;

  private:
    std::vector<Atom> atoms_;
    std::vector<double> cumulative_;
    int instances_ = 0;
};

std::vector<LabeledExample> sample_iid(const FiniteDistribution& dist, int m, Rng& rng);

struct DimensionReport {
    int vc = 0;
    int dual_vc = 0;
    int littlestone = 0;
    int threshold = 0;
};

// Shattering search over instance subsets, ascending with early exit.
int vc_dimension(const HypothesisClass& cls);

// VC dimension of the transposed class (hypotheses as points, instances as
// functions).
int dual_vc_dimension(const HypothesisClass& cls);

// Memoized cache for the mistake-tree recursion. Shareable across calls and
// threads; keyed on version-space bitsets of one fixed class.
class LitCache {
  public:
    explicit LitCache(const HypothesisClass& cls) : cls_(&cls) {}

    // Depth of the deepest mistake tree realizable by the version space:
    // lit(V) = max over x splitting V both ways of 1 + min(lit(V+), lit(V-)).
    int lit(const Bits& version);

    const HypothesisClass& cls() const { return *cls_; }

  private:
    int lit_locked(const Bits& version);
    const HypothesisClass* cls_;
    std::unordered_map<Bits, int, BitsHash> memo_;
    std::mutex mu_;
};

int littlestone_dimension(const HypothesisClass& cls);

// Largest k admitting x_1..x_k and h_1..h_k with h_i(x_j) = +1 iff j <= i.
int threshold_dimension(const HypothesisClass& cls);

DimensionReport dimension_report(const HypothesisClass& cls);

// h_i(x_j) = +1 iff j <= i, for i,j in 1..n.
HypothesisClass make_threshold_class(int n);

HypothesisClass transpose_class(const HypothesisClass& cls);

}  // namespace upset
