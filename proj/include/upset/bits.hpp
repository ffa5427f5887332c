#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

namespace upset {

// Fixed-width bitset sized at construction. Used for hypothesis subsets
// (version spaces) and for error patterns over a predictor pool.
class Bits {
  public:
    Bits() = default;
    explicit Bits(int size, bool fill = false)
        : size_(size), words_((size + 63) / 64, fill ? ~0ull : 0ull) {
        trim();
    }

    int size() const { return size_; }

    bool test(int i) const { return (words_[i >> 6] >> (i & 63)) & 1u; }
    void set(int i) { words_[i >> 6] |= 1ull << (i & 63); }
    void reset(int i) { words_[i >> 6] &= ~(1ull << (i & 63)); }

    int count() const {
        int c = 0;
        for (uint64_t w : words_) c += std::popcount(w);
        return c;
    }
    bool any() const {
        for (uint64_t w : words_) if (w) return true;
        return false;
    }
    bool none() const { return !any(); }

    // First set bit, -1 if empty.
    int first() const {
        for (size_t k = 0; k < words_.size(); ++k)
            if (words_[k]) return int(k * 64 + std::countr_zero(words_[k]));
        return -1;
    }

    Bits operator&(const Bits& o) const {
        Bits r(size_);
        for (size_t k = 0; k < words_.size(); ++k) r.words_[k] = words_[k] & o.words_[k];
        return r;
    }
    Bits and_not(const Bits& o) const {
        Bits r(size_);
        for (size_t k = 0; k < words_.size(); ++k) r.words_[k] = words_[k] & ~o.words_[k];
        return r;
    }
    bool operator==(const Bits& o) const { return size_ == o.size_ && words_ == o.words_; }

    bool is_subset_of(const Bits& o) const {
        for (size_t k = 0; k < words_.size(); ++k)
            if (words_[k] & ~o.words_[k]) return false;
        return true;
    }

    uint64_t hash() const {
        uint64_t h = 1469598103934665603ull;
        for (uint64_t w : words_) {
            h ^= w;
            h *= 1099511628211ull;
        }
        return h ^ uint64_t(size_);
    }

    const std::vector<uint64_t>& words() const { return words_; }

  private:
    void trim() {
        if (size_ & 63) words_.back() &= (~0ull) >> (64 - (size_ & 63));
    }
    int size_ = 0;
    std::vector<uint64_t> words_;
};

struct BitsHash {
    size_t operator()(const Bits& b) const { return size_t(b.hash()); }
};

}  // namespace upset
