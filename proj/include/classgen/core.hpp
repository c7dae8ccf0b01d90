#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "classgen/errors.hpp"
#include "classgen/rng.hpp"

namespace classgen {

/// One labeled example. `attribute` is the optional sensitive attribute used
/// by the attribute-generalization analysis.
struct Example {
    std::vector<double> features;
    int label = 0;
    std::optional<int> attribute;
};

/// A (minus, plus) pair of the super-sample grid. Index 0 of a pair is
/// "minus", index 1 is "plus"; masks reference this convention everywhere.
struct ExamplePair {
    Example minus;
    Example plus;
};

/// The 2n-example grid arranged as n (minus, plus) pairs. The mask picks one
/// element of each pair for training; the other one is held out.
struct SuperSample {
    std::vector<ExamplePair> pairs;
    int num_classes = 0;
    int dimension = 0;

    std::size_t n() const { return pairs.size(); }

    void validate() const {
        if (pairs.empty()) throw std::invalid_argument("SuperSample: needs at least one pair");
        for (const auto& p : pairs) {
            for (const Example* e : {&p.minus, &p.plus}) {
                if (static_cast<int>(e->features.size()) != dimension)
                    throw std::invalid_argument("SuperSample: feature dimension mismatch");
                if (e->label < 0 || e->label >= num_classes)
                    throw std::invalid_argument("SuperSample: label out of range");
            }
        }
    }
};

/// Builds a super-sample from 2n examples laid out as
/// (minus_0, plus_0, minus_1, plus_1, ...).
inline SuperSample make_supersample(std::span<const Example> examples, int num_classes) {
    if (examples.size() < 2 || examples.size() % 2 != 0)
        throw std::invalid_argument("make_supersample: needs an even, positive example count");
    SuperSample ss;
    ss.num_classes = num_classes;
    ss.dimension = static_cast<int>(examples[0].features.size());
    ss.pairs.reserve(examples.size() / 2);
    for (std::size_t i = 0; i + 1 < examples.size(); i += 2)
        ss.pairs.push_back({examples[i], examples[i + 1]});
    ss.validate();
    return ss;
}

/// Rademacher selection vector U in {-1,+1}^n. entry +1 selects the plus
/// element of the pair for training, -1 the minus element.
struct Mask {
    std::vector<int> entries;

    std::size_t n() const { return entries.size(); }

    Mask flipped() const {
        Mask m = *this;
        for (int& e : m.entries) e = -e;
        return m;
    }
};

/// Draws n independent Rademacher entries. Deterministic given the seed.
inline Mask draw_mask(std::size_t n, Seed seed) {
    if (n == 0) throw std::invalid_argument("draw_mask: n must be >= 1");
    Rng rng(seed);
    Mask m;
    m.entries.resize(n);
    for (auto& e : m.entries) e = rng.rademacher();
    return m;
}

/// Splits a super-sample by a mask: train[i] is the element mask[i] selects,
/// test[i] is the complementary one. Both lists have length n.
inline std::pair<std::vector<Example>, std::vector<Example>> split(const SuperSample& ss,
                                                                   const Mask& mask) {
    if (mask.n() != ss.n())
        throw std::invalid_argument("split: mask length " + std::to_string(mask.n()) +
                                    " != super-sample pairs " + std::to_string(ss.n()));
    std::vector<Example> train, test;
    train.reserve(ss.n());
    test.reserve(ss.n());
    for (std::size_t i = 0; i < ss.n(); ++i) {
        const auto& p = ss.pairs[i];
        if (mask.entries[i] == +1) {
            train.push_back(p.plus);
            test.push_back(p.minus);
        } else {
            train.push_back(p.minus);
            test.push_back(p.plus);
        }
    }
    return {std::move(train), std::move(test)};
}

/// Occurrence counts of one class inside a super-sample. n_y_half is the
/// normalizer n^y of the class-generalization error, estimated as half the
/// number of label-y entries among the 2n grid examples; it may be
/// non-integer.
struct ClassStats {
    int class_id = 0;
    int n_y_super = 0;
    double n_y_half = 0.0;
};

inline ClassStats class_stats(const SuperSample& ss, int y) {
    if (y < 0 || y >= ss.num_classes)
        throw std::invalid_argument("class_stats: class id out of range");
    ClassStats s;
    s.class_id = y;
    for (const auto& p : ss.pairs) {
        if (p.minus.label == y) ++s.n_y_super;
        if (p.plus.label == y) ++s.n_y_super;
    }
    s.n_y_half = static_cast<double>(s.n_y_super) / 2.0;
    return s;
}

/// Predictions and losses of one trained model on both halves of every pair
/// of one super-sample, for one mask draw.
struct TrialRecord {
    int supersample_id = 0;
    int mask_id = 0;
    Mask mask;
    std::vector<int> pred_minus;      // predicted label on the minus element
    std::vector<int> pred_plus;       // predicted label on the plus element
    std::vector<double> loss_minus;   // loss in [0,1] on the minus element
    std::vector<double> loss_plus;    // loss in [0,1] on the plus element
    std::vector<int> label_minus;     // true labels, copied from the super-sample
    std::vector<int> label_plus;
    std::optional<int> model_id;      // hypothesis index for finite learners

    std::size_t n() const { return mask.n(); }

    /// Delta_y L_i = 1{y_minus=y} loss_minus - 1{y_plus=y} loss_plus,
    /// a scalar in [-1,1] ({-1,0,1} under zero-one loss).
    double delta_l(int y, std::size_t i) const {
        const double a = (label_minus[i] == y) ? loss_minus[i] : 0.0;
        const double b = (label_plus[i] == y) ? loss_plus[i] : 0.0;
        return a - b;
    }
};

}  // namespace classgen
