#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "classgen/core.hpp"
#include "classgen/errors.hpp"
#include "classgen/info.hpp"
#include "classgen/learners.hpp"

namespace classgen {

/// All trials of one super-sample draw, plus the draw's labels and class
/// counts. Mutual information is always estimated by pooling the trials of
/// one draw (the CMI is conditioned on the super-sample realization);
/// pooling across draws would mix different conditioning events.
struct DrawTrials {
    int supersample_id = 0;
    int num_classes = 0;
    std::vector<int> label_minus, label_plus;  // per pair
    std::vector<int> attr_minus, attr_plus;    // per pair, -1 when absent
    std::vector<ClassStats> stats;             // indexed by class id
    std::vector<TrialRecord> trials;
    LossKind loss_kind = LossKind::zero_one;

    std::size_t n_pairs() const { return label_minus.size(); }
};

inline DrawTrials make_draw_trials(const SuperSample& ss, std::vector<TrialRecord> trials,
                                   LossKind loss_kind, int supersample_id = 0) {
    DrawTrials d;
    d.supersample_id = supersample_id;
    d.num_classes = ss.num_classes;
    d.loss_kind = loss_kind;
    d.label_minus.reserve(ss.n());
    d.label_plus.reserve(ss.n());
    for (const auto& p : ss.pairs) {
        d.label_minus.push_back(p.minus.label);
        d.label_plus.push_back(p.plus.label);
        d.attr_minus.push_back(p.minus.attribute ? *p.minus.attribute : -1);
        d.attr_plus.push_back(p.plus.attribute ? *p.plus.attribute : -1);
    }
    for (int y = 0; y < ss.num_classes; ++y) d.stats.push_back(class_stats(ss, y));
    d.trials = std::move(trials);
    return d;
}

/// Per-pair disintegrated CMI estimates for one draw. mi_w is present only
/// when every trial carries a hypothesis index.
struct PairCmi {
    int pair = 0;
    double mi_f = 0.0;
    double mi_e = 0.0;
    double mi_delta = 0.0;
    std::optional<double> mi_w;
    int indicator_max = 0;
};

/// One class's estimates and bounds on one super-sample draw.
struct ClassBoundReport {
    int class_id = 0;
    double n_y_half = 0.0;
    bool skipped = false;  // class absent from this draw
    double gen_estimate = 0.0;
    double mc_stderr = 0.0;  // across this draw's mask trials
    std::optional<double> bound_class_cmi;
    double bound_f_cmi = 0.0;
    double bound_e_cmi = 0.0;
    double bound_delta_l_cmi = 0.0;
    std::vector<PairCmi> per_pair;
};

/// Across-draw aggregate for one class: means over the contributing draws,
/// spread measured across draws.
struct ClassAggregate {
    int class_id = 0;
    double n_y_half = 0.0;  // mean across contributing draws
    double gen_estimate = 0.0;
    double stderr_ = 0.0;    // sd of per-draw estimates / sqrt(#draws)
    double gen_std = 0.0;    // raw sd of per-draw estimates
    std::optional<double> bound_class_cmi;
    double bound_f_cmi = 0.0;
    double bound_e_cmi = 0.0;
    double bound_delta_l_cmi = 0.0;
    int draws_contributing = 0;
    int draws_skipped = 0;
};

namespace detail {

inline double mean(std::span<const double> xs) {
    double s = 0.0;
    for (double x : xs) s += x;
    return xs.empty() ? 0.0 : s / static_cast<double>(xs.size());
}

inline double sample_sd(std::span<const double> xs) {
    if (xs.size() < 2) return 0.0;
    const double m = mean(xs);
    double s = 0.0;
    for (double x : xs) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(xs.size() - 1));
}

/// Codes for the per-pair random variables whose CMI with the mask bit is
/// estimated. Zero-one losses are already discrete; continuous losses get
/// uniform bins ([0,1] per loss coordinate, [-1,1] for the difference).
struct PairCoder {
    LossKind loss_kind;
    int bins;
    int num_classes;

    int pred_pair_code(const TrialRecord& t, std::size_t i) const {
        return t.pred_minus[i] * num_classes + t.pred_plus[i];
    }
    int loss_code(double loss) const {
        if (loss_kind == LossKind::zero_one) return loss > 0.5 ? 1 : 0;
        return quantize_one(2.0 * loss - 1.0, bins);
    }
    int loss_pair_code(const TrialRecord& t, std::size_t i) const {
        const int width = (loss_kind == LossKind::zero_one) ? 2 : bins;
        return loss_code(t.loss_minus[i]) * width + loss_code(t.loss_plus[i]);
    }
    int delta_code(const TrialRecord& t, std::size_t i, int y) const {
        const double d = t.delta_l(y, i);
        if (loss_kind == LossKind::zero_one) return d < -0.5 ? 0 : (d > 0.5 ? 2 : 1);
        return quantize_one(d, bins);
    }
};

}  // namespace detail

/// Class-independent per-pair CMI estimates of one draw: model output pair
/// (f), loss pair (e), and hypothesis index (w) against the mask bit.
struct DrawPairMi {
    std::vector<double> mi_f;
    std::vector<double> mi_e;
    std::vector<std::optional<double>> mi_w;
};

inline DrawPairMi estimate_pair_mi(const DrawTrials& draw, int bins,
                                   MiCorrection correction = MiCorrection::none) {
    if (draw.trials.size() < 2)
        throw InsufficientSamples("MI estimation needs at least 2 mask draws per super-sample draw");
    const std::size_t n = draw.n_pairs();
    bool have_w = true;
    for (const auto& t : draw.trials) have_w = have_w && t.model_id.has_value();

    detail::PairCoder coder{draw.loss_kind, bins, draw.num_classes};
    DrawPairMi out;
    out.mi_f.resize(n);
    out.mi_e.resize(n);
    out.mi_w.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        JointCounts jf, je, jw;
        for (const auto& t : draw.trials) {
            const int u = t.mask.entries[i];
            jf.add(u, coder.pred_pair_code(t, i));
            je.add(u, coder.loss_pair_code(t, i));
            if (have_w) jw.add(u, *t.model_id);
        }
        out.mi_f[i] = plugin_mi(jf, correction);
        out.mi_e[i] = plugin_mi(je, correction);
        if (have_w) out.mi_w[i] = plugin_mi(jw, correction);
    }
    return out;
}

/// Computes one draw's report for every class: the class-generalization
/// estimate plus the class-CMI, class-f-CMI, class-e-CMI and class-dL-CMI
/// bound values and their per-pair terms.
inline std::vector<ClassBoundReport> compute_draw_reports(const DrawTrials& draw, int bins,
                                                          MiCorrection correction = MiCorrection::none) {
    const std::size_t n = draw.n_pairs();
    const std::size_t m = draw.trials.size();
    const DrawPairMi pair_mi = estimate_pair_mi(draw, bins, correction);
    detail::PairCoder coder{draw.loss_kind, bins, draw.num_classes};

    std::vector<ClassBoundReport> reports;
    reports.reserve(draw.num_classes);
    for (int y = 0; y < draw.num_classes; ++y) {
        ClassBoundReport r;
        r.class_id = y;
        r.n_y_half = draw.stats[y].n_y_half;
        if (draw.stats[y].n_y_super == 0) {
            r.skipped = true;
            reports.push_back(std::move(r));
            continue;
        }
        const double inv = 1.0 / r.n_y_half;

        // per-trial class-generalization value: (1/n_y_half) sum_i U_i dL_y_i
        std::vector<double> trial_values;
        trial_values.reserve(m);
        for (const auto& t : draw.trials) {
            double s = 0.0;
            for (std::size_t i = 0; i < n; ++i)
                s += static_cast<double>(t.mask.entries[i]) * t.delta_l(y, i);
            trial_values.push_back(inv * s);
        }
        r.gen_estimate = detail::mean(trial_values);
        r.mc_stderr = detail::sample_sd(trial_values) / std::sqrt(static_cast<double>(m));

        double sum_f = 0.0, sum_e = 0.0, sum_delta = 0.0, sum_w = 0.0;
        bool have_w = true;
        for (std::size_t i = 0; i < n; ++i) {
            PairCmi pc;
            pc.pair = static_cast<int>(i);
            pc.indicator_max =
                (draw.label_minus[i] == y || draw.label_plus[i] == y) ? 1 : 0;
            if (pc.indicator_max == 1) {
                pc.mi_f = pair_mi.mi_f[i];
                pc.mi_e = pair_mi.mi_e[i];
                pc.mi_w = pair_mi.mi_w[i];
                JointCounts jd;
                for (const auto& t : draw.trials) jd.add(t.mask.entries[i], coder.delta_code(t, i, y));
                pc.mi_delta = plugin_mi(jd, correction);
                sum_f += std::sqrt(2.0 * pc.mi_f);
                sum_e += std::sqrt(2.0 * pc.mi_e);
                sum_delta += std::sqrt(2.0 * pc.mi_delta);
                if (pc.mi_w)
                    sum_w += std::sqrt(2.0 * *pc.mi_w);
                else
                    have_w = false;
            }
            // pairs where neither label equals y contribute exactly 0: the
            // indicator kills the f/e/w terms and dL_y is identically 0
            r.per_pair.push_back(std::move(pc));
        }
        r.bound_f_cmi = inv * sum_f;
        r.bound_e_cmi = inv * sum_e;
        r.bound_delta_l_cmi = inv * sum_delta;
        if (have_w) r.bound_class_cmi = inv * sum_w;
        reports.push_back(std::move(r));
    }
    return reports;
}

/// Folds per-draw reports of one class into the across-draw aggregate.
/// Draws where the class is absent are counted as skipped, never averaged.
inline ClassAggregate aggregate_class(std::span<const ClassBoundReport> per_draw, int y) {
    ClassAggregate agg;
    agg.class_id = y;
    std::vector<double> gens, f, e, d, w, halves;
    bool have_w = true;
    for (const auto& r : per_draw) {
        if (r.class_id != y) continue;
        if (r.skipped) {
            ++agg.draws_skipped;
            continue;
        }
        ++agg.draws_contributing;
        gens.push_back(r.gen_estimate);
        f.push_back(r.bound_f_cmi);
        e.push_back(r.bound_e_cmi);
        d.push_back(r.bound_delta_l_cmi);
        halves.push_back(r.n_y_half);
        if (r.bound_class_cmi)
            w.push_back(*r.bound_class_cmi);
        else
            have_w = false;
    }
    if (agg.draws_contributing == 0)
        throw EmptyClass("class " + std::to_string(y) + " absent from every super-sample draw");
    agg.gen_estimate = detail::mean(gens);
    agg.gen_std = detail::sample_sd(gens);
    agg.stderr_ = agg.gen_std / std::sqrt(static_cast<double>(gens.size()));
    agg.bound_f_cmi = detail::mean(f);
    agg.bound_e_cmi = detail::mean(e);
    agg.bound_delta_l_cmi = detail::mean(d);
    if (have_w) agg.bound_class_cmi = detail::mean(w);
    agg.n_y_half = detail::mean(halves);
    return agg;
}

namespace detail {

inline std::vector<ClassBoundReport> reports_for_class(std::span<const DrawTrials> draws, int y,
                                                       int bins, MiCorrection correction) {
    std::vector<ClassBoundReport> out;
    for (const auto& d : draws) {
        auto all = compute_draw_reports(d, bins, correction);
        out.push_back(std::move(all[static_cast<std::size_t>(y)]));
    }
    return out;
}

}  // namespace detail

/// Super-sample-based class-generalization error: averages the per-trial
/// indicator-weighted loss gaps within each draw, then across draws.
/// Returns (estimate, stderr) with stderr = sd of draw means / sqrt(m1).
inline std::pair<double, double> class_gen_error(std::span<const DrawTrials> draws, int y) {
    if (draws.empty()) throw std::invalid_argument("class_gen_error: no draws");
    std::vector<double> per_draw;
    for (const auto& d : draws) {
        if (d.trials.empty()) throw std::invalid_argument("class_gen_error: draw without trials");
        if (y < 0 || y >= d.num_classes)
            throw std::invalid_argument("class_gen_error: class id out of range");
        if (d.stats[y].n_y_super == 0) continue;  // skipped draw, reported by aggregate callers
        const double inv = 1.0 / d.stats[y].n_y_half;
        double acc = 0.0;
        for (const auto& t : d.trials) {
            double s = 0.0;
            for (std::size_t i = 0; i < d.n_pairs(); ++i)
                s += static_cast<double>(t.mask.entries[i]) * t.delta_l(y, i);
            acc += inv * s;
        }
        per_draw.push_back(acc / static_cast<double>(d.trials.size()));
    }
    if (per_draw.empty())
        throw EmptyClass("class " + std::to_string(y) + " absent from every super-sample draw");
    return {detail::mean(per_draw),
            detail::sample_sd(per_draw) / std::sqrt(static_cast<double>(per_draw.size()))};
}

inline double class_f_cmi_bound(std::span<const DrawTrials> draws, int y, int bins = 21,
                                MiCorrection correction = MiCorrection::none) {
    return aggregate_class(detail::reports_for_class(draws, y, bins, correction), y).bound_f_cmi;
}

inline double class_delta_l_cmi_bound(std::span<const DrawTrials> draws, int y, int bins = 21,
                                      MiCorrection correction = MiCorrection::none) {
    return aggregate_class(detail::reports_for_class(draws, y, bins, correction), y)
        .bound_delta_l_cmi;
}

inline double class_e_cmi_bound(std::span<const DrawTrials> draws, int y, int bins = 21,
                                MiCorrection correction = MiCorrection::none) {
    return aggregate_class(detail::reports_for_class(draws, y, bins, correction), y).bound_e_cmi;
}

enum class BoundSelector { delta_l_cmi, f_cmi, e_cmi, class_cmi };

inline double selected_bound(const ClassAggregate& a, BoundSelector which) {
    switch (which) {
        case BoundSelector::delta_l_cmi: return a.bound_delta_l_cmi;
        case BoundSelector::f_cmi: return a.bound_f_cmi;
        case BoundSelector::e_cmi: return a.bound_e_cmi;
        case BoundSelector::class_cmi:
            if (!a.bound_class_cmi)
                throw std::invalid_argument("standard_gen_bound: class-CMI bound unavailable");
            return *a.bound_class_cmi;
    }
    throw std::invalid_argument("standard_gen_bound: unknown selector");
}

/// Class-weighted aggregation of per-class bounds into a standard
/// generalization bound. Weights must cover exactly the reported classes.
inline double standard_gen_bound(std::span<const ClassAggregate> reports,
                                 const std::map<int, double>& class_weights, BoundSelector which) {
    if (reports.size() != class_weights.size())
        throw std::invalid_argument("standard_gen_bound: weights do not match reported classes");
    double total = 0.0;
    for (const auto& r : reports) {
        const auto it = class_weights.find(r.class_id);
        if (it == class_weights.end())
            throw std::invalid_argument("standard_gen_bound: missing weight for class " +
                                        std::to_string(r.class_id));
        total += it->second * selected_bound(r, which);
    }
    return total;
}

/// Empirical class weights of a draw set: label frequency over all grid
/// entries of the contributing super-samples.
inline std::map<int, double> empirical_class_weights(std::span<const DrawTrials> draws) {
    std::map<int, double> counts;
    double total = 0.0;
    for (const auto& d : draws)
        for (int y = 0; y < d.num_classes; ++y) {
            counts[y] += d.stats[y].n_y_super;
            total += d.stats[y].n_y_super;
        }
    for (auto& [y, c] : counts) c /= total;
    return counts;
}

/// A subtask: a known subset of the classes with target weights over it.
struct SubtaskSpec {
    std::vector<int> classes;
    std::vector<double> weights;

    void validate() const {
        if (classes.empty()) throw std::invalid_argument("SubtaskSpec: class subset is empty");
        if (weights.size() != classes.size())
            throw std::invalid_argument("SubtaskSpec: weights length differs from class subset");
        double total = 0.0;
        for (double w : weights) {
            if (w <= 0.0) throw std::invalid_argument("SubtaskSpec: weights must be positive");
            total += w;
        }
        if (std::abs(total - 1.0) > 1e-12)
            throw std::invalid_argument("SubtaskSpec: weights must sum to 1");
        std::set<int> seen(classes.begin(), classes.end());
        if (seen.size() != classes.size())
            throw std::invalid_argument("SubtaskSpec: duplicate class in subset");
    }
};

/// Subtask estimates: Q_Y-weighted sums of the class-generalization error
/// and of each class bound over the subtask classes.
struct SubtaskReport {
    double gen_estimate = 0.0;
    double stderr_ = 0.0;  // from the weighted per-draw series
    double bound_delta_l_cmi = 0.0;
    double bound_f_cmi = 0.0;
    double bound_e_cmi = 0.0;
    std::optional<double> bound_class_cmi;
    // exact-instance baseline (filled only by the enumeration oracle)
    std::optional<double> baseline_bound;
    std::optional<double> baseline_distribution_kl;
    std::optional<double> baseline_weight_mi;
};

inline SubtaskReport subtask_report(std::span<const DrawTrials> draws, const SubtaskSpec& spec,
                                    int bins = 21, MiCorrection correction = MiCorrection::none) {
    spec.validate();
    std::vector<std::vector<ClassBoundReport>> all;  // [draw][class]
    all.reserve(draws.size());
    for (const auto& d : draws) all.push_back(compute_draw_reports(d, bins, correction));

    SubtaskReport rep;
    bool have_w = true;
    std::vector<double> per_draw_weighted(draws.size(), 0.0);
    for (std::size_t a = 0; a < spec.classes.size(); ++a) {
        const int y = spec.classes[a];
        const double q = spec.weights[a];
        std::vector<ClassBoundReport> per_draw;
        for (std::size_t k = 0; k < draws.size(); ++k) {
            if (y < 0 || y >= draws[k].num_classes || all[k][static_cast<std::size_t>(y)].skipped)
                throw EmptyClass("subtask class " + std::to_string(y) +
                                 " absent from a super-sample draw");
            per_draw.push_back(all[k][static_cast<std::size_t>(y)]);
            per_draw_weighted[k] += q * per_draw.back().gen_estimate;
        }
        const auto agg = aggregate_class(per_draw, y);
        rep.gen_estimate += q * agg.gen_estimate;
        rep.bound_delta_l_cmi += q * agg.bound_delta_l_cmi;
        rep.bound_f_cmi += q * agg.bound_f_cmi;
        rep.bound_e_cmi += q * agg.bound_e_cmi;
        if (agg.bound_class_cmi && have_w)
            rep.bound_class_cmi = rep.bound_class_cmi.value_or(0.0) + q * *agg.bound_class_cmi;
        else {
            have_w = false;
            rep.bound_class_cmi.reset();
        }
    }
    rep.stderr_ = detail::sample_sd(per_draw_weighted) /
                  std::sqrt(static_cast<double>(std::max<std::size_t>(per_draw_weighted.size(), 1)));
    return rep;
}

/// Attribute analysis on the sampled path: the class-generalization
/// machinery with indicators on the sensitive attribute t instead of the
/// label, normalized by half the attribute count.
struct AttributeReport {
    int attribute = 0;
    double n_t_half = 0.0;
    double gen_estimate = 0.0;
    double stderr_ = 0.0;
    double bound_delta_l_cmi = 0.0;  // dL-CMI-style bound with t-indicators
    int draws_contributing = 0;
    int draws_skipped = 0;
};

inline AttributeReport attribute_report(std::span<const DrawTrials> draws, int t, int bins = 21,
                                        MiCorrection correction = MiCorrection::none) {
    AttributeReport rep;
    rep.attribute = t;
    std::vector<double> gens, bounds, halves;
    for (const auto& d : draws) {
        const std::size_t n = d.n_pairs();
        int count = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (d.attr_minus[i] < 0 || d.attr_plus[i] < 0)
                throw std::invalid_argument("attribute_report: attribute missing on some examples");
            count += (d.attr_minus[i] == t) + (d.attr_plus[i] == t);
        }
        if (count == 0) {
            ++rep.draws_skipped;
            continue;
        }
        ++rep.draws_contributing;
        const double half = static_cast<double>(count) / 2.0;
        const double inv = 1.0 / half;
        if (d.trials.size() < 2)
            throw InsufficientSamples("attribute_report: needs at least 2 mask draws");
        detail::PairCoder coder{d.loss_kind, bins, d.num_classes};
        double acc = 0.0;
        for (const auto& trial : d.trials) {
            double s = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double a = (d.attr_minus[i] == t) ? trial.loss_minus[i] : 0.0;
                const double b = (d.attr_plus[i] == t) ? trial.loss_plus[i] : 0.0;
                s += static_cast<double>(trial.mask.entries[i]) * (a - b);
            }
            acc += inv * s;
        }
        gens.push_back(acc / static_cast<double>(d.trials.size()));

        double sum_terms = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (d.attr_minus[i] != t && d.attr_plus[i] != t) continue;  // dL_t identically 0
            JointCounts jd;
            for (const auto& trial : d.trials) {
                const double a = (d.attr_minus[i] == t) ? trial.loss_minus[i] : 0.0;
                const double b = (d.attr_plus[i] == t) ? trial.loss_plus[i] : 0.0;
                const double delta = a - b;
                int code;
                if (d.loss_kind == LossKind::zero_one)
                    code = delta < -0.5 ? 0 : (delta > 0.5 ? 2 : 1);
                else
                    code = quantize_one(delta, bins);
                jd.add(trial.mask.entries[i], code);
            }
            sum_terms += std::sqrt(2.0 * plugin_mi(jd, correction));
        }
        bounds.push_back(inv * sum_terms);
        halves.push_back(half);
    }
    if (rep.draws_contributing == 0)
        throw EmptyClass("attribute value " + std::to_string(t) + " absent from every draw");
    rep.gen_estimate = detail::mean(gens);
    rep.stderr_ = detail::sample_sd(gens) / std::sqrt(static_cast<double>(gens.size()));
    rep.bound_delta_l_cmi = detail::mean(bounds);
    rep.n_t_half = detail::mean(halves);
    return rep;
}

/// Recall/specificity view of binary zero-one runs: the positive class's
/// generalization gap is the recall gap, the negative class's is the
/// specificity gap. Each trial is re-derived from confusion-matrix counts
/// and cross-checked against the indicator-sum formula.
struct RecallSpecificity {
    double recall_gap = 0.0;
    double recall_stderr = 0.0;
    double specificity_gap = 0.0;
    double specificity_stderr = 0.0;
    double max_identity_residual = 0.0;  // worst per-trial |formula - confusion|
};

inline RecallSpecificity recall_specificity(std::span<const DrawTrials> draws, int positive_class) {
    RecallSpecificity out;
    for (const auto& d : draws) {
        if (d.num_classes != 2)
            throw Unsupported("recall_specificity: requires exactly 2 classes");
        if (d.loss_kind != LossKind::zero_one)
            throw Unsupported("recall_specificity: requires the zero-one loss");
        if (positive_class != 0 && positive_class != 1)
            throw std::invalid_argument("recall_specificity: positive class must be 0 or 1");
        for (int cls = 0; cls < 2; ++cls) {
            if (d.stats[cls].n_y_super == 0) continue;
            const double inv = 1.0 / d.stats[cls].n_y_half;
            for (const auto& t : d.trials) {
                // confusion-matrix route: count false predictions on class-cls
                // elements of the test half and of the train half
                long miss_test = 0, miss_train = 0;
                double formula = 0.0;
                for (std::size_t i = 0; i < d.n_pairs(); ++i) {
                    const bool plus_trains = t.mask.entries[i] == +1;
                    const int train_label = plus_trains ? d.label_plus[i] : d.label_minus[i];
                    const int test_label = plus_trains ? d.label_minus[i] : d.label_plus[i];
                    const int train_pred = plus_trains ? t.pred_plus[i] : t.pred_minus[i];
                    const int test_pred = plus_trains ? t.pred_minus[i] : t.pred_plus[i];
                    if (test_label == cls && test_pred != cls) ++miss_test;
                    if (train_label == cls && train_pred != cls) ++miss_train;
                    formula += static_cast<double>(t.mask.entries[i]) * t.delta_l(cls, i);
                }
                const double confusion = inv * static_cast<double>(miss_test - miss_train);
                out.max_identity_residual =
                    std::max(out.max_identity_residual, std::abs(confusion - inv * formula));
            }
        }
    }
    const auto [rg, rs] = class_gen_error(draws, positive_class);
    const auto [sg, ss] = class_gen_error(draws, 1 - positive_class);
    out.recall_gap = rg;
    out.recall_stderr = rs;
    out.specificity_gap = sg;
    out.specificity_stderr = ss;
    if (out.max_identity_residual > 1e-12)
        throw std::logic_error("recall_specificity: confusion-matrix identity violated, residual " +
                               std::to_string(out.max_identity_residual));
    return out;
}

}  // namespace classgen
