#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "classgen/bounds.hpp"
#include "classgen/core.hpp"
#include "classgen/errors.hpp"
#include "classgen/info.hpp"
#include "classgen/learners.hpp"
#include "classgen/rng.hpp"

namespace classgen {

/// One point of an enumerated finite input domain. The input id is the
/// point's index; features of the corresponding Example are just {id}.
struct DomainPoint {
    int label = 0;
    int attribute = -1;  // -1: no attribute
};

/// A finite instance on which every distribution is enumerable: a finite
/// input domain (optionally with a declared pmf), a finite-ERM learner, and
/// either a fixed super-sample realization or a number of pairs to take in
/// expectation over the pmf.
struct ExactInstance {
    std::vector<DomainPoint> domain;
    std::vector<double> pmf;  // empty: no distribution declared (fixed mode only)
    int n_pairs = 0;
    HypothesisTable hypotheses;
    LossKind loss_kind = LossKind::zero_one;
    int num_classes = 0;
    std::vector<int> fixed_supersample;  // 2n input ids, pair i = (ids[2i], ids[2i+1])
    double sigma = 0.5;

    bool has_pmf() const { return !pmf.empty(); }
    bool has_fixed_supersample() const { return !fixed_supersample.empty(); }

    void validate() const {
        if (domain.empty()) throw std::invalid_argument("ExactInstance: empty domain");
        if (n_pairs < 1) throw std::invalid_argument("ExactInstance: n_pairs must be >= 1");
        if (hypotheses.rows.empty()) throw std::invalid_argument("ExactInstance: no hypotheses");
        if (hypotheses.num_inputs() != static_cast<int>(domain.size()))
            throw std::invalid_argument("ExactInstance: hypothesis table does not cover the domain");
        for (const auto& row : hypotheses.rows)
            for (int lbl : row)
                if (lbl < 0 || lbl >= num_classes)
                    throw std::invalid_argument("ExactInstance: hypothesis label out of range");
        for (const auto& p : domain)
            if (p.label < 0 || p.label >= num_classes)
                throw std::invalid_argument("ExactInstance: domain label out of range");
        if (has_pmf()) {
            if (pmf.size() != domain.size())
                throw std::invalid_argument("ExactInstance: pmf length differs from domain");
            double total = 0.0;
            for (double p : pmf) {
                if (p < 0.0) throw std::invalid_argument("ExactInstance: negative pmf entry");
                total += p;
            }
            if (std::abs(total - 1.0) > 1e-12)
                throw std::invalid_argument("ExactInstance: pmf must sum to 1");
        }
        if (has_fixed_supersample()) {
            if (fixed_supersample.size() != static_cast<std::size_t>(2 * n_pairs))
                throw std::invalid_argument("ExactInstance: fixed super-sample needs 2*n_pairs ids");
            for (int id : fixed_supersample)
                if (id < 0 || id >= static_cast<int>(domain.size()))
                    throw std::invalid_argument("ExactInstance: super-sample id out of domain");
        } else if (!has_pmf()) {
            throw std::invalid_argument(
                "ExactInstance: needs a fixed super-sample or a declared pmf");
        }
        if (n_pairs > 20) throw Unsupported("ExactInstance: 2^n mask budget exceeded (n > 20)");
    }

    /// Work of the full-expectation oracle: |domain|^2n grids x 2^n masks.
    double expectation_states() const {
        return std::pow(static_cast<double>(domain.size()), 2.0 * static_cast<double>(n_pairs)) *
               std::ldexp(1.0, n_pairs);
    }

    LearnerSpec learner_spec() const {
        LearnerSpec spec;
        spec.kind = LearnerKind::finite_erm;
        spec.hypothesis_table = hypotheses;
        spec.loss.kind = loss_kind;
        return spec;
    }

    Example domain_example(int id) const {
        Example e;
        e.features = {static_cast<double>(id)};
        e.label = domain[static_cast<std::size_t>(id)].label;
        if (domain[static_cast<std::size_t>(id)].attribute >= 0)
            e.attribute = domain[static_cast<std::size_t>(id)].attribute;
        return e;
    }

    SuperSample fixed_supersample_grid() const {
        if (!has_fixed_supersample())
            throw std::invalid_argument("ExactInstance: no fixed super-sample");
        std::vector<Example> examples;
        examples.reserve(fixed_supersample.size());
        for (int id : fixed_supersample) examples.push_back(domain_example(id));
        return make_supersample(examples, num_classes);
    }
};

namespace detail {

/// Hypothesis loss on each domain point. Finite hypotheses emit one-hot
/// scores, so the clipped cross-entropy collapses to the zero-one values.
inline std::vector<std::vector<int>> hypothesis_losses(const ExactInstance& inst) {
    const int H = inst.hypotheses.size();
    const int D = static_cast<int>(inst.domain.size());
    std::vector<std::vector<int>> loss(H, std::vector<int>(D, 0));
    for (int h = 0; h < H; ++h)
        for (int d = 0; d < D; ++d)
            loss[h][d] = inst.hypotheses.rows[h][d] == inst.domain[d].label ? 0 : 1;
    return loss;
}

/// ERM over every ordered training tuple in the domain. Key digit i is the
/// input id trained at slot i; ties break to the lowest hypothesis index.
inline std::vector<int> erm_by_train_key(const ExactInstance& inst,
                                         const std::vector<std::vector<int>>& loss) {
    const int H = inst.hypotheses.size();
    const int D = static_cast<int>(inst.domain.size());
    const int n = inst.n_pairs;
    std::size_t keys = 1;
    for (int i = 0; i < n; ++i) keys *= static_cast<std::size_t>(D);
    std::vector<int> erm(keys, 0);
    std::vector<int> digits(n, 0);
    for (std::size_t key = 0; key < keys; ++key) {
        int best = 0;
        int best_risk = std::numeric_limits<int>::max();
        for (int h = 0; h < H; ++h) {
            int risk = 0;
            for (int i = 0; i < n; ++i) risk += loss[h][digits[i]];
            if (risk < best_risk) {
                best_risk = risk;
                best = h;
            }
        }
        erm[key] = best;
        for (int i = 0; i < n; ++i) {
            if (++digits[i] < D) break;
            digits[i] = 0;
        }
    }
    return erm;
}

/// Exact MI (nats) of a joint given by integer counts over (u, v): the
/// empirical law of exhaustively enumerated, equally weighted outcomes.
inline double mi_from_counts(std::span<const std::uint32_t> row_minus,
                             std::span<const std::uint32_t> row_plus) {
    std::uint64_t cu0 = 0, cu1 = 0, total = 0;
    for (std::uint32_t c : row_minus) cu0 += c;
    for (std::uint32_t c : row_plus) cu1 += c;
    total = cu0 + cu1;
    if (total == 0) return 0.0;
    const double n = static_cast<double>(total);
    double mi = 0.0;
    for (std::size_t v = 0; v < row_minus.size(); ++v) {
        const std::uint64_t cv = static_cast<std::uint64_t>(row_minus[v]) + row_plus[v];
        if (cv == 0) continue;
        if (row_minus[v] > 0 && cu0 > 0)
            mi += (row_minus[v] / n) *
                  std::log((static_cast<double>(row_minus[v]) * n) /
                           (static_cast<double>(cu0) * static_cast<double>(cv)));
        if (row_plus[v] > 0 && cu1 > 0)
            mi += (row_plus[v] / n) *
                  std::log((static_cast<double>(row_plus[v]) * n) /
                           (static_cast<double>(cu1) * static_cast<double>(cv)));
    }
    return std::max(mi, 0.0);
}

}  // namespace detail

/// Runs every mask of the fixed super-sample once, producing the exhaustive
/// DrawTrials. Bit i of the mask id set means U_i = +1. On this draw the
/// plug-in estimators coincide with the exact disintegrated quantities.
inline DrawTrials exhaustive_draw(const ExactInstance& inst) {
    inst.validate();
    if (!inst.has_fixed_supersample())
        throw std::invalid_argument("exhaustive_draw: instance has no fixed super-sample");
    const SuperSample grid = inst.fixed_supersample_grid();
    const int n = inst.n_pairs;
    const std::size_t num_masks = static_cast<std::size_t>(1) << n;
    const LearnerSpec spec = inst.learner_spec();

    std::vector<TrialRecord> trials;
    trials.reserve(num_masks);
    for (std::size_t mask_id = 0; mask_id < num_masks; ++mask_id) {
        Mask mask;
        mask.entries.resize(n);
        for (int i = 0; i < n; ++i) mask.entries[i] = (mask_id >> i) & 1 ? +1 : -1;
        auto [train_set, test_set] = split(grid, mask);
        const TrainedModel model = train(spec, train_set, inst.num_classes, /*seed=*/0);
        TrialRecord t;
        t.supersample_id = 0;
        t.mask_id = static_cast<int>(mask_id);
        t.mask = mask;
        t.model_id = model.hypothesis_index;
        t.pred_minus.resize(n);
        t.pred_plus.resize(n);
        t.loss_minus.resize(n);
        t.loss_plus.resize(n);
        t.label_minus.resize(n);
        t.label_plus.resize(n);
        for (int i = 0; i < n; ++i) {
            const auto& p = grid.pairs[i];
            t.pred_minus[i] = model.predict(p.minus.features);
            t.pred_plus[i] = model.predict(p.plus.features);
            t.loss_minus[i] = eval_loss(model, p.minus);
            t.loss_plus[i] = eval_loss(model, p.plus);
            t.label_minus[i] = p.minus.label;
            t.label_plus[i] = p.plus.label;
        }
        trials.push_back(std::move(t));
    }
    return make_draw_trials(grid, std::move(trials), inst.loss_kind);
}

/// Spec op: exact class-CMI bound of a fixed super-sample, from the
/// enumerated joint of (hypothesis index, U_i) per pair.
inline double class_cmi_bound(const ExactInstance& inst, int y) {
    const DrawTrials draw = exhaustive_draw(inst);
    const auto reports = compute_draw_reports(draw, /*bins=*/21, MiCorrection::none);
    const auto& r = reports.at(static_cast<std::size_t>(y));
    if (r.skipped) throw EmptyClass("class_cmi_bound: class absent from the super-sample");
    if (!r.bound_class_cmi) throw Unsupported("class_cmi_bound: learner is not finite");
    return *r.bound_class_cmi;
}

/// MI-setting distributions of the data process: the marginal over
/// hypotheses and the slot-averaged joint of (hypothesis, one training
/// sample), both enumerated over every training tuple.
struct DatasetDistributions {
    std::vector<double> p_w;                 // [h]
    std::vector<std::vector<double>> joint;  // [h][domain point]
    std::vector<double> class_prob;          // P(Y = y)
};

inline DatasetDistributions dataset_distributions(const ExactInstance& inst) {
    inst.validate();
    if (!inst.has_pmf())
        throw std::invalid_argument("dataset_distributions: instance declares no input pmf");
    const auto loss = detail::hypothesis_losses(inst);
    const auto erm = detail::erm_by_train_key(inst, loss);
    const int H = inst.hypotheses.size();
    const int D = static_cast<int>(inst.domain.size());
    const int n = inst.n_pairs;

    DatasetDistributions out;
    out.p_w.assign(H, 0.0);
    out.joint.assign(H, std::vector<double>(D, 0.0));
    out.class_prob.assign(inst.num_classes, 0.0);
    for (int d = 0; d < D; ++d) out.class_prob[inst.domain[d].label] += inst.pmf[d];

    std::vector<int> digits(n, 0);
    const std::size_t keys = erm.size();
    for (std::size_t key = 0; key < keys; ++key) {
        double w = 1.0;
        for (int i = 0; i < n; ++i) w *= inst.pmf[digits[i]];
        if (w > 0.0) {
            const int h = erm[key];
            out.p_w[h] += w;
            const double share = w / static_cast<double>(n);
            for (int i = 0; i < n; ++i) out.joint[h][digits[i]] += share;
        }
        for (int i = 0; i < n; ++i) {
            if (++digits[i] < D) break;
            digits[i] = 0;
        }
    }
    return out;
}

/// Spec op: Theorem-style KL bound sqrt(2 sigma^2 D(P_{W,X|y} || P_W x P_{X|y}))
/// by exhaustive enumeration. Throws DivergenceInfinite when vacuous.
inline double kl_class_divergence(const ExactInstance& inst, const DatasetDistributions& dist,
                                  int y) {
    const double py = dist.class_prob.at(static_cast<std::size_t>(y));
    if (py <= 0.0) throw EmptyClass("kl_class_bound: class has zero probability");
    double kl = 0.0;
    for (std::size_t h = 0; h < dist.p_w.size(); ++h) {
        for (std::size_t d = 0; d < inst.domain.size(); ++d) {
            if (inst.domain[d].label != y) continue;
            const double j = dist.joint[h][d];
            if (j <= 0.0) continue;
            const double q = dist.p_w[h] * inst.pmf[d];
            if (q <= 0.0)
                throw DivergenceInfinite("kl_class_bound: joint mass outside the product support");
            kl += j * std::log(j / q);
        }
    }
    return std::max(kl / py, 0.0);
}

inline double kl_class_bound(const ExactInstance& inst, int y,
                             std::optional<double> sigma = std::nullopt) {
    const auto dist = dataset_distributions(inst);
    const double s = sigma.value_or(inst.sigma);
    return std::sqrt(2.0 * s * s * kl_class_divergence(inst, dist, y));
}

/// One class's exact quantities.
struct ExactClassReport {
    int class_id = 0;
    double normalizer = 0.0;  // n^y: n * P(y) in expectation mode, count/2 in fixed mode
    double gen = 0.0;
    double bound_class_cmi = 0.0;
    double bound_f_cmi = 0.0;
    double bound_e_cmi = 0.0;
    double bound_delta_l_cmi = 0.0;
    std::optional<double> kl_divergence_nats;
    std::optional<double> bound_kl;       // infinity when the divergence is vacuous
    std::optional<double> gen_mi_route;   // independent Lemma-1-style computation
};

struct ExactAttributeReport {
    int attribute = 0;
    double prob = 0.0;
    double gen = 0.0;
    double kl_nats = 0.0;
    double bound_kl = 0.0;
};

struct ExactSubtaskReport {
    SubtaskSpec spec;
    double gen = 0.0;              // Q_Y-weighted class-generalization error
    double bound_delta_l_cmi = 0.0;
    double bound_f_cmi = 0.0;
    double bound_e_cmi = 0.0;
    double bound_class_cmi = 0.0;
    double gen_source_empirical = 0.0;  // population risk under Q minus source empirical risk
    double baseline_bound = 0.0;        // sqrt(2 s^2 D(Q||P)) + sqrt(2 s^2 I(W;S))
    double baseline_kl = 0.0;
    double baseline_weight_mi = 0.0;    // I(W;S), equals H(W) for deterministic ERM
};

struct ExactReport {
    bool expectation_mode = false;
    std::vector<ExactClassReport> classes;  // classes with positive probability / presence
    std::optional<ExactSubtaskReport> subtask;
    std::vector<ExactAttributeReport> attributes;
    std::optional<double> attribute_corollary_bound;  // sum_t P(t) * bound_t
    std::optional<double> standard_gen;               // unconditioned MI-setting gen
    double weight_entropy = 0.0;                      // H(W) in nats
};

/// Full-expectation exact oracle: enumerates every super-sample realization
/// under the declared pmf and every mask, with the theorem normalizer
/// n^y = n P(y). All CMI quantities are disintegrated per realization and
/// averaged; KL quantities come from the dataset enumeration.
inline ExactReport run_exact_expectation(const ExactInstance& inst,
                                         std::optional<SubtaskSpec> subtask = std::nullopt) {
    inst.validate();
    if (!inst.has_pmf())
        throw std::invalid_argument("run_exact_expectation: instance declares no input pmf");
    if (inst.expectation_states() > 1e9)
        throw Unsupported("run_exact_expectation: super-sample enumeration budget exceeded");

    const int D = static_cast<int>(inst.domain.size());
    const int H = inst.hypotheses.size();
    const int n = inst.n_pairs;
    const int C = inst.num_classes;
    const std::size_t num_masks = static_cast<std::size_t>(1) << n;

    const auto loss = detail::hypothesis_losses(inst);
    const auto erm = detail::erm_by_train_key(inst, loss);

    std::vector<std::size_t> pow_d(static_cast<std::size_t>(n) + 1, 1);
    for (int i = 1; i <= n; ++i) pow_d[i] = pow_d[i - 1] * static_cast<std::size_t>(D);

    // accumulators over super-sample realizations
    std::vector<double> gen_acc(C, 0.0);
    std::vector<double> bw_acc(C, 0.0), bf_acc(C, 0.0), be_acc(C, 0.0), bd_acc(C, 0.0);

    std::vector<int> w_of_u(num_masks, 0);
    std::vector<std::uint32_t> cw(2 * static_cast<std::size_t>(H));
    std::vector<std::uint32_t> cf(2 * static_cast<std::size_t>(C) * C);
    std::vector<std::uint32_t> ce(8);
    std::vector<std::uint32_t> cd(2 * 2 * 3);  // two class slots (minus label, plus label)

    std::size_t num_grids = 1;
    for (int i = 0; i < 2 * n; ++i) num_grids *= static_cast<std::size_t>(D);
    std::vector<int> digit(2 * static_cast<std::size_t>(n), 0);
    const double mask_weight = 1.0 / static_cast<double>(num_masks);

    for (std::size_t grid = 0; grid < num_grids; ++grid) {
        double wz = 1.0;
        for (int i = 0; i < 2 * n; ++i) wz *= inst.pmf[digit[i]];
        if (wz > 0.0) {
            // ERM for every mask of this realization
            for (std::size_t u = 0; u < num_masks; ++u) {
                std::size_t key = 0;
                for (int i = 0; i < n; ++i) {
                    const int id = (u >> i) & 1 ? digit[2 * i + 1] : digit[2 * i];
                    key += static_cast<std::size_t>(id) * pow_d[i];
                }
                w_of_u[u] = erm[key];
            }
            for (int i = 0; i < n; ++i) {
                const int minus_id = digit[2 * i];
                const int plus_id = digit[2 * i + 1];
                const int ym = inst.domain[minus_id].label;
                const int yp = inst.domain[plus_id].label;
                std::fill(cw.begin(), cw.end(), 0u);
                std::fill(cf.begin(), cf.end(), 0u);
                std::fill(ce.begin(), ce.end(), 0u);
                std::fill(cd.begin(), cd.end(), 0u);
                long gen_m = 0, gen_p = 0;  // sum over masks of u_i * dL for y=ym / y=yp
                for (std::size_t u = 0; u < num_masks; ++u) {
                    const int r = (u >> i) & 1;  // 1 means U_i = +1
                    const int h = w_of_u[u];
                    const int lm = loss[h][minus_id];
                    const int lp = loss[h][plus_id];
                    cw[static_cast<std::size_t>(r) * H + h]++;
                    cf[(static_cast<std::size_t>(r) * C + inst.hypotheses.rows[h][minus_id]) * C +
                       inst.hypotheses.rows[h][plus_id]]++;
                    ce[static_cast<std::size_t>(r) * 4 + lm * 2 + lp]++;
                    const int sign = r ? +1 : -1;
                    // dL for y = ym and y = yp (other classes are identically 0)
                    const int d_m = lm - (yp == ym ? lp : 0);
                    const int d_p = (ym == yp ? lm : 0) - lp;
                    cd[0 * 6 + static_cast<std::size_t>(r) * 3 + (d_m + 1)]++;
                    cd[1 * 6 + static_cast<std::size_t>(r) * 3 + (d_p + 1)]++;
                    gen_m += sign * d_m;
                    gen_p += sign * d_p;
                }
                const double mi_w = detail::mi_from_counts(
                    std::span<const std::uint32_t>(cw.data(), static_cast<std::size_t>(H)),
                    std::span<const std::uint32_t>(cw.data() + H, static_cast<std::size_t>(H)));
                const std::size_t fcells = static_cast<std::size_t>(C) * C;
                const double mi_f = detail::mi_from_counts(
                    std::span<const std::uint32_t>(cf.data(), fcells),
                    std::span<const std::uint32_t>(cf.data() + fcells, fcells));
                const double mi_e =
                    detail::mi_from_counts(std::span<const std::uint32_t>(ce.data(), 4),
                                           std::span<const std::uint32_t>(ce.data() + 4, 4));
                const double mi_dm =
                    detail::mi_from_counts(std::span<const std::uint32_t>(cd.data(), 3),
                                           std::span<const std::uint32_t>(cd.data() + 3, 3));
                const double mi_dp =
                    detail::mi_from_counts(std::span<const std::uint32_t>(cd.data() + 6, 3),
                                           std::span<const std::uint32_t>(cd.data() + 9, 3));

                const double term_w = std::sqrt(2.0 * mi_w);
                const double term_f = std::sqrt(2.0 * mi_f);
                const double term_e = std::sqrt(2.0 * mi_e);
                // indicator max(1{ym=y},1{yp=y}) is 1 exactly for y in {ym, yp}
                bw_acc[ym] += wz * term_w;
                bf_acc[ym] += wz * term_f;
                be_acc[ym] += wz * term_e;
                bd_acc[ym] += wz * std::sqrt(2.0 * mi_dm);
                gen_acc[ym] += wz * mask_weight * static_cast<double>(gen_m);
                if (yp != ym) {
                    bw_acc[yp] += wz * term_w;
                    bf_acc[yp] += wz * term_f;
                    be_acc[yp] += wz * term_e;
                    bd_acc[yp] += wz * std::sqrt(2.0 * mi_dp);
                    gen_acc[yp] += wz * mask_weight * static_cast<double>(gen_p);
                }
            }
        }
        for (int i = 0; i < 2 * n; ++i) {
            if (++digit[i] < D) break;
            digit[i] = 0;
        }
    }

    const auto dist = dataset_distributions(inst);

    ExactReport rep;
    rep.expectation_mode = true;
    for (int h = 0; h < H; ++h)
        if (dist.p_w[h] > 0.0) rep.weight_entropy -= dist.p_w[h] * std::log(dist.p_w[h]);
    rep.weight_entropy = std::max(rep.weight_entropy, 0.0);

    for (int y = 0; y < C; ++y) {
        const double py = dist.class_prob[y];
        if (py <= 0.0) continue;
        ExactClassReport cr;
        cr.class_id = y;
        cr.normalizer = static_cast<double>(n) * py;
        const double inv = 1.0 / cr.normalizer;
        cr.gen = inv * gen_acc[y];
        cr.bound_class_cmi = inv * bw_acc[y];
        cr.bound_f_cmi = inv * bf_acc[y];
        cr.bound_e_cmi = inv * be_acc[y];
        cr.bound_delta_l_cmi = inv * bd_acc[y];

        // independent MI-setting route: Lemma-1 form of the same error
        double e_joint = 0.0, e_prod = 0.0;
        for (int h = 0; h < H; ++h) {
            for (int d = 0; d < D; ++d) {
                if (inst.domain[d].label != y) continue;
                e_joint += dist.joint[h][d] * loss[h][d];
                e_prod += dist.p_w[h] * inst.pmf[d] * loss[h][d];
            }
        }
        cr.gen_mi_route = (e_prod - e_joint) / py;
        try {
            const double kl = kl_class_divergence(inst, dist, y);
            cr.kl_divergence_nats = kl;
            cr.bound_kl = std::sqrt(2.0 * inst.sigma * inst.sigma * kl);
        } catch (const DivergenceInfinite&) {
            cr.bound_kl = std::numeric_limits<double>::infinity();
        }
        rep.classes.push_back(std::move(cr));
    }

    // standard generalization error, unconditioned
    {
        double e_joint = 0.0, e_prod = 0.0;
        for (int h = 0; h < H; ++h)
            for (int d = 0; d < D; ++d) {
                e_joint += dist.joint[h][d] * loss[h][d];
                e_prod += dist.p_w[h] * inst.pmf[d] * loss[h][d];
            }
        rep.standard_gen = e_prod - e_joint;
    }

    // attribute-generalization reports, when every domain point has one
    bool have_attrs = true;
    int max_attr = -1;
    for (const auto& p : inst.domain) {
        if (p.attribute < 0) have_attrs = false;
        max_attr = std::max(max_attr, p.attribute);
    }
    if (have_attrs && max_attr >= 0) {
        double corollary = 0.0;
        for (int t = 0; t <= max_attr; ++t) {
            double pt = 0.0;
            for (int d = 0; d < D; ++d)
                if (inst.domain[d].attribute == t) pt += inst.pmf[d];
            if (pt <= 0.0) continue;
            ExactAttributeReport ar;
            ar.attribute = t;
            ar.prob = pt;
            double e_joint = 0.0, e_prod = 0.0, kl = 0.0;
            for (int h = 0; h < H; ++h) {
                for (int d = 0; d < D; ++d) {
                    if (inst.domain[d].attribute != t) continue;
                    const double j = dist.joint[h][d] / pt;
                    const double q = dist.p_w[h] * inst.pmf[d] / pt;
                    e_joint += j * loss[h][d];
                    e_prod += q * loss[h][d];
                    if (j > 0.0) {
                        if (q <= 0.0)
                            throw DivergenceInfinite("attribute KL: mass outside product support");
                        kl += j * std::log(j / q);
                    }
                }
            }
            ar.gen = e_prod - e_joint;
            ar.kl_nats = std::max(kl, 0.0);
            ar.bound_kl = std::sqrt(2.0 * inst.sigma * inst.sigma * ar.kl_nats);
            corollary += pt * ar.bound_kl;
            rep.attributes.push_back(ar);
        }
        rep.attribute_corollary_bound = corollary;
    }

    if (subtask) {
        subtask->validate();
        ExactSubtaskReport sr;
        sr.spec = *subtask;
        std::vector<double> q_point(D, 0.0);  // Q over domain points
        double p_of_a = 0.0;
        for (std::size_t a = 0; a < subtask->classes.size(); ++a) {
            const int y = subtask->classes[a];
            const double py = dist.class_prob.at(static_cast<std::size_t>(y));
            if (py <= 0.0) throw EmptyClass("subtask class has zero probability");
            p_of_a += py;
            const ExactClassReport* cr = nullptr;
            for (const auto& c : rep.classes)
                if (c.class_id == y) cr = &c;
            const double q = subtask->weights[a];
            sr.gen += q * cr->gen;
            sr.bound_delta_l_cmi += q * cr->bound_delta_l_cmi;
            sr.bound_f_cmi += q * cr->bound_f_cmi;
            sr.bound_e_cmi += q * cr->bound_e_cmi;
            sr.bound_class_cmi += q * cr->bound_class_cmi;
            for (int d = 0; d < D; ++d)
                if (inst.domain[d].label == y) q_point[d] = inst.pmf[d] * q / py;
        }
        sr.baseline_kl = std::max(
            kl_divergence(std::span<const double>(q_point), std::span<const double>(inst.pmf)),
            0.0);
        sr.baseline_weight_mi = rep.weight_entropy;  // I(W;S) = H(W): W is a function of S
        const double s2 = 2.0 * inst.sigma * inst.sigma;
        sr.baseline_bound = std::sqrt(s2 * sr.baseline_kl) + std::sqrt(s2 * sr.baseline_weight_mi);
        // population risk under Q minus the all-classes empirical risk
        double lq = 0.0;
        for (int h = 0; h < H; ++h)
            for (int d = 0; d < D; ++d) lq += dist.p_w[h] * q_point[d] * loss[h][d];
        double le = 0.0;
        for (int h = 0; h < H; ++h)
            for (int d = 0; d < D; ++d) le += dist.joint[h][d] * loss[h][d];
        sr.gen_source_empirical = lq - le;
        rep.subtask = std::move(sr);
    }
    return rep;
}

/// Random small instance for validity sweeps: zero-one loss, a handful of
/// domain points, at most 16 hypotheses, sizes kept inside the enumeration
/// budget. Every point carries a binary attribute so the attribute path is
/// exercised too.
inline ExactInstance random_instance(Rng& rng) {
    ExactInstance inst;
    const int d_choices[3] = {2, 3, 4};
    const int D = d_choices[rng.below(3)];
    const int n_max = (D == 2) ? 6 : (D == 3 ? 5 : 4);
    inst.n_pairs = 2 + static_cast<int>(rng.below(static_cast<std::uint64_t>(n_max - 1)));
    inst.num_classes = 2 + static_cast<int>(rng.below(2));
    inst.domain.resize(D);
    for (auto& p : inst.domain) {
        p.label = static_cast<int>(rng.below(inst.num_classes));
        p.attribute = static_cast<int>(rng.below(2));
    }
    inst.pmf.resize(D);
    double total = 0.0;
    for (auto& p : inst.pmf) {
        p = -std::log(std::max(rng.next_unit(), 1e-12));
        total += p;
    }
    for (auto& p : inst.pmf) p /= total;
    const int H = 2 + static_cast<int>(rng.below(15));
    inst.hypotheses.rows.assign(H, std::vector<int>(D, 0));
    for (auto& row : inst.hypotheses.rows)
        for (auto& lbl : row) lbl = static_cast<int>(rng.below(inst.num_classes));
    inst.loss_kind = LossKind::zero_one;
    return inst;
}

}  // namespace classgen
