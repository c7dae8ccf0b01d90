#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "classgen/bounds.hpp"
#include "classgen/core.hpp"
#include "classgen/datagen.hpp"
#include "classgen/errors.hpp"
#include "classgen/exact.hpp"
#include "classgen/learners.hpp"
#include "classgen/rng.hpp"

namespace classgen {

using json = nlohmann::json;

struct DataSourceConfig {
    enum class Kind { generator, csv } kind = Kind::generator;
    GeneratorSpec generator;
    std::string csv_path;
    CsvSchema csv_schema;
};

/// Full description of one experiment: data source, learner, the n sweep,
/// the m1 super-sample draws and m2 mask draws per draw, and estimator
/// settings. Everything stochastic derives from master_seed.
struct ExperimentConfig {
    DataSourceConfig data;
    LearnerSpec learner;
    std::vector<int> n_grid;
    int m1 = 1;
    int m2 = 2;
    Seed master_seed = 0;
    int bins = 21;
    MiCorrection mi_correction = MiCorrection::none;
    std::optional<SubtaskSpec> subtask;
    bool attribute_analysis = false;
    bool distinct_masks = false;          // sample the m2 masks without replacement
    bool nested_prefix_sampling = false;  // reuse one draw's examples across the n grid
    int threads = 1;

    void validate() const {
        if (n_grid.empty()) throw std::invalid_argument("config: n_grid is empty");
        for (int n : n_grid)
            if (n < 1) throw std::invalid_argument("config: n_grid entries must be >= 1");
        if (m1 < 1) throw std::invalid_argument("config: m1 must be >= 1");
        if (m2 < 2) throw std::invalid_argument("config: m2 must be >= 2 (MI needs mask variation)");
        if (bins < 2) throw std::invalid_argument("config: bins must be >= 2");
        if (threads < 1) throw std::invalid_argument("config: threads must be >= 1");
        learner.validate();
        if (data.kind == DataSourceConfig::Kind::generator) data.generator.validate();
        if (subtask) subtask->validate();
    }
};

/// Standard-generalization aggregates: class-weighted sums of the per-class
/// estimates and bounds under the empirical class weights.
struct StandardReport {
    double gen_estimate = 0.0;
    double stderr_ = 0.0;
    double bound_delta_l_cmi = 0.0;
    double bound_f_cmi = 0.0;
    double bound_e_cmi = 0.0;
    std::optional<double> bound_class_cmi;
    std::map<int, double> weights;
};

/// Results for one n: the per-draw reports, the across-draw aggregates, and
/// the derived standard / subtask / attribute sections.
struct NResult {
    int n = 0;
    std::vector<std::vector<ClassBoundReport>> draws;  // [draw][class]
    std::vector<ClassAggregate> aggregates;            // per class
    StandardReport standard;
    std::optional<SubtaskReport> subtask;
    std::vector<AttributeReport> attributes;
    std::optional<RecallSpecificity> recall;  // binary zero-one runs, positive class 1
    std::optional<ExactReport> exact_extras;  // filled by the enumeration oracle
};

struct ExperimentResult {
    std::uint64_t config_hash = 0;
    Seed master_seed = 0;
    int num_classes = 0;
    std::vector<NResult> per_n;
};

namespace detail {

// role tags for seed derivation: one stream per purpose
inline constexpr std::uint64_t kSeedSupersample = 1;
inline constexpr std::uint64_t kSeedMask = 2;
inline constexpr std::uint64_t kSeedTrain = 3;
inline constexpr std::uint64_t kSeedNested = 4;

inline TrialRecord run_trial(const SuperSample& ss, const Mask& mask, const LearnerSpec& learner,
                             int num_classes, Seed train_seed, int supersample_id, int mask_id) {
    auto [train_set, test_set] = split(ss, mask);
    const TrainedModel model = train(learner, train_set, num_classes, train_seed);
    const std::size_t n = ss.n();
    TrialRecord t;
    t.supersample_id = supersample_id;
    t.mask_id = mask_id;
    t.mask = mask;
    t.model_id = model.hypothesis_index;
    t.pred_minus.resize(n);
    t.pred_plus.resize(n);
    t.loss_minus.resize(n);
    t.loss_plus.resize(n);
    t.label_minus.resize(n);
    t.label_plus.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& p = ss.pairs[i];
        t.pred_minus[i] = model.predict(p.minus.features);
        t.pred_plus[i] = model.predict(p.plus.features);
        t.loss_minus[i] = eval_loss(model, p.minus);
        t.loss_plus[i] = eval_loss(model, p.plus);
        t.label_minus[i] = p.minus.label;
        t.label_plus[i] = p.plus.label;
    }
    return t;
}

inline std::uint64_t mask_key(const Mask& m) {
    std::uint64_t k = 0;
    for (std::size_t i = 0; i < m.n(); ++i)
        if (m.entries[i] == +1) k |= (1ULL << (i % 64));
    return k;
}

inline void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& fn) {
    if (threads <= 1 || count < 2) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    const int t = std::min<int>(threads, static_cast<int>(count));
    pool.reserve(static_cast<std::size_t>(t));
    for (int w = 0; w < t; ++w)
        pool.emplace_back([&]() {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= count || failed.load()) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                    failed.store(true);
                    return;
                }
            }
        });
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace detail

/// Builds every derived section of one n's results from its draws. Shared by
/// the Monte Carlo engine and the exact oracle so that exhaustive-mask runs
/// agree field for field.
inline NResult build_n_result(int n, std::vector<DrawTrials> draw_trials, int num_classes,
                              int bins, MiCorrection correction,
                              const std::optional<SubtaskSpec>& subtask, bool attribute_analysis) {
    NResult out;
    out.n = n;
    for (const auto& d : draw_trials) out.draws.push_back(compute_draw_reports(d, bins, correction));

    for (int y = 0; y < num_classes; ++y) {
        std::vector<ClassBoundReport> per_draw;
        for (const auto& dr : out.draws) per_draw.push_back(dr[static_cast<std::size_t>(y)]);
        out.aggregates.push_back(aggregate_class(per_draw, y));
    }

    out.standard.weights = empirical_class_weights(draw_trials);
    for (const auto& agg : out.aggregates) {
        const double w = out.standard.weights.at(agg.class_id);
        out.standard.gen_estimate += w * agg.gen_estimate;
        out.standard.bound_delta_l_cmi += w * agg.bound_delta_l_cmi;
        out.standard.bound_f_cmi += w * agg.bound_f_cmi;
        out.standard.bound_e_cmi += w * agg.bound_e_cmi;
    }
    {
        bool have_w = true;
        double acc = 0.0;
        for (const auto& agg : out.aggregates) {
            if (!agg.bound_class_cmi) {
                have_w = false;
                break;
            }
            acc += out.standard.weights.at(agg.class_id) * *agg.bound_class_cmi;
        }
        if (have_w) out.standard.bound_class_cmi = acc;
        // stderr of the weighted per-draw standard estimates, over draws
        // where every class is present
        std::vector<double> series;
        for (const auto& dr : out.draws) {
            bool complete = true;
            double v = 0.0;
            for (const auto& r : dr) {
                if (r.skipped) {
                    complete = false;
                    break;
                }
                v += out.standard.weights.at(r.class_id) * r.gen_estimate;
            }
            if (complete) series.push_back(v);
        }
        out.standard.stderr_ = detail::sample_sd(series) /
                               std::sqrt(static_cast<double>(std::max<std::size_t>(series.size(), 1)));
    }

    if (subtask) out.subtask = subtask_report(draw_trials, *subtask, bins, correction);

    if (num_classes == 2 && !draw_trials.empty() &&
        draw_trials[0].loss_kind == LossKind::zero_one)
        out.recall = recall_specificity(draw_trials, /*positive_class=*/1);

    if (attribute_analysis) {
        int max_attr = -1;
        for (const auto& d : draw_trials)
            for (std::size_t i = 0; i < d.n_pairs(); ++i)
                max_attr = std::max({max_attr, d.attr_minus[i], d.attr_plus[i]});
        for (int t = 0; t <= max_attr; ++t)
            out.attributes.push_back(attribute_report(draw_trials, t, bins, correction));
    }
    return out;
}

/// Test hooks: pin the super-sample and/or the mask list of every draw.
/// Used to check the Monte Carlo engine against the exact oracle.
struct RunHooks {
    std::optional<SuperSample> fixed_supersample;
    std::optional<std::vector<Mask>> fixed_masks;
};

inline std::uint64_t config_hash(const json& canonical) {
    const std::string s = canonical.dump();
    std::uint64_t h = 0x243f6a8885a308d3ULL;
    for (unsigned char c : s) h = detail::splitmix64(h ^ c);
    return h;
}

inline json config_to_json(const ExperimentConfig& config);  // defined below

/// Runs the m1 x m2 protocol over the n grid. Fully deterministic given the
/// config: every super-sample, mask and training initialization has a seed
/// derived from (master_seed, role, n, draw, mask), so results do not depend
/// on scheduling or thread count.
inline ExperimentResult run_experiment(const ExperimentConfig& config,
                                       const RunHooks& hooks = {}) {
    config.validate();

    std::vector<Example> csv_pool;
    int num_classes = 0;
    int num_attributes = 0;
    if (config.data.kind == DataSourceConfig::Kind::csv) {
        LoadedCsv loaded = load_csv(config.data.csv_path, config.data.csv_schema);
        csv_pool = std::move(loaded.examples);
        num_classes = loaded.num_classes;
        num_attributes = loaded.num_attributes;
    } else {
        num_classes = config.data.generator.num_classes();
        num_attributes = config.data.generator.num_attributes();
    }
    if (config.attribute_analysis && num_attributes == 0)
        throw std::invalid_argument("run_experiment: attribute analysis needs an attribute source");

    ExperimentResult result;
    result.master_seed = config.master_seed;
    result.num_classes = num_classes;
    result.config_hash = config_hash(config_to_json(config));

    const int n_max = *std::max_element(config.n_grid.begin(), config.n_grid.end());
    for (int n : config.n_grid) {
        // draw super-samples
        std::vector<SuperSample> grids;
        for (int d = 0; d < config.m1; ++d) {
            if (hooks.fixed_supersample) {
                grids.push_back(*hooks.fixed_supersample);
                continue;
            }
            std::vector<Example> examples;
            if (config.data.kind == DataSourceConfig::Kind::generator) {
                if (config.nested_prefix_sampling) {
                    const Seed s = derive_seed(config.master_seed, detail::kSeedNested, d);
                    auto full = sample_iid(config.data.generator,
                                           static_cast<std::size_t>(2 * n_max), s);
                    examples.assign(full.begin(), full.begin() + 2 * n);
                } else {
                    const Seed s = derive_seed(config.master_seed, detail::kSeedSupersample,
                                               static_cast<std::uint64_t>(n), d);
                    examples = sample_iid(config.data.generator, static_cast<std::size_t>(2 * n), s);
                }
            } else {
                if (csv_pool.size() < static_cast<std::size_t>(2 * n))
                    throw std::invalid_argument("run_experiment: csv pool smaller than 2n at n=" +
                                                std::to_string(n) + ", draw " + std::to_string(d));
                const Seed s = config.nested_prefix_sampling
                                   ? derive_seed(config.master_seed, detail::kSeedNested, d)
                                   : derive_seed(config.master_seed, detail::kSeedSupersample,
                                                 static_cast<std::uint64_t>(n), d);
                Rng rng(s);
                std::vector<std::size_t> idx(csv_pool.size());
                for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
                for (std::size_t i = 0; i < static_cast<std::size_t>(2 * n); ++i) {
                    const std::size_t j = i + rng.below(idx.size() - i);
                    std::swap(idx[i], idx[j]);
                    examples.push_back(csv_pool[idx[i]]);
                }
            }
            grids.push_back(make_supersample(examples, num_classes));
        }

        // draw masks
        std::vector<std::vector<Mask>> masks(grids.size());
        for (std::size_t d = 0; d < grids.size(); ++d) {
            if (hooks.fixed_masks) {
                masks[d] = *hooks.fixed_masks;
                continue;
            }
            std::set<std::uint64_t> seen;
            if (config.distinct_masks && n < 63 &&
                (1ULL << n) < static_cast<std::uint64_t>(config.m2))
                throw std::invalid_argument("run_experiment: fewer than m2 distinct masks exist");
            for (int k = 0; k < config.m2; ++k) {
                Mask m;
                for (std::uint64_t attempt = 0;; ++attempt) {
                    const Seed s = derive_seed(config.master_seed, detail::kSeedMask,
                                               static_cast<std::uint64_t>(n),
                                               static_cast<std::uint64_t>(d),
                                               static_cast<std::uint64_t>(k), attempt);
                    m = draw_mask(static_cast<std::size_t>(n), s);
                    if (!config.distinct_masks || seen.insert(detail::mask_key(m)).second) break;
                }
                masks[d].push_back(std::move(m));
            }
        }

        // run all trials of this n, possibly in parallel
        const std::size_t m2 = masks[0].size();
        std::vector<std::vector<TrialRecord>> trials(grids.size(),
                                                     std::vector<TrialRecord>(m2));
        detail::parallel_for(grids.size() * m2, config.threads, [&](std::size_t flat) {
            const std::size_t d = flat / m2;
            const std::size_t k = flat % m2;
            const Seed ts = derive_seed(config.master_seed, detail::kSeedTrain,
                                        static_cast<std::uint64_t>(n), d, k);
            try {
                trials[d][k] = detail::run_trial(grids[d], masks[d][k], config.learner, num_classes,
                                                 ts, static_cast<int>(d), static_cast<int>(k));
            } catch (const std::exception& e) {
                throw std::runtime_error("run_experiment: trial failed at n=" + std::to_string(n) +
                                         ", draw " + std::to_string(d) + ", mask " +
                                         std::to_string(k) + ": " + e.what());
            }
        });

        std::vector<DrawTrials> draw_trials;
        for (std::size_t d = 0; d < grids.size(); ++d)
            draw_trials.push_back(make_draw_trials(grids[d], std::move(trials[d]),
                                                   config.learner.loss.kind, static_cast<int>(d)));

        try {
            result.per_n.push_back(build_n_result(n, std::move(draw_trials), num_classes,
                                                  config.bins, config.mi_correction, config.subtask,
                                                  config.attribute_analysis));
        } catch (const EmptyClass& e) {
            throw EmptyClass("run_experiment: at n=" + std::to_string(n) + ": " + e.what());
        }
    }
    return result;
}

/// Exact-enumeration runner. A fixed super-sample yields the exhaustive-mask
/// draw processed by the same pipeline as the Monte Carlo engine (its
/// plug-in estimates are exact there); a declared pmf adds the enumerated
/// KL quantities, and without a fixed super-sample the whole report comes
/// from the full-expectation oracle.
inline ExperimentResult run_exact(const ExactInstance& inst,
                                  std::optional<SubtaskSpec> subtask = std::nullopt) {
    inst.validate();
    ExperimentResult result;
    result.num_classes = inst.num_classes;

    if (inst.has_fixed_supersample()) {
        std::vector<DrawTrials> draws;
        draws.push_back(exhaustive_draw(inst));
        const bool have_attrs = [&] {
            for (const auto& p : inst.domain)
                if (p.attribute < 0) return false;
            return true;
        }();
        // classes absent from the fixed grid cannot be reported; aggregate only present ones
        NResult nr;
        nr.n = inst.n_pairs;
        const auto reports = compute_draw_reports(draws[0], 21, MiCorrection::none);
        nr.draws.push_back(reports);
        for (const auto& r : reports) {
            if (r.skipped) continue;
            std::vector<ClassBoundReport> one = {r};
            nr.aggregates.push_back(aggregate_class(one, r.class_id));
        }
        nr.standard.weights = empirical_class_weights(draws);
        for (const auto& agg : nr.aggregates) {
            const double w = nr.standard.weights.at(agg.class_id);
            nr.standard.gen_estimate += w * agg.gen_estimate;
            nr.standard.bound_delta_l_cmi += w * agg.bound_delta_l_cmi;
            nr.standard.bound_f_cmi += w * agg.bound_f_cmi;
            nr.standard.bound_e_cmi += w * agg.bound_e_cmi;
        }
        {
            bool have_w = true;
            double acc = 0.0;
            for (const auto& agg : nr.aggregates) {
                if (!agg.bound_class_cmi) { have_w = false; break; }
                acc += nr.standard.weights.at(agg.class_id) * *agg.bound_class_cmi;
            }
            if (have_w) nr.standard.bound_class_cmi = acc;
        }
        if (subtask) nr.subtask = subtask_report(draws, *subtask, 21, MiCorrection::none);
        if (inst.num_classes == 2 && inst.loss_kind == LossKind::zero_one &&
            nr.aggregates.size() == 2)
            nr.recall = recall_specificity(draws, /*positive_class=*/1);
        if (have_attrs) {
            int max_attr = -1;
            for (const auto& p : inst.domain) max_attr = std::max(max_attr, p.attribute);
            for (int t = 0; t <= max_attr; ++t) {
                bool present = false;
                for (int id : inst.fixed_supersample)
                    present = present || inst.domain[static_cast<std::size_t>(id)].attribute == t;
                if (present) nr.attributes.push_back(attribute_report(draws, t));
            }
        }
        if (inst.has_pmf()) {
            try {
                // attach the enumerated KL-side quantities for reference
                nr.exact_extras = run_exact_expectation(inst, subtask);
                if (nr.subtask && nr.exact_extras->subtask) {
                    nr.subtask->baseline_bound = nr.exact_extras->subtask->baseline_bound;
                    nr.subtask->baseline_distribution_kl = nr.exact_extras->subtask->baseline_kl;
                    nr.subtask->baseline_weight_mi = nr.exact_extras->subtask->baseline_weight_mi;
                }
            } catch (const Unsupported&) {
                // distribution-level enumeration over budget: fixed-grid
                // results stand on their own
            }
        }
        result.per_n.push_back(std::move(nr));
        return result;
    }

    const ExactReport exact = run_exact_expectation(inst, subtask);
    NResult nr;
    nr.n = inst.n_pairs;
    for (const auto& c : exact.classes) {
        ClassAggregate agg;
        agg.class_id = c.class_id;
        agg.n_y_half = c.normalizer;
        agg.gen_estimate = c.gen;
        agg.stderr_ = 0.0;
        agg.gen_std = 0.0;
        agg.bound_class_cmi = c.bound_class_cmi;
        agg.bound_f_cmi = c.bound_f_cmi;
        agg.bound_e_cmi = c.bound_e_cmi;
        agg.bound_delta_l_cmi = c.bound_delta_l_cmi;
        agg.draws_contributing = 1;
        nr.aggregates.push_back(agg);
    }
    const auto dist = dataset_distributions(inst);
    for (const auto& agg : nr.aggregates) {
        const double w = dist.class_prob[static_cast<std::size_t>(agg.class_id)];
        nr.standard.weights[agg.class_id] = w;
        nr.standard.gen_estimate += w * agg.gen_estimate;
        nr.standard.bound_delta_l_cmi += w * agg.bound_delta_l_cmi;
        nr.standard.bound_f_cmi += w * agg.bound_f_cmi;
        nr.standard.bound_e_cmi += w * agg.bound_e_cmi;
        nr.standard.bound_class_cmi =
            nr.standard.bound_class_cmi.value_or(0.0) + w * *agg.bound_class_cmi;
    }
    nr.exact_extras = exact;
    result.per_n.push_back(std::move(nr));
    return result;
}

// ---------------------------------------------------------------------------
// JSON configuration and instance files
// ---------------------------------------------------------------------------

namespace detail {

inline void reject_unknown_keys(const json& obj, const std::set<std::string>& allowed,
                                const std::string& where) {
    for (const auto& [key, value] : obj.items())
        if (!allowed.count(key))
            throw std::invalid_argument("config: unknown key '" + key + "' in " + where);
}

inline std::vector<double> number_or_broadcast(const json& j, std::size_t count,
                                               const std::string& what) {
    std::vector<double> out;
    if (j.is_number()) {
        out.assign(count, j.get<double>());
    } else if (j.is_array()) {
        out = j.get<std::vector<double>>();
        if (out.size() != count)
            throw std::invalid_argument("config: " + what + " needs " + std::to_string(count) +
                                        " entries");
    } else {
        throw std::invalid_argument("config: " + what + " must be a number or array");
    }
    return out;
}

}  // namespace detail

inline GeneratorSpec generator_from_json(const json& j) {
    detail::reject_unknown_keys(
        j, {"kind", "means", "cov_scale", "priors", "label_noise", "attribute"}, "data");
    GeneratorSpec g;
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "gaussian_mixture") g.kind = GeneratorKind::gaussian_mixture;
    else if (kind == "concentric") g.kind = GeneratorKind::concentric;
    else if (kind == "xor") g.kind = GeneratorKind::xor_quadrants;
    else throw std::invalid_argument("config: unknown generator kind '" + kind + "'");
    g.means = j.at("means").get<std::vector<std::vector<double>>>();
    const std::size_t c = g.means.size();
    g.priors = j.contains("priors") ? j.at("priors").get<std::vector<double>>()
                                    : std::vector<double>(c, 1.0 / static_cast<double>(c));
    g.cov_scale = detail::number_or_broadcast(j.contains("cov_scale") ? j.at("cov_scale") : json(1.0),
                                              c, "cov_scale");
    g.label_noise = detail::number_or_broadcast(
        j.contains("label_noise") ? j.at("label_noise") : json(0.0), c, "label_noise");
    if (j.contains("attribute")) {
        const json& a = j.at("attribute");
        detail::reject_unknown_keys(a, {"kind", "axis", "threshold"}, "data.attribute");
        const std::string ak = a.at("kind").get<std::string>();
        if (ak == "none") g.attribute_rule.kind = AttributeRule::Kind::none;
        else if (ak == "halfspace") g.attribute_rule.kind = AttributeRule::Kind::halfspace;
        else if (ak == "component") g.attribute_rule.kind = AttributeRule::Kind::component;
        else throw std::invalid_argument("config: unknown attribute rule '" + ak + "'");
        g.attribute_rule.axis = a.value("axis", 0);
        g.attribute_rule.threshold = a.value("threshold", 0.0);
    }
    g.validate();
    return g;
}

inline LearnerSpec learner_from_json(const json& j) {
    detail::reject_unknown_keys(j,
                                {"kind", "k", "steps", "step_size", "init_scale", "hidden_width",
                                 "hypothesis_file", "loss", "loss_cap", "sigma"},
                                "learner");
    LearnerSpec spec;
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "knn") spec.kind = LearnerKind::knn;
    else if (kind == "logistic") spec.kind = LearnerKind::logistic;
    else if (kind == "mlp") spec.kind = LearnerKind::mlp;
    else if (kind == "finite_erm") spec.kind = LearnerKind::finite_erm;
    else throw std::invalid_argument("config: unknown learner kind '" + kind + "'");
    spec.k = j.value("k", 1);
    spec.steps = j.value("steps", 200);
    spec.step_size = j.value("step_size", 0.5);
    spec.init_scale = j.value("init_scale", 0.0);
    spec.hidden_width = j.value("hidden_width", 16);
    if (j.contains("hypothesis_file"))
        spec.hypothesis_table = load_hypothesis_table(j.at("hypothesis_file").get<std::string>());
    const std::string loss = j.value("loss", "zero_one");
    if (loss == "zero_one") spec.loss.kind = LossKind::zero_one;
    else if (loss == "clipped_cross_entropy") spec.loss.kind = LossKind::clipped_cross_entropy;
    else throw std::invalid_argument("config: unknown loss '" + loss + "'");
    spec.loss.cap = j.value("loss_cap", 10.0);
    spec.loss.subgaussian_sigma = j.value("sigma", 0.5);
    spec.validate();
    return spec;
}

inline ExperimentConfig config_from_json(const json& j) {
    detail::reject_unknown_keys(j,
                                {"data", "learner", "n_grid", "m1", "m2", "master_seed", "bins",
                                 "mi_correction", "subtask", "attribute_analysis", "distinct_masks",
                                 "nested_prefix_sampling", "threads"},
                                "top level");
    ExperimentConfig config;
    const json& data = j.at("data");
    const std::string data_kind = data.at("kind").get<std::string>();
    if (data_kind == "csv") {
        detail::reject_unknown_keys(data, {"kind", "path", "features", "label", "attribute_column"},
                                    "data");
        config.data.kind = DataSourceConfig::Kind::csv;
        config.data.csv_path = data.at("path").get<std::string>();
        config.data.csv_schema.feature_columns =
            data.at("features").get<std::vector<std::string>>();
        config.data.csv_schema.label_column = data.at("label").get<std::string>();
        if (data.contains("attribute_column"))
            config.data.csv_schema.attribute_column = data.at("attribute_column").get<std::string>();
    } else {
        config.data.kind = DataSourceConfig::Kind::generator;
        config.data.generator = generator_from_json(data);
    }
    config.learner = learner_from_json(j.at("learner"));
    config.n_grid = j.at("n_grid").get<std::vector<int>>();
    config.m1 = j.value("m1", 1);
    config.m2 = j.value("m2", 2);
    config.master_seed = j.value("master_seed", static_cast<std::uint64_t>(0));
    config.bins = j.value("bins", 21);
    const std::string corr = j.value("mi_correction", "none");
    if (corr == "none") config.mi_correction = MiCorrection::none;
    else if (corr == "miller_madow" || corr == "miller-madow")
        config.mi_correction = MiCorrection::miller_madow;
    else throw std::invalid_argument("config: unknown mi_correction '" + corr + "'");
    if (j.contains("subtask")) {
        const json& s = j.at("subtask");
        detail::reject_unknown_keys(s, {"classes", "weights"}, "subtask");
        SubtaskSpec st;
        st.classes = s.at("classes").get<std::vector<int>>();
        if (s.contains("weights")) {
            st.weights = s.at("weights").get<std::vector<double>>();
        } else {
            st.weights.assign(st.classes.size(), 1.0 / static_cast<double>(st.classes.size()));
        }
        config.subtask = std::move(st);
    }
    config.attribute_analysis = j.value("attribute_analysis", false);
    config.distinct_masks = j.value("distinct_masks", false);
    config.nested_prefix_sampling = j.value("nested_prefix_sampling", false);
    config.threads = j.value("threads", 1);
    config.validate();
    return config;
}

inline json config_to_json(const ExperimentConfig& config) {
    json j;
    if (config.data.kind == DataSourceConfig::Kind::csv) {
        j["data"]["kind"] = "csv";
        j["data"]["path"] = config.data.csv_path;
        j["data"]["features"] = config.data.csv_schema.feature_columns;
        j["data"]["label"] = config.data.csv_schema.label_column;
        if (config.data.csv_schema.attribute_column)
            j["data"]["attribute_column"] = *config.data.csv_schema.attribute_column;
    } else {
        const auto& g = config.data.generator;
        j["data"]["kind"] = g.kind == GeneratorKind::gaussian_mixture ? "gaussian_mixture"
                            : g.kind == GeneratorKind::concentric     ? "concentric"
                                                                      : "xor";
        j["data"]["means"] = g.means;
        j["data"]["priors"] = g.priors;
        j["data"]["cov_scale"] = g.cov_scale;
        j["data"]["label_noise"] = g.label_noise;
        if (g.attribute_rule.kind != AttributeRule::Kind::none) {
            j["data"]["attribute"]["kind"] =
                g.attribute_rule.kind == AttributeRule::Kind::halfspace ? "halfspace" : "component";
            j["data"]["attribute"]["axis"] = g.attribute_rule.axis;
            j["data"]["attribute"]["threshold"] = g.attribute_rule.threshold;
        }
    }
    j["learner"]["kind"] = config.learner.kind == LearnerKind::knn        ? "knn"
                           : config.learner.kind == LearnerKind::logistic ? "logistic"
                           : config.learner.kind == LearnerKind::mlp      ? "mlp"
                                                                          : "finite_erm";
    j["learner"]["k"] = config.learner.k;
    j["learner"]["steps"] = config.learner.steps;
    j["learner"]["step_size"] = config.learner.step_size;
    j["learner"]["init_scale"] = config.learner.init_scale;
    j["learner"]["hidden_width"] = config.learner.hidden_width;
    j["learner"]["loss"] =
        config.learner.loss.kind == LossKind::zero_one ? "zero_one" : "clipped_cross_entropy";
    j["learner"]["loss_cap"] = config.learner.loss.cap;
    j["learner"]["sigma"] = config.learner.loss.subgaussian_sigma;
    j["n_grid"] = config.n_grid;
    j["m1"] = config.m1;
    j["m2"] = config.m2;
    j["master_seed"] = config.master_seed;
    j["bins"] = config.bins;
    j["mi_correction"] = config.mi_correction == MiCorrection::none ? "none" : "miller_madow";
    if (config.subtask) {
        j["subtask"]["classes"] = config.subtask->classes;
        j["subtask"]["weights"] = config.subtask->weights;
    }
    j["attribute_analysis"] = config.attribute_analysis;
    j["distinct_masks"] = config.distinct_masks;
    j["nested_prefix_sampling"] = config.nested_prefix_sampling;
    j["threads"] = config.threads;
    return j;
}

/// Exact-instance files: domain points, optional pmf, pair count, the
/// hypothesis table (inline rows or the one-per-line text format), optional
/// fixed super-sample and subtask.
inline ExactInstance instance_from_json(const json& j, std::optional<SubtaskSpec>* subtask_out = nullptr) {
    detail::reject_unknown_keys(j,
                                {"domain", "pmf", "pairs", "hypotheses", "hypothesis_file", "loss",
                                 "num_classes", "supersample", "sigma", "subtask"},
                                "instance");
    ExactInstance inst;
    for (const json& p : j.at("domain")) {
        detail::reject_unknown_keys(p, {"label", "attribute"}, "instance.domain");
        DomainPoint dp;
        dp.label = p.at("label").get<int>();
        dp.attribute = p.value("attribute", -1);
        inst.domain.push_back(dp);
    }
    if (j.contains("pmf")) inst.pmf = j.at("pmf").get<std::vector<double>>();
    inst.n_pairs = j.at("pairs").get<int>();
    if (j.contains("hypotheses"))
        inst.hypotheses.rows = j.at("hypotheses").get<std::vector<std::vector<int>>>();
    else if (j.contains("hypothesis_file"))
        inst.hypotheses = load_hypothesis_table(j.at("hypothesis_file").get<std::string>());
    else
        throw std::invalid_argument("instance: needs 'hypotheses' or 'hypothesis_file'");
    const std::string loss = j.value("loss", "zero_one");
    if (loss == "zero_one") inst.loss_kind = LossKind::zero_one;
    else if (loss == "clipped_cross_entropy") inst.loss_kind = LossKind::clipped_cross_entropy;
    else throw std::invalid_argument("instance: unknown loss '" + loss + "'");
    if (j.contains("num_classes")) {
        inst.num_classes = j.at("num_classes").get<int>();
    } else {
        for (const auto& p : inst.domain) inst.num_classes = std::max(inst.num_classes, p.label + 1);
        for (const auto& row : inst.hypotheses.rows)
            for (int lbl : row) inst.num_classes = std::max(inst.num_classes, lbl + 1);
    }
    if (j.contains("supersample")) inst.fixed_supersample = j.at("supersample").get<std::vector<int>>();
    inst.sigma = j.value("sigma", 0.5);
    if (subtask_out && j.contains("subtask")) {
        const json& s = j.at("subtask");
        detail::reject_unknown_keys(s, {"classes", "weights"}, "instance.subtask");
        SubtaskSpec st;
        st.classes = s.at("classes").get<std::vector<int>>();
        st.weights = s.at("weights").get<std::vector<double>>();
        *subtask_out = std::move(st);
    }
    inst.validate();
    return inst;
}

}  // namespace classgen
