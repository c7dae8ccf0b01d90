// Acceptance suite: runs every release criterion at its pinned tolerance and
// prints one pass/fail line per criterion. Exit code 0 iff all pass.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include "classgen/exact.hpp"
#include "classgen/harness.hpp"
#include "classgen/report.hpp"

using namespace classgen;

namespace {

int g_failures = 0;

void report(int criterion, const std::string& what, bool pass, const std::string& detail = "") {
    std::printf("[%s] criterion %2d: %s%s%s\n", pass ? "PASS" : "FAIL", criterion, what.c_str(),
                detail.empty() ? "" : " -- ", detail.c_str());
    if (!pass) ++g_failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

GeneratorSpec binary_gaussians(double sep, std::vector<double> noise, std::vector<double> priors) {
    GeneratorSpec g;
    g.kind = GeneratorKind::gaussian_mixture;
    g.means = {{-sep, -sep}, {sep, sep}};
    g.cov_scale = {1.0, 1.0};
    g.priors = std::move(priors);
    g.label_noise = std::move(noise);
    return g;
}

ExperimentConfig knn_config(const GeneratorSpec& g, std::vector<int> n_grid, int m1, int m2,
                            Seed seed) {
    ExperimentConfig config;
    config.data.kind = DataSourceConfig::Kind::generator;
    config.data.generator = g;
    config.learner.kind = LearnerKind::knn;
    config.learner.k = 1;
    config.learner.loss.kind = LossKind::zero_one;
    config.n_grid = std::move(n_grid);
    config.m1 = m1;
    config.m2 = m2;
    config.master_seed = seed;
    return config;
}

// criteria 1-2 share the instance stream of verify-exact --random 100 --seed 7
std::vector<ExactInstance> sweep_instances() {
    Rng rng(7);
    std::vector<ExactInstance> out;
    for (int k = 0; k < 100; ++k) out.push_back(random_instance(rng));
    return out;
}

void criterion_1_exact_validity(const char* cli_path) {
    const auto t0 = std::chrono::steady_clock::now();
    bool pass = false;
    std::string detail;
    if (cli_path == nullptr) {
        // no CLI path given: run the same sweep in-process
        int violations = 0;
        for (const auto& inst : sweep_instances())
            violations += static_cast<int>(verify_exact_report(run_exact_expectation(inst)).size());
        pass = violations == 0;
        detail = "in-process sweep, " + std::to_string(violations) + " violations";
    } else {
        const std::string cmd = std::string(cli_path) + " verify-exact --random 100 --seed 7 > /dev/null";
        const int rc = std::system(cmd.c_str());
        pass = rc == 0;
        detail = "exit code " + std::to_string(rc);
    }
    const double dt = seconds_since(t0);
    pass = pass && dt < 60.0;
    char buf[64];
    std::snprintf(buf, sizeof(buf), ", %.1fs (< 60s)", dt);
    report(1, "exact validity sweep: |gen| <= {KL, CMI, f-CMI, e-CMI, dL-CMI} on 100 instances",
           pass, detail + buf);
}

void criterion_2_ordering() {
    int violations = 0;
    double worst = 0.0;
    for (const auto& inst : sweep_instances()) {
        const ExactReport rep = run_exact_expectation(inst);
        for (const auto& c : rep.classes) {
            const double chain[3] = {c.bound_e_cmi - c.bound_delta_l_cmi,
                                     c.bound_f_cmi - c.bound_e_cmi,
                                     c.bound_class_cmi - c.bound_f_cmi};
            for (double margin : chain) {
                worst = std::min(worst, margin);
                if (margin < -1e-9) ++violations;
            }
        }
    }
    char buf[96];
    std::snprintf(buf, sizeof(buf), "%d violations, worst margin %.3g (tol 1e-9)", violations,
                  worst);
    report(2, "tightness ordering dL-CMI <= e-CMI <= f-CMI <= class-CMI on the sweep",
           violations == 0, buf);
}

void criterion_3_independence_null() {
    ExperimentConfig config;
    config.data.kind = DataSourceConfig::Kind::generator;
    config.data.generator = binary_gaussians(1.5, {0.0, 0.0}, {0.5, 0.5});
    config.learner.kind = LearnerKind::logistic;  // steps=0, zero init: constant classifier
    config.learner.steps = 0;
    config.learner.init_scale = 0.0;
    config.learner.step_size = 0.1;
    config.learner.loss.kind = LossKind::zero_one;
    config.n_grid = {16};
    config.m1 = 10;
    config.m2 = 8;
    config.master_seed = 2026;
    const ExperimentResult result = run_experiment(config);
    const auto& nr = result.per_n[0];
    bool cmi_zero = true, bounds_zero = true, gen_ok = true;
    for (const auto& dr : nr.draws)
        for (const auto& r : dr) {
            if (r.skipped) continue;
            for (const auto& p : r.per_pair)
                cmi_zero = cmi_zero && p.mi_f == 0.0 && p.mi_e == 0.0 && p.mi_delta == 0.0;
            bounds_zero = bounds_zero && r.bound_f_cmi == 0.0 && r.bound_e_cmi == 0.0 &&
                          r.bound_delta_l_cmi == 0.0;
        }
    for (const auto& agg : nr.aggregates) {
        bounds_zero = bounds_zero && agg.bound_f_cmi == 0.0 && agg.bound_e_cmi == 0.0 &&
                      agg.bound_delta_l_cmi == 0.0;
        gen_ok = gen_ok && std::abs(agg.gen_estimate) <= 3.0 * agg.stderr_ + 1e-15;
    }
    report(3, "independence null: constant learner has exactly zero CMI and bounds",
           cmi_zero && bounds_zero && gen_ok,
           std::string("cmi_zero=") + (cmi_zero ? "yes" : "no") + " bounds_zero=" +
               (bounds_zero ? "yes" : "no") + " |gen|<=3se=" + (gen_ok ? "yes" : "no"));
}

void criterion_4_mi_estimator() {
    Rng rng(404);
    double max_err = 0.0;
    for (int rep = 0; rep < 20; ++rep) {
        // random binary x ternary joint
        double cells[6];
        double total = 0;
        for (double& c : cells) {
            c = rng.uniform(0.02, 1.0);
            total += c;
        }
        for (double& c : cells) c /= total;
        // closed form, written out directly
        const double pu0 = cells[0] + cells[1] + cells[2];
        const double pu1 = cells[3] + cells[4] + cells[5];
        double truth = 0.0;
        for (int v = 0; v < 3; ++v) {
            const double pv = cells[v] + cells[3 + v];
            truth += cells[v] * std::log(cells[v] / (pu0 * pv));
            truth += cells[3 + v] * std::log(cells[3 + v] / (pu1 * pv));
        }
        JointCounts counts;
        for (int k = 0; k < 100000; ++k) {
            const std::size_t cell = rng.categorical(std::span<const double>(cells, 6));
            counts.add(cell < 3 ? -1 : +1, static_cast<int>(cell % 3));
        }
        max_err = std::max(max_err, std::abs(plugin_mi(counts) - truth));
    }
    JointCounts corr;
    corr.add(+1, 1, 50);
    corr.add(-1, 0, 50);
    const double ln2_err = std::abs(plugin_mi(corr) - 0.6931471805599453);
    char buf[96];
    std::snprintf(buf, sizeof(buf), "max |err| = %.4f (<= 0.02), ln2 err = %.2e (<= 0.01)",
                  max_err, ln2_err);
    report(4, "plug-in MI vs closed form on 20 random 2x3 joints at 1e5 samples",
           max_err <= 0.02 && ln2_err <= 0.01, buf);
}

void criterion_5_oracle_equivalence() {
    Rng rng(1234);
    double max_diff = 0.0;
    for (int rep = 0; rep < 5; ++rep) {
        ExactInstance inst = random_instance(rng);
        while (static_cast<int>(inst.domain.size()) < inst.num_classes)
            inst = random_instance(rng);
        for (int c = 0; c < inst.num_classes; ++c) inst.domain[c].label = c;
        inst.pmf.clear();
        inst.fixed_supersample.resize(2 * inst.n_pairs);
        for (std::size_t k = 0; k < inst.fixed_supersample.size(); ++k)
            inst.fixed_supersample[k] = k < static_cast<std::size_t>(inst.num_classes)
                                            ? static_cast<int>(k)
                                            : static_cast<int>(rng.below(inst.domain.size()));
        inst.validate();

        ExperimentConfig config;
        config.data.kind = DataSourceConfig::Kind::generator;
        for (int c = 0; c < inst.num_classes; ++c) {
            config.data.generator.means.push_back({static_cast<double>(c)});
            config.data.generator.cov_scale.push_back(1.0);
            config.data.generator.priors.push_back(1.0 / inst.num_classes);
            config.data.generator.label_noise.push_back(0.0);
        }
        config.learner = inst.learner_spec();
        config.n_grid = {inst.n_pairs};
        config.m1 = 1;
        config.m2 = 1 << inst.n_pairs;
        config.master_seed = 5;

        RunHooks hooks;
        hooks.fixed_supersample = inst.fixed_supersample_grid();
        std::vector<Mask> masks;
        for (int id = 0; id < (1 << inst.n_pairs); ++id) {
            Mask m;
            for (int i = 0; i < inst.n_pairs; ++i) m.entries.push_back((id >> i) & 1 ? +1 : -1);
            masks.push_back(std::move(m));
        }
        hooks.fixed_masks = masks;

        const ExperimentResult engine = run_experiment(config, hooks);
        const ExperimentResult oracle = run_exact(inst);
        const auto& en = engine.per_n[0];
        const auto& on = oracle.per_n[0];
        if (en.aggregates.size() != on.aggregates.size()) {
            max_diff = 1.0;
            break;
        }
        auto upd = [&](double a, double b) { max_diff = std::max(max_diff, std::abs(a - b)); };
        for (std::size_t k = 0; k < en.aggregates.size(); ++k) {
            const auto& a = en.aggregates[k];
            const auto& b = on.aggregates[k];
            upd(a.gen_estimate, b.gen_estimate);
            upd(a.stderr_, b.stderr_);
            upd(a.n_y_half, b.n_y_half);
            upd(*a.bound_class_cmi, *b.bound_class_cmi);
            upd(a.bound_f_cmi, b.bound_f_cmi);
            upd(a.bound_e_cmi, b.bound_e_cmi);
            upd(a.bound_delta_l_cmi, b.bound_delta_l_cmi);
        }
        upd(en.standard.gen_estimate, on.standard.gen_estimate);
        upd(en.standard.bound_delta_l_cmi, on.standard.bound_delta_l_cmi);
        upd(en.standard.bound_f_cmi, on.standard.bound_f_cmi);
        upd(en.standard.bound_e_cmi, on.standard.bound_e_cmi);
        for (std::size_t y = 0; y < en.draws[0].size(); ++y) {
            const auto& ra = en.draws[0][y];
            const auto& rb = on.draws[0][y];
            if (ra.skipped != rb.skipped) max_diff = 1.0;
            if (ra.skipped) continue;
            upd(ra.gen_estimate, rb.gen_estimate);
            upd(ra.mc_stderr, rb.mc_stderr);
            for (std::size_t i = 0; i < ra.per_pair.size(); ++i) {
                upd(ra.per_pair[i].mi_f, rb.per_pair[i].mi_f);
                upd(ra.per_pair[i].mi_e, rb.per_pair[i].mi_e);
                upd(ra.per_pair[i].mi_delta, rb.per_pair[i].mi_delta);
                upd(*ra.per_pair[i].mi_w, *rb.per_pair[i].mi_w);
            }
        }
        if (en.recall.has_value() != on.recall.has_value()) max_diff = 1.0;
        if (en.recall && on.recall) {
            upd(en.recall->recall_gap, on.recall->recall_gap);
            upd(en.recall->specificity_gap, on.recall->specificity_gap);
        }
    }
    char buf[64];
    std::snprintf(buf, sizeof(buf), "max field difference %.3g (<= 1e-12)", max_diff);
    report(5, "run_experiment with the exhaustive mask list equals run_exact", max_diff <= 1e-12,
           buf);
}

ExperimentResult criterion_6_result;  // reused by criteria 8 and 10

void criterion_6_statistical_validity() {
    const auto t0 = std::chrono::steady_clock::now();
    ExperimentConfig config =
        knn_config(binary_gaussians(1.0, {0.0, 0.0}, {0.5, 0.5}), {16, 32, 64, 128}, 5, 30, 99);
    criterion_6_result = run_experiment(config);
    bool ok = true;
    double worst = 1e9;
    for (const auto& nr : criterion_6_result.per_n)
        for (const auto& agg : nr.aggregates) {
            const double slack = agg.bound_delta_l_cmi + 2.0 * agg.stderr_ - agg.gen_estimate;
            worst = std::min(worst, slack);
            if (slack < 0.0) ok = false;
        }
    const double dt = seconds_since(t0);
    char buf[96];
    std::snprintf(buf, sizeof(buf), "min slack %.4f, %.1fs (< 300s)", worst, dt);
    report(6, "statistical validity at scale: gen <= dL-CMI bound + 2 stderr for every (n, class)",
           ok && dt < 300.0, buf);
}

void criterion_7_directional_asymmetry() {
    int hits = 0;
    for (int rep = 0; rep < 20; ++rep) {
        ExperimentConfig config = knn_config(binary_gaussians(4.0, {0.1, 0.0}, {0.35, 0.65}),
                                             {64}, 5, 30, derive_seed(7000, rep));
        const ExperimentResult result = run_experiment(config);
        const auto& aggs = result.per_n[0].aggregates;
        const bool gen_dir = aggs[0].gen_estimate > aggs[1].gen_estimate;
        const bool bound_dir = aggs[0].bound_delta_l_cmi > aggs[1].bound_delta_l_cmi;
        if (gen_dir && bound_dir) ++hits;
    }
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%d / 20 seeds (need >= 18)", hits);
    report(7, "noisy class 0 dominates clean class 1 in gen estimate and dL-CMI bound",
           hits >= 18, buf);
}

void criterion_8_recall_identity() {
    bool ok = true;
    double worst = 0.0;
    for (const auto& nr : criterion_6_result.per_n) {
        if (!nr.recall) {
            ok = false;
            continue;
        }
        worst = std::max(worst, nr.recall->max_identity_residual);
        // the gaps are the class-generalization errors of the two classes
        const double r_diff = std::abs(nr.recall->recall_gap - nr.aggregates[1].gen_estimate);
        const double s_diff = std::abs(nr.recall->specificity_gap - nr.aggregates[0].gen_estimate);
        worst = std::max({worst, r_diff, s_diff});
    }
    char buf[64];
    std::snprintf(buf, sizeof(buf), "max residual %.3g (<= 1e-12)", worst);
    report(8, "recall/specificity gaps equal the confusion-matrix recomputation per trial",
           ok && worst <= 1e-12, buf);
}

void criterion_9_subtask_consistency() {
    bool ok = true;
    std::string detail;

    // (a) full class set with empirical weights reproduces the standard
    // aggregation, on an exhaustively enumerated fixed instance
    Rng rng(909);
    ExactInstance inst = random_instance(rng);
    while (static_cast<int>(inst.domain.size()) < inst.num_classes) inst = random_instance(rng);
    for (int c = 0; c < inst.num_classes; ++c) inst.domain[c].label = c;
    inst.fixed_supersample.resize(2 * inst.n_pairs);
    for (std::size_t k = 0; k < inst.fixed_supersample.size(); ++k)
        inst.fixed_supersample[k] = k < static_cast<std::size_t>(inst.num_classes)
                                        ? static_cast<int>(k)
                                        : static_cast<int>(rng.below(inst.domain.size()));
    inst.validate();
    SubtaskSpec full;
    {
        std::map<int, int> counts;
        for (int id : inst.fixed_supersample) counts[inst.domain[id].label]++;
        for (const auto& [y, c] : counts) {
            full.classes.push_back(y);
            full.weights.push_back(c / static_cast<double>(inst.fixed_supersample.size()));
        }
    }
    const ExperimentResult fixed = run_exact(inst, full);
    const auto& nr = fixed.per_n[0];
    const double gen_diff = std::abs(nr.subtask->gen_estimate - nr.standard.gen_estimate);
    const double bound_diff =
        std::abs(nr.subtask->bound_delta_l_cmi - nr.standard.bound_delta_l_cmi);
    if (gen_diff > 1e-12 || bound_diff > 1e-12) ok = false;
    if (!nr.subtask->baseline_bound) ok = false;  // baseline reported side-by-side

    // (b) exact expectation-mode subtask: dL bound valid, baseline reported
    int checked = 0;
    double min_margin = 1e9;
    Rng rng2(910);
    for (int rep = 0; rep < 10; ++rep) {
        const ExactInstance e = random_instance(rng2);
        const auto dist = dataset_distributions(e);
        std::vector<int> present;
        for (int y = 0; y < e.num_classes; ++y)
            if (dist.class_prob[y] > 0) present.push_back(y);
        if (present.size() < 2) continue;
        SubtaskSpec sub;
        sub.classes = {present[0]};
        sub.weights = {1.0};
        const ExactReport r = run_exact_expectation(e, sub);
        if (!r.subtask || r.subtask->baseline_bound <= 0.0) {
            ok = false;
            continue;
        }
        min_margin = std::min(min_margin, r.subtask->bound_delta_l_cmi - std::abs(r.subtask->gen));
        if (std::abs(r.subtask->gen) > r.subtask->bound_delta_l_cmi + 1e-9) ok = false;
        ++checked;
    }
    char buf[128];
    std::snprintf(buf, sizeof(buf),
                  "full-set diffs %.2g/%.2g (<= 1e-12); %d strict subtasks, min margin %.4f",
                  gen_diff, bound_diff, checked, min_margin);
    report(9, "subtask: full-set reduction identity and valid dL bound beside the baseline",
           ok && checked > 0, buf);
}

void criterion_10_aggregation_identity() {
    bool ok = true;
    double worst = 0.0;
    for (const auto& nr : criterion_6_result.per_n) {
        double manual = 0.0;
        for (const auto& agg : nr.aggregates)
            manual += nr.standard.weights.at(agg.class_id) * agg.bound_delta_l_cmi;
        const double via_op =
            standard_gen_bound(nr.aggregates, nr.standard.weights, BoundSelector::delta_l_cmi);
        worst = std::max({worst, std::abs(manual - nr.standard.bound_delta_l_cmi),
                          std::abs(via_op - nr.standard.bound_delta_l_cmi)});
    }
    char buf[64];
    std::snprintf(buf, sizeof(buf), "max deviation %.3g (<= 1e-12)", worst);
    report(10, "standard bound equals the class-weighted sum of per-class bounds", worst <= 1e-12,
           buf);
}

}  // namespace

int main(int argc, char** argv) {
    const char* cli_path = argc > 1 ? argv[1] : nullptr;
    criterion_1_exact_validity(cli_path);
    criterion_2_ordering();
    criterion_3_independence_null();
    criterion_4_mi_estimator();
    criterion_5_oracle_equivalence();
    criterion_6_statistical_validity();
    criterion_7_directional_asymmetry();
    criterion_8_recall_identity();
    criterion_9_subtask_consistency();
    criterion_10_aggregation_identity();
    if (g_failures > 0) {
        std::printf("%d criteria FAILED\n", g_failures);
        return 1;
    }
    std::printf("all 10 acceptance criteria passed\n");
    return 0;
}
