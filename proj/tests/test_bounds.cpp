#include <catch2/catch_amalgamated.hpp>

#include <functional>

#include "classgen/bounds.hpp"
#include "classgen/rng.hpp"

using namespace classgen;
using Catch::Approx;

namespace {

Example ex(double x, int label, int attribute = -1) {
    Example e;
    e.features = {x};
    e.label = label;
    if (attribute >= 0) e.attribute = attribute;
    return e;
}

SuperSample grid_from_labels(const std::vector<std::pair<int, int>>& pair_labels, int num_classes,
                             const std::vector<std::pair<int, int>>* pair_attrs = nullptr) {
    std::vector<Example> v;
    for (std::size_t i = 0; i < pair_labels.size(); ++i) {
        const int am = pair_attrs ? (*pair_attrs)[i].first : -1;
        const int ap = pair_attrs ? (*pair_attrs)[i].second : -1;
        v.push_back(ex(2.0 * i, pair_labels[i].first, am));
        v.push_back(ex(2.0 * i + 1, pair_labels[i].second, ap));
    }
    return make_supersample(v, num_classes);
}

// constructs one trial from a per-(pair, side) loss/prediction rule that may
// inspect the mask
using TrialRule = std::function<void(const Mask&, std::size_t pair, int& pred_minus,
                                     int& pred_plus, double& loss_minus, double& loss_plus)>;

TrialRecord make_trial(const SuperSample& ss, Mask mask, const TrialRule& rule, int mask_id = 0) {
    const std::size_t n = ss.n();
    TrialRecord t;
    t.mask_id = mask_id;
    t.mask = std::move(mask);
    t.pred_minus.resize(n);
    t.pred_plus.resize(n);
    t.loss_minus.resize(n);
    t.loss_plus.resize(n);
    t.label_minus.resize(n);
    t.label_plus.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        t.label_minus[i] = ss.pairs[i].minus.label;
        t.label_plus[i] = ss.pairs[i].plus.label;
        rule(t.mask, i, t.pred_minus[i], t.pred_plus[i], t.loss_minus[i], t.loss_plus[i]);
    }
    return t;
}

// every mask of length n, in mask-id order
std::vector<Mask> all_masks(std::size_t n) {
    std::vector<Mask> out;
    for (std::size_t id = 0; id < (std::size_t(1) << n); ++id) {
        Mask m;
        for (std::size_t i = 0; i < n; ++i) m.entries.push_back((id >> i) & 1 ? +1 : -1);
        out.push_back(std::move(m));
    }
    return out;
}

// rule of a constant correct/incorrect predictor: predictions fixed at 0,
// losses depend only on the element's label (mask-independent)
void constant_rule(const Mask&, std::size_t, int& pm, int& pp, double&, double&) {
    pm = 0;
    pp = 0;
}

DrawTrials constant_predictor_draw(const SuperSample& ss, int m2, Seed seed) {
    std::vector<TrialRecord> trials;
    for (int k = 0; k < m2; ++k) {
        const Mask m = draw_mask(ss.n(), derive_seed(seed, k));
        trials.push_back(make_trial(
            ss, m,
            [&](const Mask&, std::size_t i, int& pm, int& pp, double& lm, double& lp) {
                constant_rule(m, i, pm, pp, lm, lp);
                lm = ss.pairs[i].minus.label == 0 ? 0.0 : 1.0;
                lp = ss.pairs[i].plus.label == 0 ? 0.0 : 1.0;
            },
            k));
    }
    return make_draw_trials(ss, std::move(trials), LossKind::zero_one);
}

// memorizer on binary labels: the trained half is predicted correctly, the
// held-out half wrongly. Predictions reveal the mask bit.
TrialRule memorizer_rule(const SuperSample& ss) {
    return [&ss](const Mask& m, std::size_t i, int& pm, int& pp, double& lm, double& lp) {
        const bool plus_trains = m.entries[i] == +1;
        const int ym = ss.pairs[i].minus.label;
        const int yp = ss.pairs[i].plus.label;
        pm = plus_trains ? 1 - ym : ym;
        pp = plus_trains ? yp : 1 - yp;
        lm = plus_trains ? 1.0 : 0.0;
        lp = plus_trains ? 0.0 : 1.0;
    };
}

}  // namespace

TEST_CASE("independence null: constant predictor has exactly zero CMI and bounds") {
    const SuperSample ss = grid_from_labels({{0, 1}, {1, 0}, {0, 0}, {1, 1}}, 2);
    std::vector<DrawTrials> draws;
    for (int d = 0; d < 10; ++d) draws.push_back(constant_predictor_draw(ss, 24, derive_seed(1, d)));

    for (int y : {0, 1}) {
        const auto [gen, se] = class_gen_error(draws, y);
        CHECK(std::abs(gen) <= 3.0 * se + 1e-15);
        CHECK(class_f_cmi_bound(draws, y) == 0.0);
        CHECK(class_e_cmi_bound(draws, y) == 0.0);
        CHECK(class_delta_l_cmi_bound(draws, y) == 0.0);
    }
    for (const auto& d : draws)
        for (const auto& r : compute_draw_reports(d, 21))
            for (const auto& p : r.per_pair) {
                CHECK(p.mi_f == 0.0);
                CHECK(p.mi_e == 0.0);
                CHECK(p.mi_delta == 0.0);
            }
}

TEST_CASE("memorizer on a both-label-y pair: gap 1 and ln-2 channels") {
    // one pair, both labels 0: n_y_half = 1
    const SuperSample ss = grid_from_labels({{0, 0}}, 2);
    std::vector<TrialRecord> trials;
    const auto masks = all_masks(1);
    for (std::size_t k = 0; k < masks.size(); ++k)
        trials.push_back(make_trial(ss, masks[k], memorizer_rule(ss), static_cast<int>(k)));
    std::vector<DrawTrials> draws = {make_draw_trials(ss, std::move(trials), LossKind::zero_one)};

    const auto [gen, se] = class_gen_error(draws, 0);
    CHECK(gen == Approx(1.0).epsilon(1e-12));  // test loss 1, train loss 0 on every mask
    const double ln2_bound = std::sqrt(2.0 * 0.6931471805599453);
    CHECK(class_f_cmi_bound(draws, 0) == Approx(ln2_bound).epsilon(1e-12));
    CHECK(class_e_cmi_bound(draws, 0) == Approx(ln2_bound).epsilon(1e-12));
    CHECK(class_delta_l_cmi_bound(draws, 0) == Approx(ln2_bound).epsilon(1e-12));
}

TEST_CASE("pairs with neither label equal to y contribute exactly zero") {
    // pair 0 carries class 0; pair 1 is all class 1 and highly mask-dependent
    const SuperSample ss = grid_from_labels({{0, 0}, {1, 1}}, 2);
    const auto masks = all_masks(2);
    auto build = [&](const SuperSample& grid) {
        std::vector<TrialRecord> trials;
        for (std::size_t k = 0; k < masks.size(); ++k)
            trials.push_back(make_trial(grid, masks[k], memorizer_rule(grid), static_cast<int>(k)));
        return make_draw_trials(grid, std::move(trials), LossKind::zero_one);
    };
    std::vector<DrawTrials> draws = {build(ss)};

    const auto reports = compute_draw_reports(draws[0], 21);
    const auto& r0 = reports[0];
    CHECK(r0.per_pair[1].indicator_max == 0);
    CHECK(r0.per_pair[1].mi_delta == 0.0);

    // removing the foreign pair leaves class-0 error and bounds unchanged
    const SuperSample solo = grid_from_labels({{0, 0}}, 2);
    const auto masks1 = all_masks(1);
    std::vector<TrialRecord> trials1;
    for (std::size_t k = 0; k < masks1.size(); ++k)
        trials1.push_back(make_trial(solo, masks1[k], memorizer_rule(solo), static_cast<int>(k)));
    std::vector<DrawTrials> solo_draws = {make_draw_trials(solo, std::move(trials1),
                                                           LossKind::zero_one)};
    CHECK(class_gen_error(draws, 0).first ==
          Approx(class_gen_error(solo_draws, 0).first).epsilon(1e-12));
    CHECK(class_delta_l_cmi_bound(draws, 0) ==
          Approx(class_delta_l_cmi_bound(solo_draws, 0)).epsilon(1e-12));
    CHECK(class_f_cmi_bound(draws, 0) == Approx(class_f_cmi_bound(solo_draws, 0)).epsilon(1e-12));
}

TEST_CASE("mask antisymmetry: flipping the mask negates a trial's contribution") {
    const SuperSample ss = grid_from_labels({{0, 1}, {0, 0}, {1, 1}}, 2);
    Rng rng(66);
    for (int rep = 0; rep < 20; ++rep) {
        const Mask m = draw_mask(ss.n(), derive_seed(9, rep));
        // fixed model outputs: losses do not depend on the mask
        const auto rule = [&](const Mask&, std::size_t i, int& pm, int& pp, double& lm,
                              double& lp) {
            pm = 0;
            pp = 1;
            lm = (i % 2 == 0) ? 1.0 : 0.0;
            lp = (i == 1) ? 1.0 : 0.0;
        };
        const TrialRecord t = make_trial(ss, m, rule);
        const TrialRecord tf = make_trial(ss, m.flipped(), rule);
        for (int y : {0, 1}) {
            double v = 0, vf = 0;
            for (std::size_t i = 0; i < ss.n(); ++i) {
                v += t.mask.entries[i] * t.delta_l(y, i);
                vf += tf.mask.entries[i] * tf.delta_l(y, i);
            }
            CHECK(v == Approx(-vf).margin(1e-15));
        }
    }
}

TEST_CASE("fewer than two masks raises InsufficientSamples") {
    const SuperSample ss = grid_from_labels({{0, 1}}, 2);
    std::vector<TrialRecord> trials = {make_trial(ss, all_masks(1)[0], memorizer_rule(ss))};
    std::vector<DrawTrials> draws = {make_draw_trials(ss, std::move(trials), LossKind::zero_one)};
    CHECK_THROWS_AS(class_f_cmi_bound(draws, 0), InsufficientSamples);
}

TEST_CASE("class absent from every draw raises EmptyClass; partial absence skips") {
    const SuperSample ss0 = grid_from_labels({{0, 0}}, 2);  // class 1 absent
    std::vector<DrawTrials> draws = {constant_predictor_draw(ss0, 4, 1)};
    CHECK_THROWS_AS(class_gen_error(draws, 1), EmptyClass);
    CHECK_THROWS_AS(class_delta_l_cmi_bound(draws, 1), EmptyClass);

    const SuperSample ss1 = grid_from_labels({{0, 1}}, 2);
    draws.push_back(constant_predictor_draw(ss1, 4, 2));
    const auto reports0 = compute_draw_reports(draws[0], 21);
    CHECK(reports0[1].skipped);
    std::vector<ClassBoundReport> per_draw;
    for (const auto& d : draws) per_draw.push_back(compute_draw_reports(d, 21)[1]);
    const ClassAggregate agg = aggregate_class(per_draw, 1);
    CHECK(agg.draws_skipped == 1);
    CHECK(agg.draws_contributing == 1);
}

TEST_CASE("standard_gen_bound is the weighted sum and validates weights") {
    ClassAggregate a;
    a.class_id = 0;
    a.bound_delta_l_cmi = 0.2;
    ClassAggregate b;
    b.class_id = 1;
    b.bound_delta_l_cmi = 0.4;
    const std::vector<ClassAggregate> reports = {a, b};
    CHECK(standard_gen_bound(reports, {{0, 0.5}, {1, 0.5}}, BoundSelector::delta_l_cmi) ==
          Approx(0.3).epsilon(1e-15));
    // weights must cover exactly the reported classes
    CHECK_THROWS_AS(standard_gen_bound(reports, {{0, 1.0}}, BoundSelector::delta_l_cmi),
                    std::invalid_argument);
    CHECK_THROWS_AS(standard_gen_bound(reports, {{0, 0.5}, {2, 0.5}}, BoundSelector::delta_l_cmi),
                    std::invalid_argument);

    // single-class data: aggregation equals that class's bound
    const std::vector<ClassAggregate> single = {a};
    CHECK(standard_gen_bound(single, {{0, 1.0}}, BoundSelector::delta_l_cmi) == a.bound_delta_l_cmi);
}

TEST_CASE("subtask over the full class set reproduces the standard aggregation") {
    const SuperSample ss = grid_from_labels({{0, 1}, {1, 0}, {0, 0}, {1, 1}}, 2);
    std::vector<DrawTrials> draws;
    for (int d = 0; d < 3; ++d) {
        std::vector<TrialRecord> trials;
        const auto masks = all_masks(ss.n());
        for (std::size_t k = 0; k < masks.size(); ++k)
            trials.push_back(make_trial(ss, masks[k], memorizer_rule(ss), static_cast<int>(k)));
        draws.push_back(make_draw_trials(ss, std::move(trials), LossKind::zero_one, d));
    }
    const auto weights = empirical_class_weights(draws);
    SubtaskSpec full;
    full.classes = {0, 1};
    full.weights = {weights.at(0), weights.at(1)};
    const SubtaskReport sub = subtask_report(draws, full);

    std::vector<ClassAggregate> aggs;
    for (int y : {0, 1}) {
        std::vector<ClassBoundReport> per_draw;
        for (const auto& d : draws) per_draw.push_back(compute_draw_reports(d, 21)[y]);
        aggs.push_back(aggregate_class(per_draw, y));
    }
    const double std_gen = weights.at(0) * aggs[0].gen_estimate + weights.at(1) * aggs[1].gen_estimate;
    const double std_bound = standard_gen_bound(aggs, weights, BoundSelector::delta_l_cmi);
    CHECK(sub.gen_estimate == Approx(std_gen).margin(1e-12));
    CHECK(sub.bound_delta_l_cmi == Approx(std_bound).margin(1e-12));

    // |A| = 1 reduces to that class's report
    SubtaskSpec one;
    one.classes = {1};
    one.weights = {1.0};
    const SubtaskReport s1 = subtask_report(draws, one);
    CHECK(s1.gen_estimate == Approx(aggs[1].gen_estimate).margin(1e-15));
    CHECK(s1.bound_f_cmi == Approx(aggs[1].bound_f_cmi).margin(1e-15));

    SubtaskSpec missing;
    missing.classes = {0, 1, 2};
    missing.weights = {0.4, 0.4, 0.2};
    CHECK_THROWS_AS(subtask_report(draws, missing), EmptyClass);
}

TEST_CASE("constant attribute reproduces the standard generalization estimate") {
    const std::vector<std::pair<int, int>> labels = {{0, 1}, {1, 0}, {0, 0}};
    const std::vector<std::pair<int, int>> attrs = {{0, 0}, {0, 0}, {0, 0}};
    const SuperSample ss = grid_from_labels(labels, 2, &attrs);
    std::vector<DrawTrials> draws;
    const auto masks = all_masks(ss.n());
    std::vector<TrialRecord> trials;
    for (std::size_t k = 0; k < masks.size(); ++k)
        trials.push_back(make_trial(ss, masks[k], memorizer_rule(ss), static_cast<int>(k)));
    draws.push_back(make_draw_trials(ss, std::move(trials), LossKind::zero_one));

    const AttributeReport ar = attribute_report(draws, 0);
    const auto weights = empirical_class_weights(draws);
    double std_gen = 0;
    for (int y : {0, 1}) {
        std::vector<ClassBoundReport> per_draw = {compute_draw_reports(draws[0], 21)[y]};
        std_gen += weights.at(y) * aggregate_class(per_draw, y).gen_estimate;
    }
    CHECK(ar.gen_estimate == Approx(std_gen).margin(1e-12));

    CHECK_THROWS_AS(attribute_report(draws, 3), EmptyClass);
}

TEST_CASE("attribute_report needs attributes everywhere") {
    const SuperSample ss = grid_from_labels({{0, 1}}, 2);  // no attributes
    std::vector<DrawTrials> draws = {constant_predictor_draw(ss, 4, 5)};
    CHECK_THROWS_AS(attribute_report(draws, 0), std::invalid_argument);
}

TEST_CASE("recall and specificity gaps equal the class-generalization errors") {
    const SuperSample ss = grid_from_labels({{0, 1}, {1, 0}, {1, 1}, {0, 0}}, 2);
    const auto masks = all_masks(ss.n());
    std::vector<TrialRecord> trials;
    for (std::size_t k = 0; k < masks.size(); ++k)
        trials.push_back(make_trial(ss, masks[k], memorizer_rule(ss), static_cast<int>(k)));
    std::vector<DrawTrials> draws = {make_draw_trials(ss, std::move(trials), LossKind::zero_one)};

    const RecallSpecificity rs = recall_specificity(draws, 1);
    CHECK(rs.recall_gap == Approx(class_gen_error(draws, 1).first).margin(1e-12));
    CHECK(rs.specificity_gap == Approx(class_gen_error(draws, 0).first).margin(1e-12));
    CHECK(rs.max_identity_residual <= 1e-12);

    // perfect classifier: both gaps exactly zero
    std::vector<TrialRecord> perfect;
    for (std::size_t k = 0; k < masks.size(); ++k)
        perfect.push_back(make_trial(
            ss, masks[k],
            [&](const Mask&, std::size_t i, int& pm, int& pp, double& lm, double& lp) {
                pm = ss.pairs[i].minus.label;
                pp = ss.pairs[i].plus.label;
                lm = 0.0;
                lp = 0.0;
            },
            static_cast<int>(k)));
    std::vector<DrawTrials> perfect_draws = {make_draw_trials(ss, std::move(perfect),
                                                              LossKind::zero_one)};
    const RecallSpecificity pr = recall_specificity(perfect_draws, 1);
    CHECK(pr.recall_gap == 0.0);
    CHECK(pr.specificity_gap == 0.0);

    // unsupported setups
    const SuperSample three = grid_from_labels({{0, 1}, {2, 1}}, 3);
    std::vector<DrawTrials> bad = {constant_predictor_draw(three, 4, 3)};
    CHECK_THROWS_AS(recall_specificity(bad, 0), Unsupported);
}

TEST_CASE("miller_madow correction never enlarges a bound") {
    const SuperSample ss = grid_from_labels({{0, 1}, {1, 0}, {0, 0}}, 2);
    std::vector<TrialRecord> trials;
    const auto masks = all_masks(ss.n());
    for (std::size_t k = 0; k < masks.size(); ++k)
        trials.push_back(make_trial(ss, masks[k], memorizer_rule(ss), static_cast<int>(k)));
    std::vector<DrawTrials> draws = {make_draw_trials(ss, std::move(trials), LossKind::zero_one)};
    for (int y : {0, 1}) {
        CHECK(class_delta_l_cmi_bound(draws, y, 21, MiCorrection::miller_madow) <=
              class_delta_l_cmi_bound(draws, y, 21, MiCorrection::none) + 1e-15);
        CHECK(class_f_cmi_bound(draws, y, 21, MiCorrection::miller_madow) <=
              class_f_cmi_bound(draws, y, 21, MiCorrection::none) + 1e-15);
    }
}

TEST_CASE("aggregate stderr follows sd over sqrt(m1)") {
    const SuperSample ss = grid_from_labels({{0, 0}, {1, 1}}, 2);
    std::vector<DrawTrials> draws;
    for (int d = 0; d < 6; ++d) draws.push_back(constant_predictor_draw(ss, 10, derive_seed(77, d)));
    std::vector<ClassBoundReport> per_draw;
    std::vector<double> values;
    for (const auto& d : draws) {
        per_draw.push_back(compute_draw_reports(d, 21)[0]);
        values.push_back(per_draw.back().gen_estimate);
    }
    const ClassAggregate agg = aggregate_class(per_draw, 0);
    double mean = 0;
    for (double v : values) mean += v;
    mean /= values.size();
    double var = 0;
    for (double v : values) var += (v - mean) * (v - mean);
    const double sd = std::sqrt(var / (values.size() - 1));
    CHECK(agg.gen_estimate == Approx(mean).margin(1e-15));
    CHECK(agg.stderr_ == Approx(sd / std::sqrt(6.0)).margin(1e-15));
}
