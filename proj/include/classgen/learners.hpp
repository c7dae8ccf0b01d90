#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "classgen/core.hpp"
#include "classgen/rng.hpp"

namespace classgen {

enum class LossKind { zero_one, clipped_cross_entropy };

/// Loss description plus the sub-gaussian constant used by the KL bounds.
/// For losses bounded in [a,b] the constant is (b-a)/2, so 1/2 here since
/// every loss this library produces lies in [0,1].
struct LossSpec {
    LossKind kind = LossKind::zero_one;
    double cap = 10.0;               // clipping cap for cross-entropy, in nats
    double subgaussian_sigma = 0.5;
};

enum class LearnerKind { knn, logistic, mlp, finite_erm };

/// A finite hypothesis class: each hypothesis is a full truth table over an
/// enumerated input domain, mapping input id -> label.
struct HypothesisTable {
    std::vector<std::vector<int>> rows;  // rows[h][input_id] = label
    int num_inputs() const { return rows.empty() ? 0 : static_cast<int>(rows[0].size()); }
    int size() const { return static_cast<int>(rows.size()); }
};

/// Parses the hypothesis table text format: one hypothesis per line, each a
/// full truth table of space-separated "input_id:label" entries. Blank lines
/// and '#' comments are skipped.
inline HypothesisTable parse_hypothesis_table(std::istream& in) {
    HypothesisTable table;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream row(line);
        std::vector<std::pair<int, int>> entries;
        std::string tok;
        while (row >> tok) {
            const auto colon = tok.find(':');
            if (colon == std::string::npos)
                throw std::invalid_argument("hypothesis table line " + std::to_string(line_no) +
                                            ": expected input_id:label, got '" + tok + "'");
            entries.emplace_back(std::stoi(tok.substr(0, colon)), std::stoi(tok.substr(colon + 1)));
        }
        if (entries.empty()) continue;
        std::sort(entries.begin(), entries.end());
        std::vector<int> labels(entries.size(), -1);
        for (std::size_t i = 0; i < entries.size(); ++i) {
            if (entries[i].first != static_cast<int>(i))
                throw std::invalid_argument("hypothesis table line " + std::to_string(line_no) +
                                            ": input ids must cover 0..k-1 exactly");
            labels[i] = entries[i].second;
        }
        if (!table.rows.empty() && labels.size() != table.rows[0].size())
            throw std::invalid_argument("hypothesis table line " + std::to_string(line_no) +
                                        ": truth table length differs from previous rows");
        table.rows.push_back(std::move(labels));
    }
    if (table.rows.empty()) throw std::invalid_argument("hypothesis table: no hypotheses");
    return table;
}

inline HypothesisTable load_hypothesis_table(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("load_hypothesis_table: cannot open '" + path + "'");
    return parse_hypothesis_table(in);
}

/// The randomized learning map P_{W|S}: which algorithm to run and under
/// which loss. Stochasticity enters only through the explicit training seed.
struct LearnerSpec {
    LearnerKind kind = LearnerKind::knn;
    LossSpec loss;

    // knn
    int k = 1;

    // logistic / mlp
    int steps = 200;
    double step_size = 0.5;
    double init_scale = 0.0;
    int hidden_width = 16;

    // finite_erm; tie break is lowest index, the only supported rule
    HypothesisTable hypothesis_table;

    void validate() const {
        switch (kind) {
            case LearnerKind::knn:
                if (k < 1) throw std::invalid_argument("LearnerSpec: k must be >= 1");
                break;
            case LearnerKind::logistic:
            case LearnerKind::mlp:
                if (steps < 0) throw std::invalid_argument("LearnerSpec: steps must be >= 0");
                if (step_size <= 0.0) throw std::invalid_argument("LearnerSpec: step_size must be > 0");
                if (kind == LearnerKind::mlp && hidden_width < 1)
                    throw std::invalid_argument("LearnerSpec: hidden_width must be >= 1");
                break;
            case LearnerKind::finite_erm:
                if (table_empty()) throw std::invalid_argument("LearnerSpec: empty hypothesis table");
                break;
        }
        if (loss.cap <= 0.0) throw std::invalid_argument("LossSpec: cap must be > 0");
    }

    bool table_empty() const { return hypothesis_table.rows.empty(); }
};

/// An immutable trained model: a prediction rule, a probability score, and
/// (for finite learners) the selected hypothesis index.
struct TrainedModel {
    std::function<int(std::span<const double>)> predict;
    std::function<std::vector<double>(std::span<const double>)> score;
    std::optional<int> hypothesis_index;
    int num_classes = 0;
    int dimension = 0;
    LossSpec loss;
};

/// Loss of a model on one example, always in [0,1]. Zero-one is
/// 1{predict != label}; clipped cross-entropy is min(-ln score[label], cap)/cap.
inline double eval_loss(const TrainedModel& model, const Example& example) {
    if (static_cast<int>(example.features.size()) != model.dimension)
        throw std::invalid_argument("eval_loss: feature dimension mismatch");
    if (model.loss.kind == LossKind::zero_one)
        return model.predict(example.features) == example.label ? 0.0 : 1.0;
    const auto scores = model.score(example.features);
    const double p = scores[static_cast<std::size_t>(example.label)];
    const double nll = (p <= 0.0) ? model.loss.cap : std::min(-std::log(p), model.loss.cap);
    return std::min(nll, model.loss.cap) / model.loss.cap;
}

namespace detail {

inline std::vector<double> softmax(std::span<const double> logits) {
    const double m = *std::max_element(logits.begin(), logits.end());
    std::vector<double> out(logits.size());
    double total = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out[i] = std::exp(logits[i] - m);
        total += out[i];
    }
    for (double& v : out) v /= total;
    return out;
}

inline int argmax_lowest(std::span<const double> values) {
    int best = 0;
    for (std::size_t i = 1; i < values.size(); ++i)
        if (values[i] > values[best]) best = static_cast<int>(i);
    return best;
}

struct KnnModel {
    std::vector<Example> points;
    int k;
    int num_classes;

    std::vector<double> votes(std::span<const double> x) const {
        // distance ties resolve toward lower index: strict < keeps the first
        std::vector<std::pair<double, int>> d;
        d.reserve(points.size());
        for (std::size_t i = 0; i < points.size(); ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < x.size(); ++j) {
                const double diff = points[i].features[j] - x[j];
                s += diff * diff;
            }
            d.emplace_back(s, static_cast<int>(i));
        }
        const std::size_t kk = std::min<std::size_t>(static_cast<std::size_t>(k), d.size());
        std::partial_sort(d.begin(), d.begin() + kk, d.end());
        std::vector<double> v(num_classes, 0.0);
        for (std::size_t i = 0; i < kk; ++i) v[points[d[i].second].label] += 1.0 / kk;
        return v;
    }
};

struct LinearNet {
    // one optional tanh hidden layer, then softmax readout
    int in_dim, hidden, out_dim;
    std::vector<double> w1, b1, w2, b2;  // hidden==0 -> w2/b2 unused, w1 is out x in

    std::vector<double> logits(std::span<const double> x) const {
        if (hidden == 0) {
            std::vector<double> z(out_dim);
            for (int o = 0; o < out_dim; ++o) {
                double s = b1[o];
                for (int i = 0; i < in_dim; ++i) s += w1[o * in_dim + i] * x[i];
                z[o] = s;
            }
            return z;
        }
        std::vector<double> h(hidden);
        for (int j = 0; j < hidden; ++j) {
            double s = b1[j];
            for (int i = 0; i < in_dim; ++i) s += w1[j * in_dim + i] * x[i];
            h[j] = std::tanh(s);
        }
        std::vector<double> z(out_dim);
        for (int o = 0; o < out_dim; ++o) {
            double s = b2[o];
            for (int j = 0; j < hidden; ++j) s += w2[o * hidden + j] * h[j];
            z[o] = s;
        }
        return z;
    }
};

/// Full-batch gradient descent on the [0,1]-scaled clipped cross-entropy.
/// Samples whose loss sits at the cap contribute zero gradient.
inline void gradient_descent(LinearNet& net, std::span<const Example> data, int steps,
                             double step_size, double cap) {
    const std::size_t n = data.size();
    const double scale = 1.0 / (cap * static_cast<double>(n));
    for (int it = 0; it < steps; ++it) {
        std::vector<double> g_w1(net.w1.size(), 0.0), g_b1(net.b1.size(), 0.0);
        std::vector<double> g_w2(net.w2.size(), 0.0), g_b2(net.b2.size(), 0.0);
        for (const auto& e : data) {
            std::vector<double> h;
            std::vector<double> z;
            if (net.hidden == 0) {
                z = net.logits(e.features);
            } else {
                h.resize(net.hidden);
                for (int j = 0; j < net.hidden; ++j) {
                    double s = net.b1[j];
                    for (int i = 0; i < net.in_dim; ++i) s += net.w1[j * net.in_dim + i] * e.features[i];
                    h[j] = std::tanh(s);
                }
                z.resize(net.out_dim);
                for (int o = 0; o < net.out_dim; ++o) {
                    double s = net.b2[o];
                    for (int j = 0; j < net.hidden; ++j) s += net.w2[o * net.hidden + j] * h[j];
                    z[o] = s;
                }
            }
            const auto p = softmax(z);
            const double py = p[static_cast<std::size_t>(e.label)];
            if (-std::log(std::max(py, 1e-300)) >= cap) continue;  // clipped: flat region
            // d(scaled CE)/dz = (softmax - onehot) * scale
            std::vector<double> dz(net.out_dim);
            for (int o = 0; o < net.out_dim; ++o) dz[o] = (p[o] - (o == e.label ? 1.0 : 0.0)) * scale;
            if (net.hidden == 0) {
                for (int o = 0; o < net.out_dim; ++o) {
                    for (int i = 0; i < net.in_dim; ++i)
                        g_w1[o * net.in_dim + i] += dz[o] * e.features[i];
                    g_b1[o] += dz[o];
                }
            } else {
                std::vector<double> dh(net.hidden, 0.0);
                for (int o = 0; o < net.out_dim; ++o) {
                    for (int j = 0; j < net.hidden; ++j) {
                        g_w2[o * net.hidden + j] += dz[o] * h[j];
                        dh[j] += dz[o] * net.w2[o * net.hidden + j];
                    }
                    g_b2[o] += dz[o];
                }
                for (int j = 0; j < net.hidden; ++j) {
                    const double dt = dh[j] * (1.0 - h[j] * h[j]);
                    for (int i = 0; i < net.in_dim; ++i)
                        g_w1[j * net.in_dim + i] += dt * e.features[i];
                    g_b1[j] += dt;
                }
            }
        }
        for (std::size_t i = 0; i < net.w1.size(); ++i) net.w1[i] -= step_size * g_w1[i];
        for (std::size_t i = 0; i < net.b1.size(); ++i) net.b1[i] -= step_size * g_b1[i];
        for (std::size_t i = 0; i < net.w2.size(); ++i) net.w2[i] -= step_size * g_w2[i];
        for (std::size_t i = 0; i < net.b2.size(); ++i) net.b2[i] -= step_size * g_b2[i];
    }
}

}  // namespace detail

/// Empirical risk of one hypothesis row over a training set whose examples
/// carry input ids in features[0].
inline double finite_erm_risk(const HypothesisTable& table, int h, std::span<const Example> data) {
    double risk = 0.0;
    for (const auto& e : data) {
        const int input = static_cast<int>(e.features.at(0));
        if (input < 0 || input >= table.num_inputs())
            throw std::invalid_argument("finite_erm: input id out of table range");
        risk += (table.rows[h][input] == e.label) ? 0.0 : 1.0;
    }
    return risk;
}

/// Trains a model. Deterministic given (spec, training-set order, seed).
/// knn and finite_erm ignore the seed; gradient learners use it only for
/// the scaled random initialization.
inline TrainedModel train(const LearnerSpec& spec, std::span<const Example> train_set,
                          int num_classes, Seed seed) {
    spec.validate();
    if (train_set.empty()) throw std::invalid_argument("train: empty training set");
    for (const auto& e : train_set)
        if (e.label < 0 || e.label >= num_classes)
            throw std::invalid_argument("train: label out of range");
    const int dim = static_cast<int>(train_set[0].features.size());

    TrainedModel model;
    model.num_classes = num_classes;
    model.dimension = dim;
    model.loss = spec.loss;

    switch (spec.kind) {
        case LearnerKind::knn: {
            auto knn = std::make_shared<detail::KnnModel>();
            knn->points.assign(train_set.begin(), train_set.end());
            knn->k = spec.k;
            knn->num_classes = num_classes;
            model.score = [knn](std::span<const double> x) { return knn->votes(x); };
            model.predict = [knn](std::span<const double> x) {
                return detail::argmax_lowest(knn->votes(x));
            };
            break;
        }
        case LearnerKind::logistic:
        case LearnerKind::mlp: {
            auto net = std::make_shared<detail::LinearNet>();
            net->in_dim = dim;
            net->hidden = (spec.kind == LearnerKind::mlp) ? spec.hidden_width : 0;
            net->out_dim = num_classes;
            Rng rng(seed);
            auto init = [&](std::vector<double>& v, std::size_t size) {
                v.resize(size);
                for (auto& w : v) w = spec.init_scale * rng.normal();
            };
            if (net->hidden == 0) {
                init(net->w1, static_cast<std::size_t>(num_classes) * dim);
                init(net->b1, static_cast<std::size_t>(num_classes));
            } else {
                init(net->w1, static_cast<std::size_t>(net->hidden) * dim);
                init(net->b1, static_cast<std::size_t>(net->hidden));
                init(net->w2, static_cast<std::size_t>(num_classes) * net->hidden);
                init(net->b2, static_cast<std::size_t>(num_classes));
            }
            detail::gradient_descent(*net, train_set, spec.steps, spec.step_size, spec.loss.cap);
            model.score = [net](std::span<const double> x) {
                return detail::softmax(net->logits(x));
            };
            model.predict = [net](std::span<const double> x) {
                return detail::argmax_lowest(detail::softmax(net->logits(x)));
            };
            break;
        }
        case LearnerKind::finite_erm: {
            const auto table = std::make_shared<HypothesisTable>(spec.hypothesis_table);
            int best = 0;
            double best_risk = std::numeric_limits<double>::infinity();
            for (int h = 0; h < table->size(); ++h) {
                const double r = finite_erm_risk(*table, h, train_set);
                if (r < best_risk) {  // strict: ties break to the lowest index
                    best_risk = r;
                    best = h;
                }
            }
            const int chosen = best;
            const int nc = num_classes;
            model.hypothesis_index = chosen;
            model.predict = [table, chosen](std::span<const double> x) {
                const int input = static_cast<int>(x[0]);
                if (input < 0 || input >= table->num_inputs())
                    throw std::invalid_argument("finite_erm predict: input id out of range");
                return table->rows[chosen][input];
            };
            model.score = [table, chosen, nc](std::span<const double> x) {
                const int input = static_cast<int>(x[0]);
                std::vector<double> s(nc, 0.0);
                s[static_cast<std::size_t>(table->rows[chosen][input])] = 1.0;
                return s;
            };
            break;
        }
    }
    return model;
}

}  // namespace classgen
