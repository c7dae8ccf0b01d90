#pragma once

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "classgen/core.hpp"
#include "classgen/rng.hpp"

namespace classgen {

enum class GeneratorKind { gaussian_mixture, concentric, xor_quadrants };

/// Optional rule assigning a sensitive attribute to each drawn example.
///   none      - no attribute
///   halfspace - attribute = 1{features[axis] >= threshold}
///   component - attribute = the mixture component the example was drawn
///               from (its label before noise)
struct AttributeRule {
    enum class Kind { none, halfspace, component } kind = Kind::none;
    int axis = 0;
    double threshold = 0.0;
};

/// Synthetic dataset description. `means` fixes both the number of classes
/// and the feature dimension. For `concentric`, means[c][0] is the ring
/// radius of class c; for `xor_quadrants` the means only fix the dimension
/// and the box half-width is cov_scale.
struct GeneratorSpec {
    GeneratorKind kind = GeneratorKind::gaussian_mixture;
    std::vector<std::vector<double>> means;
    std::vector<double> cov_scale;    // per class, > 0
    std::vector<double> priors;       // sums to 1
    std::vector<double> label_noise;  // per class, in [0,1)
    AttributeRule attribute_rule;

    int num_classes() const { return static_cast<int>(priors.size()); }
    int dimension() const { return means.empty() ? 0 : static_cast<int>(means[0].size()); }

    void validate() const {
        const std::size_t c = priors.size();
        if (c == 0) throw std::invalid_argument("GeneratorSpec: no classes");
        if (means.size() != c || cov_scale.size() != c || label_noise.size() != c)
            throw std::invalid_argument("GeneratorSpec: per-class field lengths disagree");
        double total = 0.0;
        for (double p : priors) {
            if (p < 0.0) throw std::invalid_argument("GeneratorSpec: negative prior");
            total += p;
        }
        if (std::abs(total - 1.0) > 1e-12)
            throw std::invalid_argument("GeneratorSpec: priors must sum to 1");
        for (double s : cov_scale)
            if (s <= 0.0) throw std::invalid_argument("GeneratorSpec: covariance scale must be > 0");
        for (double q : label_noise)
            if (q < 0.0 || q >= 1.0)
                throw std::invalid_argument("GeneratorSpec: label noise must lie in [0,1)");
        for (const auto& m : means)
            if (m.size() != means[0].size())
                throw std::invalid_argument("GeneratorSpec: mean dimensions disagree");
        if (kind == GeneratorKind::xor_quadrants && c != 2)
            throw std::invalid_argument("GeneratorSpec: xor generator is binary");
        if (kind == GeneratorKind::xor_quadrants && dimension() < 2)
            throw std::invalid_argument("GeneratorSpec: xor generator needs dimension >= 2");
        if (attribute_rule.kind == AttributeRule::Kind::halfspace &&
            (attribute_rule.axis < 0 || attribute_rule.axis >= dimension()))
            throw std::invalid_argument("GeneratorSpec: attribute axis out of range");
    }

    int num_attributes() const {
        switch (attribute_rule.kind) {
            case AttributeRule::Kind::none: return 0;
            case AttributeRule::Kind::halfspace: return 2;
            case AttributeRule::Kind::component: return num_classes();
        }
        return 0;
    }
};

/// Draws `count` i.i.d. examples: component ~ priors, features from the
/// component law, then the label flips to a uniformly random other class
/// with the component's noise probability. Deterministic given the seed.
inline std::vector<Example> sample_iid(const GeneratorSpec& spec, std::size_t count, Seed seed) {
    spec.validate();
    Rng rng(seed);
    const int num_classes = spec.num_classes();
    const int dim = spec.dimension();
    std::vector<Example> out;
    out.reserve(count);
    for (std::size_t k = 0; k < count; ++k) {
        const int component = static_cast<int>(rng.categorical(spec.priors));
        Example e;
        e.features.resize(dim);
        switch (spec.kind) {
            case GeneratorKind::gaussian_mixture:
                for (int d = 0; d < dim; ++d)
                    e.features[d] = spec.means[component][d] +
                                    spec.cov_scale[component] * rng.normal();
                break;
            case GeneratorKind::concentric: {
                const double radius =
                    spec.means[component][0] + spec.cov_scale[component] * rng.normal();
                const double theta = rng.uniform(0.0, 6.283185307179586476925286766559);
                e.features[0] = radius * std::cos(theta);
                if (dim > 1) e.features[1] = radius * std::sin(theta);
                for (int d = 2; d < dim; ++d)
                    e.features[d] = spec.cov_scale[component] * rng.normal();
                break;
            }
            case GeneratorKind::xor_quadrants:
                for (int d = 0; d < dim; ++d)
                    e.features[d] = rng.uniform(-spec.cov_scale[component], spec.cov_scale[component]);
                break;
        }
        int label = component;
        if (spec.kind == GeneratorKind::xor_quadrants)
            label = (e.features[0] * e.features[1] < 0.0) ? 1 : 0;
        const int true_component = label;
        if (spec.label_noise[true_component] > 0.0 && rng.bernoulli(spec.label_noise[true_component])) {
            if (num_classes > 1) {
                int other = static_cast<int>(rng.below(static_cast<std::uint64_t>(num_classes - 1)));
                if (other >= label) ++other;
                label = other;
            }
        }
        e.label = label;
        switch (spec.attribute_rule.kind) {
            case AttributeRule::Kind::none: break;
            case AttributeRule::Kind::halfspace:
                e.attribute = e.features[spec.attribute_rule.axis] >= spec.attribute_rule.threshold
                                  ? 1
                                  : 0;
                break;
            case AttributeRule::Kind::component:
                e.attribute = true_component;
                break;
        }
        out.push_back(std::move(e));
    }
    return out;
}

/// Column layout of a CSV dataset: named feature columns, one label column,
/// optionally one attribute column.
struct CsvSchema {
    std::vector<std::string> feature_columns;
    std::string label_column;
    std::optional<std::string> attribute_column;
};

/// The result of a CSV load. Labels (and attributes) are re-indexed to
/// 0..k-1 in first-appearance order; the maps record the original tokens.
struct LoadedCsv {
    std::vector<Example> examples;
    int num_classes = 0;
    int num_attributes = 0;
    int dimension = 0;
    std::vector<std::string> label_names;      // index -> original token
    std::vector<std::string> attribute_names;  // index -> original token
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur.push_back(ch);
        }
    }
    fields.push_back(cur);
    for (auto& f : fields) {
        const auto b = f.find_first_not_of(" \t");
        const auto e = f.find_last_not_of(" \t");
        f = (b == std::string::npos) ? std::string() : f.substr(b, e - b + 1);
    }
    return fields;
}

inline double parse_double_field(const std::string& field, const std::string& column, int row) {
    double value = 0.0;
    const char* first = field.data();
    const char* last = field.data() + field.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last)
        throw std::invalid_argument("load_csv: non-numeric value '" + field + "' in column '" +
                                    column + "' at data row " + std::to_string(row));
    return value;
}

}  // namespace detail

/// Loads a CSV file per the documented dialect: required header row, comma
/// separated, UTF-8, '#'-prefixed comment lines skipped. Errors carry the
/// offending data row number.
inline LoadedCsv load_csv(const std::string& path, const CsvSchema& schema) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("load_csv: cannot open '" + path + "'");

    std::string line;
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        header = detail::split_csv_line(line);
        break;
    }
    if (header.empty()) throw std::invalid_argument("load_csv: missing header row in '" + path + "'");

    auto column_index = [&](const std::string& name) {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return static_cast<int>(i);
        throw std::invalid_argument("load_csv: unknown column '" + name + "' in '" + path + "'");
    };

    std::vector<int> feature_idx;
    for (const auto& c : schema.feature_columns) feature_idx.push_back(column_index(c));
    const int label_idx = column_index(schema.label_column);
    int attribute_idx = -1;
    if (schema.attribute_column) attribute_idx = column_index(*schema.attribute_column);

    LoadedCsv out;
    out.dimension = static_cast<int>(feature_idx.size());
    std::map<std::string, int> label_ids;
    std::map<std::string, int> attribute_ids;

    int row = 0;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        ++row;
        const auto fields = detail::split_csv_line(line);
        if (fields.size() != header.size())
            throw std::invalid_argument("load_csv: row " + std::to_string(row) + " has " +
                                        std::to_string(fields.size()) + " fields, header has " +
                                        std::to_string(header.size()));
        Example e;
        e.features.reserve(feature_idx.size());
        for (std::size_t k = 0; k < feature_idx.size(); ++k)
            e.features.push_back(
                detail::parse_double_field(fields[feature_idx[k]], schema.feature_columns[k], row));

        const std::string& label_token = fields[label_idx];
        auto [it, inserted] = label_ids.try_emplace(label_token, static_cast<int>(out.label_names.size()));
        if (inserted) out.label_names.push_back(label_token);
        e.label = it->second;

        if (attribute_idx >= 0) {
            const std::string& attr_token = fields[attribute_idx];
            auto [at, ains] =
                attribute_ids.try_emplace(attr_token, static_cast<int>(out.attribute_names.size()));
            if (ains) out.attribute_names.push_back(attr_token);
            e.attribute = at->second;
        }
        out.examples.push_back(std::move(e));
    }
    out.num_classes = static_cast<int>(out.label_names.size());
    out.num_attributes = static_cast<int>(out.attribute_names.size());
    return out;
}

/// Writes examples in the same dialect load_csv reads. Floats use 17
/// significant digits so a load round-trips exactly.
inline void save_csv(const std::string& path, std::span<const Example> examples,
                     bool with_attribute) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_csv: cannot open '" + path + "' for writing");
    const int dim = examples.empty() ? 0 : static_cast<int>(examples[0].features.size());
    for (int d = 0; d < dim; ++d) out << "x" << d << ",";
    if (examples.empty()) out << "x0,";  // header-only file still names one feature column
    out << "label";
    if (with_attribute) out << ",attribute";
    out << "\n";
    char buf[64];
    for (const auto& e : examples) {
        for (double f : e.features) {
            std::snprintf(buf, sizeof(buf), "%.17g", f);
            out << buf << ",";
        }
        out << e.label;
        if (with_attribute) out << "," << (e.attribute ? *e.attribute : 0);
        out << "\n";
    }
    if (!out) throw std::runtime_error("save_csv: write failure on '" + path + "'");
}

}  // namespace classgen
