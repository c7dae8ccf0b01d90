#pragma once

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "classgen/harness.hpp"

namespace classgen {

/// One line of rows.csv: the per-(n, class) aggregate.
struct ReportRow {
    int n = 0;
    int class_id = 0;
    double gen_estimate = 0.0;
    double stderr_ = 0.0;
    double bound_f_cmi = 0.0;
    double bound_delta_l_cmi = 0.0;
    double bound_e_cmi = 0.0;
    std::optional<double> bound_class_cmi;  // blank when unavailable
    double n_y_half = 0.0;

    bool operator==(const ReportRow&) const = default;
};

namespace detail {

inline std::string format_double(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline double parse_double_token(const std::string& tok, const std::string& where) {
    if (tok == "inf") return std::numeric_limits<double>::infinity();
    if (tok == "-inf") return -std::numeric_limits<double>::infinity();
    double v = 0.0;
    auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || p != tok.data() + tok.size())
        throw std::invalid_argument("rows.csv: bad number '" + tok + "' in " + where);
    return v;
}

}  // namespace detail

inline std::vector<ReportRow> rows_from_result(const ExperimentResult& result) {
    std::vector<ReportRow> rows;
    for (const auto& nr : result.per_n) {
        for (const auto& agg : nr.aggregates) {
            ReportRow r;
            r.n = nr.n;
            r.class_id = agg.class_id;
            r.gen_estimate = agg.gen_estimate;
            r.stderr_ = agg.stderr_;
            r.bound_f_cmi = agg.bound_f_cmi;
            r.bound_delta_l_cmi = agg.bound_delta_l_cmi;
            r.bound_e_cmi = agg.bound_e_cmi;
            r.bound_class_cmi = agg.bound_class_cmi;
            r.n_y_half = agg.n_y_half;
            rows.push_back(r);
        }
    }
    return rows;
}

inline constexpr const char* kRowsHeader =
    "n,class,gen_estimate,stderr,bound_f_cmi,bound_delta_l_cmi,bound_e_cmi,bound_class_cmi,"
    "n_y_half";

inline void emit_rows(std::ostream& out, std::span<const ReportRow> rows) {
    out << kRowsHeader << "\n";
    for (const auto& r : rows) {
        out << r.n << "," << r.class_id << "," << detail::format_double(r.gen_estimate) << ","
            << detail::format_double(r.stderr_) << "," << detail::format_double(r.bound_f_cmi)
            << "," << detail::format_double(r.bound_delta_l_cmi) << ","
            << detail::format_double(r.bound_e_cmi) << ","
            << (r.bound_class_cmi ? detail::format_double(*r.bound_class_cmi) : std::string())
            << "," << detail::format_double(r.n_y_half) << "\n";
    }
}

inline std::vector<ReportRow> parse_rows(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw std::invalid_argument("rows.csv: empty file");
    while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
    if (line != kRowsHeader) throw std::invalid_argument("rows.csv: unexpected header '" + line + "'");
    std::vector<ReportRow> rows;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::string cur;
        for (char c : line) {
            if (c == ',') {
                f.push_back(cur);
                cur.clear();
            } else {
                cur.push_back(c);
            }
        }
        f.push_back(cur);
        if (f.size() != 9)
            throw std::invalid_argument("rows.csv: line " + std::to_string(line_no) +
                                        " has " + std::to_string(f.size()) + " fields");
        const std::string where = "line " + std::to_string(line_no);
        ReportRow r;
        r.n = static_cast<int>(detail::parse_double_token(f[0], where));
        r.class_id = static_cast<int>(detail::parse_double_token(f[1], where));
        r.gen_estimate = detail::parse_double_token(f[2], where);
        r.stderr_ = detail::parse_double_token(f[3], where);
        r.bound_f_cmi = detail::parse_double_token(f[4], where);
        r.bound_delta_l_cmi = detail::parse_double_token(f[5], where);
        r.bound_e_cmi = detail::parse_double_token(f[6], where);
        if (!f[7].empty()) r.bound_class_cmi = detail::parse_double_token(f[7], where);
        r.n_y_half = detail::parse_double_token(f[8], where);
        rows.push_back(r);
    }
    return rows;
}

// ---------------------------------------------------------------------------
// summary.json
// ---------------------------------------------------------------------------

namespace detail {

inline json json_number(double v) {
    if (std::isinf(v)) return v > 0 ? json("inf") : json("-inf");
    if (std::isnan(v)) return json("nan");
    return json(v);
}

inline json json_opt(const std::optional<double>& v) {
    return v ? json_number(*v) : json(nullptr);
}

}  // namespace detail

inline json to_json(const PairCmi& p) {
    json j;
    j["pair"] = p.pair;
    j["mi_f"] = detail::json_number(p.mi_f);
    j["mi_e"] = detail::json_number(p.mi_e);
    j["mi_delta"] = detail::json_number(p.mi_delta);
    j["mi_w"] = detail::json_opt(p.mi_w);
    j["indicator_max"] = p.indicator_max;
    return j;
}

inline json to_json(const ClassBoundReport& r) {
    json j;
    j["class"] = r.class_id;
    j["n_y_half"] = r.n_y_half;
    j["skipped"] = r.skipped;
    if (r.skipped) return j;
    j["gen_estimate"] = detail::json_number(r.gen_estimate);
    j["mc_stderr"] = detail::json_number(r.mc_stderr);
    j["bound_class_cmi"] = detail::json_opt(r.bound_class_cmi);
    j["bound_f_cmi"] = detail::json_number(r.bound_f_cmi);
    j["bound_e_cmi"] = detail::json_number(r.bound_e_cmi);
    j["bound_delta_l_cmi"] = detail::json_number(r.bound_delta_l_cmi);
    json pp = json::array();
    for (const auto& p : r.per_pair) pp.push_back(to_json(p));
    j["per_pair_cmi"] = pp;
    return j;
}

inline json to_json(const ClassAggregate& a) {
    json j;
    j["class"] = a.class_id;
    j["n_y_half"] = a.n_y_half;
    j["gen_estimate"] = detail::json_number(a.gen_estimate);
    j["stderr"] = detail::json_number(a.stderr_);
    j["gen_std"] = detail::json_number(a.gen_std);
    j["bound_class_cmi"] = detail::json_opt(a.bound_class_cmi);
    j["bound_f_cmi"] = detail::json_number(a.bound_f_cmi);
    j["bound_e_cmi"] = detail::json_number(a.bound_e_cmi);
    j["bound_delta_l_cmi"] = detail::json_number(a.bound_delta_l_cmi);
    j["draws_contributing"] = a.draws_contributing;
    j["draws_skipped"] = a.draws_skipped;
    return j;
}

inline json to_json(const StandardReport& s) {
    json j;
    j["gen_estimate"] = detail::json_number(s.gen_estimate);
    j["stderr"] = detail::json_number(s.stderr_);
    j["bound_delta_l_cmi"] = detail::json_number(s.bound_delta_l_cmi);
    j["bound_f_cmi"] = detail::json_number(s.bound_f_cmi);
    j["bound_e_cmi"] = detail::json_number(s.bound_e_cmi);
    j["bound_class_cmi"] = detail::json_opt(s.bound_class_cmi);
    json w = json::object();
    for (const auto& [y, v] : s.weights) w[std::to_string(y)] = v;
    j["weights"] = w;
    return j;
}

inline json to_json(const SubtaskReport& s) {
    json j;
    j["gen_estimate"] = detail::json_number(s.gen_estimate);
    j["stderr"] = detail::json_number(s.stderr_);
    j["bound_delta_l_cmi"] = detail::json_number(s.bound_delta_l_cmi);
    j["bound_f_cmi"] = detail::json_number(s.bound_f_cmi);
    j["bound_e_cmi"] = detail::json_number(s.bound_e_cmi);
    j["bound_class_cmi"] = detail::json_opt(s.bound_class_cmi);
    if (s.baseline_bound) {
        j["baseline_bound"] = detail::json_opt(s.baseline_bound);
        j["baseline_distribution_kl"] = detail::json_opt(s.baseline_distribution_kl);
        j["baseline_weight_mi"] = detail::json_opt(s.baseline_weight_mi);
    }
    return j;
}

inline json to_json(const AttributeReport& a) {
    json j;
    j["attribute"] = a.attribute;
    j["n_t_half"] = a.n_t_half;
    j["gen_estimate"] = detail::json_number(a.gen_estimate);
    j["stderr"] = detail::json_number(a.stderr_);
    j["bound_delta_l_cmi"] = detail::json_number(a.bound_delta_l_cmi);
    j["draws_contributing"] = a.draws_contributing;
    j["draws_skipped"] = a.draws_skipped;
    return j;
}

inline json to_json(const ExactReport& e) {
    json j;
    j["expectation_mode"] = e.expectation_mode;
    j["weight_entropy_nats"] = detail::json_number(e.weight_entropy);
    if (e.standard_gen) j["standard_gen"] = detail::json_number(*e.standard_gen);
    json classes = json::array();
    for (const auto& c : e.classes) {
        json cj;
        cj["class"] = c.class_id;
        cj["normalizer"] = c.normalizer;
        cj["gen"] = detail::json_number(c.gen);
        cj["bound_class_cmi"] = detail::json_number(c.bound_class_cmi);
        cj["bound_f_cmi"] = detail::json_number(c.bound_f_cmi);
        cj["bound_e_cmi"] = detail::json_number(c.bound_e_cmi);
        cj["bound_delta_l_cmi"] = detail::json_number(c.bound_delta_l_cmi);
        cj["kl_nats"] = detail::json_opt(c.kl_divergence_nats);
        cj["bound_kl"] = detail::json_opt(c.bound_kl);
        cj["gen_mi_route"] = detail::json_opt(c.gen_mi_route);
        classes.push_back(cj);
    }
    j["classes"] = classes;
    if (e.subtask) {
        json sj;
        sj["classes"] = e.subtask->spec.classes;
        sj["weights"] = e.subtask->spec.weights;
        sj["gen"] = detail::json_number(e.subtask->gen);
        sj["bound_delta_l_cmi"] = detail::json_number(e.subtask->bound_delta_l_cmi);
        sj["bound_f_cmi"] = detail::json_number(e.subtask->bound_f_cmi);
        sj["bound_e_cmi"] = detail::json_number(e.subtask->bound_e_cmi);
        sj["bound_class_cmi"] = detail::json_number(e.subtask->bound_class_cmi);
        sj["gen_source_empirical"] = detail::json_number(e.subtask->gen_source_empirical);
        sj["baseline_bound"] = detail::json_number(e.subtask->baseline_bound);
        sj["baseline_kl"] = detail::json_number(e.subtask->baseline_kl);
        sj["baseline_weight_mi"] = detail::json_number(e.subtask->baseline_weight_mi);
        j["subtask"] = sj;
    }
    if (!e.attributes.empty()) {
        json arr = json::array();
        for (const auto& a : e.attributes) {
            json aj;
            aj["attribute"] = a.attribute;
            aj["prob"] = a.prob;
            aj["gen"] = detail::json_number(a.gen);
            aj["kl_nats"] = detail::json_number(a.kl_nats);
            aj["bound_kl"] = detail::json_number(a.bound_kl);
            arr.push_back(aj);
        }
        j["attributes"] = arr;
        j["attribute_corollary_bound"] = detail::json_opt(e.attribute_corollary_bound);
    }
    return j;
}

inline json to_json(const NResult& nr) {
    json j;
    j["n"] = nr.n;
    json draws = json::array();
    for (const auto& dr : nr.draws) {
        json classes = json::array();
        for (const auto& r : dr) classes.push_back(to_json(r));
        draws.push_back(classes);
    }
    j["draws"] = draws;
    json aggs = json::array();
    for (const auto& a : nr.aggregates) aggs.push_back(to_json(a));
    j["aggregates"] = aggs;
    j["standard"] = to_json(nr.standard);
    if (nr.subtask) j["subtask"] = to_json(*nr.subtask);
    if (!nr.attributes.empty()) {
        json arr = json::array();
        for (const auto& a : nr.attributes) arr.push_back(to_json(a));
        j["attributes"] = arr;
    }
    if (nr.exact_extras) j["exact"] = to_json(*nr.exact_extras);
    return j;
}

inline json summary_json(const ExperimentResult& result, const json& config_echo) {
    json j;
    char hash[32];
    std::snprintf(hash, sizeof(hash), "%016llx",
                  static_cast<unsigned long long>(result.config_hash));
    j["provenance"]["config_hash"] = hash;
    j["provenance"]["master_seed"] = result.master_seed;
    j["config"] = config_echo;
    j["num_classes"] = result.num_classes;
    json per_n = json::array();
    for (const auto& nr : result.per_n) per_n.push_back(to_json(nr));
    j["results"] = per_n;
    return j;
}

// ---------------------------------------------------------------------------
// Verification of exact reports (validity and tightness ordering)
// ---------------------------------------------------------------------------

struct Violation {
    int class_id = -1;
    std::string inequality;  // name of the violated inequality
    double lhs = 0.0;
    double rhs = 0.0;
};

/// Checks every theorem inequality on an expectation-mode exact report:
/// validity of the five bounds against the class-generalization error and
/// the tightness chain dL <= e <= f <= class-CMI, plus the subtask and
/// attribute validities when present. Returns the violated inequalities.
inline std::vector<Violation> verify_exact_report(const ExactReport& rep, double tol = 1e-9) {
    std::vector<Violation> out;
    auto require_le = [&](double lhs, double rhs, int cls, const std::string& name) {
        if (!(lhs <= rhs + tol)) out.push_back({cls, name, lhs, rhs});
    };
    for (const auto& c : rep.classes) {
        const double a = std::abs(c.gen);
        require_le(a, c.bound_delta_l_cmi, c.class_id, "|gen| <= class-dL-CMI bound");
        require_le(a, c.bound_e_cmi, c.class_id, "|gen| <= class-e-CMI bound");
        require_le(a, c.bound_f_cmi, c.class_id, "|gen| <= class-f-CMI bound");
        require_le(a, c.bound_class_cmi, c.class_id, "|gen| <= class-CMI bound");
        if (c.bound_kl) require_le(a, *c.bound_kl, c.class_id, "|gen| <= KL bound");
        require_le(c.bound_delta_l_cmi, c.bound_e_cmi, c.class_id, "dL-CMI <= e-CMI");
        require_le(c.bound_e_cmi, c.bound_f_cmi, c.class_id, "e-CMI <= f-CMI");
        require_le(c.bound_f_cmi, c.bound_class_cmi, c.class_id, "f-CMI <= class-CMI");
        if (c.gen_mi_route)
            require_le(std::abs(c.gen - *c.gen_mi_route), 1e-9, c.class_id,
                       "CMI-route gen == MI-route gen");
    }
    if (rep.subtask) {
        require_le(std::abs(rep.subtask->gen), rep.subtask->bound_delta_l_cmi, -1,
                   "|subtask gen| <= subtask-dL-CMI bound");
        require_le(std::abs(rep.subtask->gen_source_empirical), rep.subtask->baseline_bound, -1,
                   "|subtask gen (source-empirical)| <= baseline bound");
    }
    if (rep.attribute_corollary_bound && rep.standard_gen)
        require_le(std::abs(*rep.standard_gen), *rep.attribute_corollary_bound, -1,
                   "|standard gen| <= attribute corollary bound");
    for (const auto& a : rep.attributes)
        require_le(std::abs(a.gen), a.bound_kl, a.attribute, "|attribute gen| <= attribute KL bound");
    return out;
}

// ---------------------------------------------------------------------------
// SVG plots
// ---------------------------------------------------------------------------

namespace detail {

inline const char* series_color(std::size_t index) {
    static const char* palette[] = {"#1b6ca8", "#c43d3d", "#3a9d4e", "#8c57b0",
                                    "#c98a1f", "#3aa0a5", "#7d7d7d", "#b05790"};
    return palette[index % 8];
}

inline std::string svg_coord(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

inline std::string svg_label(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return buf;
}

struct Frame {
    double width = 640, height = 420;
    double left = 60, right = 20, top = 20, bottom = 45;
    double x_min = 0, x_max = 1, y_min = 0, y_max = 1;

    double px(double x) const {
        return left + (x - x_min) / (x_max - x_min) * (width - left - right);
    }
    double py(double y) const {
        return height - bottom - (y - y_min) / (y_max - y_min) * (height - top - bottom);
    }
};

inline void svg_axes(std::ostream& out, const Frame& f, const std::string& x_label,
                     const std::string& y_label) {
    out << "<rect x=\"0\" y=\"0\" width=\"" << f.width << "\" height=\"" << f.height
        << "\" fill=\"white\"/>\n";
    out << "<line x1=\"" << svg_coord(f.left) << "\" y1=\"" << svg_coord(f.height - f.bottom)
        << "\" x2=\"" << svg_coord(f.width - f.right) << "\" y2=\""
        << svg_coord(f.height - f.bottom) << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << svg_coord(f.left) << "\" y1=\"" << svg_coord(f.top) << "\" x2=\""
        << svg_coord(f.left) << "\" y2=\"" << svg_coord(f.height - f.bottom)
        << "\" stroke=\"black\"/>\n";
    for (int k = 0; k <= 4; ++k) {
        const double xv = f.x_min + (f.x_max - f.x_min) * k / 4.0;
        const double yv = f.y_min + (f.y_max - f.y_min) * k / 4.0;
        out << "<text x=\"" << svg_coord(f.px(xv)) << "\" y=\""
            << svg_coord(f.height - f.bottom + 16)
            << "\" font-size=\"10\" text-anchor=\"middle\">" << svg_label(xv) << "</text>\n";
        out << "<text x=\"" << svg_coord(f.left - 6) << "\" y=\"" << svg_coord(f.py(yv) + 3)
            << "\" font-size=\"10\" text-anchor=\"end\">" << svg_label(yv) << "</text>\n";
    }
    out << "<text x=\"" << svg_coord((f.left + f.width - f.right) / 2) << "\" y=\""
        << svg_coord(f.height - 8) << "\" font-size=\"12\" text-anchor=\"middle\">" << x_label
        << "</text>\n";
    out << "<text x=\"14\" y=\"" << svg_coord((f.top + f.height - f.bottom) / 2)
        << "\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 14 "
        << svg_coord((f.top + f.height - f.bottom) / 2) << ")\">" << y_label << "</text>\n";
}

}  // namespace detail

enum class PlotKind { lines, scatter };

/// Renders rows into a self-contained SVG. `lines` draws each class's gen
/// estimate (solid) and its dL-CMI bound (dashed) against n; `scatter` plots
/// gen estimate against the dL-CMI bound with the y = x diagonal.
inline std::string render_plot(std::span<const ReportRow> rows, PlotKind kind) {
    detail::Frame f;
    std::ostringstream out;
    std::vector<int> classes;
    for (const auto& r : rows)
        if (std::find(classes.begin(), classes.end(), r.class_id) == classes.end())
            classes.push_back(r.class_id);
    std::sort(classes.begin(), classes.end());

    double x_min = 0, x_max = 1, y_min = 0, y_max = 1;
    if (!rows.empty()) {
        x_min = std::numeric_limits<double>::infinity();
        x_max = -x_min;
        y_min = 0.0;
        y_max = -std::numeric_limits<double>::infinity();
        for (const auto& r : rows) {
            const double xv = kind == PlotKind::lines ? static_cast<double>(r.n) : r.gen_estimate;
            const double yv = std::max(r.gen_estimate, r.bound_delta_l_cmi);
            x_min = std::min(x_min, xv);
            x_max = std::max(x_max, xv);
            y_min = std::min(y_min, std::min(r.gen_estimate, 0.0));
            y_max = std::max(y_max, yv);
        }
        if (kind == PlotKind::scatter) {
            x_min = std::min(x_min, 0.0);
            x_max = std::max(x_max, y_max);  // keep the diagonal visible
        }
        if (x_max <= x_min) x_max = x_min + 1.0;
        if (y_max <= y_min) y_max = y_min + 1.0;
        const double pad = 0.05 * (y_max - y_min);
        y_max += pad;
        if (y_min < 0) y_min -= pad;
    }
    f.x_min = x_min;
    f.x_max = x_max;
    f.y_min = y_min;
    f.y_max = y_max;

    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << f.width << "\" height=\""
        << f.height << "\" viewBox=\"0 0 " << f.width << " " << f.height << "\">\n";
    detail::svg_axes(out, f,
                     kind == PlotKind::lines ? "n (training pairs)" : "class-gen estimate",
                     kind == PlotKind::lines ? "error / bound" : "class-dL-CMI bound");

    if (kind == PlotKind::lines) {
        for (std::size_t c = 0; c < classes.size(); ++c) {
            const int y = classes[c];
            std::vector<const ReportRow*> series;
            for (const auto& r : rows)
                if (r.class_id == y) series.push_back(&r);
            std::sort(series.begin(), series.end(),
                      [](const ReportRow* a, const ReportRow* b) { return a->n < b->n; });
            for (int which = 0; which < 2; ++which) {
                out << "<polyline fill=\"none\" stroke=\"" << detail::series_color(c)
                    << "\" stroke-width=\"1.5\""
                    << (which == 1 ? " stroke-dasharray=\"5,3\"" : "") << " points=\"";
                for (const auto* r : series)
                    out << detail::svg_coord(f.px(r->n)) << ","
                        << detail::svg_coord(
                               f.py(which == 0 ? r->gen_estimate : r->bound_delta_l_cmi))
                        << " ";
                out << "\"/>\n";
            }
            out << "<text x=\"" << detail::svg_coord(f.width - f.right - 4) << "\" y=\""
                << detail::svg_coord(f.top + 14 + 14 * static_cast<double>(c))
                << "\" font-size=\"11\" text-anchor=\"end\" fill=\"" << detail::series_color(c)
                << "\">class " << y << " (solid: gen, dashed: bound)</text>\n";
        }
    } else {
        out << "<line x1=\"" << detail::svg_coord(f.px(std::max(f.x_min, f.y_min))) << "\" y1=\""
            << detail::svg_coord(f.py(std::max(f.x_min, f.y_min))) << "\" x2=\""
            << detail::svg_coord(f.px(std::min(f.x_max, f.y_max))) << "\" y2=\""
            << detail::svg_coord(f.py(std::min(f.x_max, f.y_max)))
            << "\" stroke=\"#999999\" stroke-dasharray=\"4,4\"/>\n";
        for (const auto& r : rows) {
            std::size_t c = 0;
            for (; c < classes.size(); ++c)
                if (classes[c] == r.class_id) break;
            out << "<circle cx=\"" << detail::svg_coord(f.px(r.gen_estimate)) << "\" cy=\""
                << detail::svg_coord(f.py(r.bound_delta_l_cmi)) << "\" r=\"3.5\" fill=\""
                << detail::series_color(c) << "\" fill-opacity=\"0.8\"/>\n";
        }
        for (std::size_t c = 0; c < classes.size(); ++c)
            out << "<text x=\"" << detail::svg_coord(f.left + 8) << "\" y=\""
                << detail::svg_coord(f.top + 14 + 14 * static_cast<double>(c))
                << "\" font-size=\"11\" fill=\"" << detail::series_color(c) << "\">class "
                << classes[c] << "</text>\n";
    }
    out << "</svg>\n";
    return out.str();
}

}  // namespace classgen
