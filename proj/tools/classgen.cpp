// classgen command line: synthetic data generation, the m1 x m2 experiment
// runner, the exact-enumeration verifier, and SVG plotting.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "classgen/datagen.hpp"
#include "classgen/exact.hpp"
#include "classgen/harness.hpp"
#include "classgen/report.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitViolation = 1;
constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;

classgen::json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    try {
        return classgen::json::parse(in, nullptr, true, /*ignore_comments=*/true);
    } catch (const classgen::json::parse_error& e) {
        throw std::invalid_argument(std::string("JSON parse failure in ") + path + ": " + e.what());
    }
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    out << content;
    if (!out) throw std::runtime_error("write failure on '" + path + "'");
}

std::vector<std::vector<double>> parse_means(const std::string& text) {
    std::vector<std::vector<double>> means;
    std::stringstream classes(text);
    std::string part;
    while (std::getline(classes, part, ';')) {
        std::vector<double> mean;
        std::stringstream coords(part);
        std::string num;
        while (std::getline(coords, num, ',')) mean.push_back(std::stod(num));
        means.push_back(std::move(mean));
    }
    return means;
}

std::vector<double> parse_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string num;
    while (std::getline(ss, num, ',')) out.push_back(std::stod(num));
    return out;
}

struct GenDataArgs {
    std::string out_path;
    std::string config_path;
    std::size_t count = 0;
    std::uint64_t seed = 0;
    std::string kind = "gaussian_mixture";
    std::string means = "-1,-1;1,1";
    std::string cov_scale;
    std::string priors;
    std::string noise;
    std::string attribute = "none";
};

int cmd_gen_data(const GenDataArgs& args) {
    classgen::GeneratorSpec spec;
    if (!args.config_path.empty()) {
        spec = classgen::generator_from_json(read_json_file(args.config_path));
    } else {
        classgen::json j;
        j["kind"] = args.kind;
        j["means"] = parse_means(args.means);
        const std::size_t c = j["means"].size();
        if (!args.priors.empty()) j["priors"] = parse_list(args.priors);
        if (!args.cov_scale.empty()) {
            const auto v = parse_list(args.cov_scale);
            j["cov_scale"] = v.size() == 1 ? classgen::json(v[0]) : classgen::json(v);
        }
        if (!args.noise.empty()) {
            const auto v = parse_list(args.noise);
            j["label_noise"] = v.size() == 1 ? classgen::json(v[0]) : classgen::json(v);
        }
        if (args.attribute != "none") j["attribute"]["kind"] = args.attribute;
        (void)c;
        spec = classgen::generator_from_json(j);
    }
    const auto examples = classgen::sample_iid(spec, args.count, args.seed);
    classgen::save_csv(args.out_path, examples,
                       spec.attribute_rule.kind != classgen::AttributeRule::Kind::none);
    std::cout << "wrote " << examples.size() << " rows to " << args.out_path << "\n";
    return kExitOk;
}

struct RunArgs {
    std::string config_path;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<int> bins;
    std::optional<std::string> mi_correction;
    std::optional<int> threads;
    bool plots = false;
};

int cmd_run(const RunArgs& args) {
    classgen::json cfg_json = read_json_file(args.config_path);
    classgen::ExperimentConfig config = classgen::config_from_json(cfg_json);
    if (args.seed) config.master_seed = *args.seed;
    if (args.bins) config.bins = *args.bins;
    if (args.threads) config.threads = *args.threads;
    if (args.mi_correction) {
        if (*args.mi_correction == "none") config.mi_correction = classgen::MiCorrection::none;
        else if (*args.mi_correction == "miller-madow" || *args.mi_correction == "miller_madow")
            config.mi_correction = classgen::MiCorrection::miller_madow;
        else throw std::invalid_argument("unknown --mi-correction value");
    }

    const auto result = classgen::run_experiment(config);
    const auto rows = classgen::rows_from_result(result);

    std::filesystem::create_directories(args.out_dir);
    {
        std::ostringstream csv;
        classgen::emit_rows(csv, rows);
        write_text_file(args.out_dir + "/rows.csv", csv.str());
    }
    write_text_file(args.out_dir + "/summary.json",
                    classgen::summary_json(result, classgen::config_to_json(config)).dump(2) + "\n");
    if (args.plots) {
        write_text_file(args.out_dir + "/lines.svg",
                        classgen::render_plot(rows, classgen::PlotKind::lines));
        write_text_file(args.out_dir + "/scatter.svg",
                        classgen::render_plot(rows, classgen::PlotKind::scatter));
    }
    std::cout << "wrote " << rows.size() << " report rows to " << args.out_dir << "/rows.csv\n";
    return kExitOk;
}

struct VerifyArgs {
    std::string instance_path;
    int random_count = 0;
    std::uint64_t seed = 7;
    double tol = 1e-9;
    bool bits = false;
};

int cmd_verify_exact(const VerifyArgs& args) {
    using classgen::ExactInstance;
    std::vector<std::pair<ExactInstance, std::optional<classgen::SubtaskSpec>>> instances;
    if (!args.instance_path.empty()) {
        std::optional<classgen::SubtaskSpec> subtask;
        ExactInstance inst = classgen::instance_from_json(read_json_file(args.instance_path), &subtask);
        instances.emplace_back(std::move(inst), std::move(subtask));
    }
    classgen::Rng rng(args.seed);
    for (int k = 0; k < args.random_count; ++k)
        instances.emplace_back(classgen::random_instance(rng), std::nullopt);
    if (instances.empty())
        throw std::invalid_argument("verify-exact: give --instance FILE and/or --random N");

    const double scale = args.bits ? 1.0 / 0.69314718055994530942 : 1.0;
    const char* unit = args.bits ? "bits" : "nats";
    int violations = 0;
    for (std::size_t k = 0; k < instances.size(); ++k) {
        auto& [inst, subtask] = instances[k];
        std::optional<classgen::SubtaskSpec> st = subtask;
        if (!st && !args.instance_path.empty()) {
            // nothing: file instances carry their own subtask when wanted
        }
        const classgen::ExactReport rep = classgen::run_exact_expectation(inst, st);
        const auto viols = classgen::verify_exact_report(rep, args.tol);
        double min_margin = std::numeric_limits<double>::infinity();
        for (const auto& c : rep.classes)
            min_margin = std::min(min_margin, c.bound_delta_l_cmi - std::abs(c.gen));
        std::printf("instance %3zu: domain=%zu pairs=%d hyps=%d classes=%d  min dL-margin=%.6f",
                    k, inst.domain.size(), inst.n_pairs, inst.hypotheses.size(), inst.num_classes,
                    min_margin);
        if (!rep.classes.empty() && rep.classes[0].kl_divergence_nats)
            std::printf("  KL(class0)=%.6f %s", *rep.classes[0].kl_divergence_nats * scale, unit);
        std::printf("  %s\n", viols.empty() ? "ok" : "VIOLATED");
        for (const auto& v : viols) {
            ++violations;
            std::printf("  violation: class %d: %s (lhs=%.12g rhs=%.12g)\n", v.class_id,
                        v.inequality.c_str(), v.lhs, v.rhs);
        }
    }
    if (violations > 0) {
        std::printf("FAIL: %d violated inequalities over %zu instances\n", violations,
                    instances.size());
        return kExitViolation;
    }
    std::printf("all %zu instances passed (tolerance %g)\n", instances.size(), args.tol);
    return kExitOk;
}

struct PlotArgs {
    std::string rows_path;
    std::string out_path;
    std::string kind = "lines";
};

int cmd_plot(const PlotArgs& args) {
    std::ifstream in(args.rows_path);
    if (!in) throw std::runtime_error("cannot open '" + args.rows_path + "'");
    const auto rows = classgen::parse_rows(in);
    classgen::PlotKind kind;
    if (args.kind == "lines") kind = classgen::PlotKind::lines;
    else if (args.kind == "scatter") kind = classgen::PlotKind::scatter;
    else throw std::invalid_argument("plot: kind must be 'lines' or 'scatter'");
    write_text_file(args.out_path, classgen::render_plot(rows, kind));
    std::cout << "wrote " << args.out_path << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"class-wise generalization error estimates and information-theoretic bounds"};
    app.require_subcommand(1);

    GenDataArgs gen_args;
    auto* gen = app.add_subcommand("gen-data", "generate a synthetic CSV dataset");
    gen->add_option("--out", gen_args.out_path, "output CSV path")->required();
    gen->add_option("--count", gen_args.count, "number of examples");
    gen->add_option("--seed", gen_args.seed, "generator seed");
    gen->add_option("--config", gen_args.config_path, "JSON file with a data section");
    gen->add_option("--kind", gen_args.kind, "gaussian_mixture | concentric | xor");
    gen->add_option("--means", gen_args.means, "per-class means, e.g. '-1,-1;1,1'");
    gen->add_option("--cov-scale", gen_args.cov_scale, "per-class scale (single value broadcasts)");
    gen->add_option("--priors", gen_args.priors, "class priors, e.g. '0.5,0.5'");
    gen->add_option("--noise", gen_args.noise, "per-class label flip probability");
    gen->add_option("--attribute", gen_args.attribute, "none | halfspace | component");

    RunArgs run_args;
    auto* run = app.add_subcommand("run", "run the m1 x m2 experiment protocol");
    run->add_option("--config", run_args.config_path, "experiment config JSON")->required();
    run->add_option("--out", run_args.out_dir, "output directory")->required();
    run->add_option("--seed", run_args.seed, "override master seed");
    run->add_option("--bins", run_args.bins, "quantization bins for continuous losses");
    run->add_option("--mi-correction", run_args.mi_correction, "none | miller-madow");
    run->add_option("--threads", run_args.threads, "trial worker threads");
    run->add_flag("--plots", run_args.plots, "also write lines.svg and scatter.svg");

    VerifyArgs verify_args;
    auto* verify = app.add_subcommand("verify-exact",
                                      "enumerate exact instances and check every bound");
    verify->add_option("--instance", verify_args.instance_path, "instance JSON file");
    verify->add_option("--random", verify_args.random_count, "number of random instances");
    verify->add_option("--seed", verify_args.seed, "random instance seed");
    verify->add_option("--tol", verify_args.tol, "violation tolerance");
    verify->add_flag("--bits", verify_args.bits, "display information in bits");

    PlotArgs plot_args;
    auto* plot = app.add_subcommand("plot", "render rows.csv as an SVG figure");
    plot->add_option("--rows", plot_args.rows_path, "rows.csv path")->required();
    plot->add_option("--out", plot_args.out_path, "output SVG path")->required();
    plot->add_option("--kind", plot_args.kind, "lines | scatter");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (gen->parsed()) return cmd_gen_data(gen_args);
        if (run->parsed()) return cmd_run(run_args);
        if (verify->parsed()) return cmd_verify_exact(verify_args);
        if (plot->parsed()) return cmd_plot(plot_args);
        return kExitUsage;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::runtime_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    }
}
