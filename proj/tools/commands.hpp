#pragma once
// Subcommands of the `coprior` executable.
//
// Every subcommand writes `<subcommand>_manifest.json` next to its outputs,
// holding the resolved flag values, input digests and output file names.
// `--config FILE` reads flag values from a JSON object (or from the "config"
// member of a manifest); flags on the command line take precedence.
//
// Seeds: all randomness derives from --seed. synth uses derive_seed(seed,
// "synth") for generation and derive_seed(seed, "split") for --split; train
// uses "init" and "batches" (see coprior::train).

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "coprior/dataset.hpp"
#include "coprior/error.hpp"
#include "coprior/gcn.hpp"
#include "coprior/io.hpp"
#include "coprior/loss.hpp"
#include "coprior/metrics.hpp"
#include "coprior/prior.hpp"
#include "coprior/train.hpp"

namespace coprior::cli {

using json = nlohmann::ordered_json;

inline constexpr const char* kToolVersion = "coprior 0.1.0";

enum ExitCode : int { kOk = 0, kValidation = 1, kRuntime = 2 };

struct Common {
    std::uint64_t seed = 0;
    std::size_t threads = 1;
    std::string out_dir = ".";
    std::string config;
};

struct PriorArgs {
    Common common;
    std::string labels;
    std::string reweight_mode = "frequency";
};

struct SynthArgs {
    Common common;
    std::size_t n_classes = 20;
    std::size_t n_samples = 1000;
    std::string clusters = "0,1,2,3;4,5,6,7;8,9,10,11;12,13,14,15";
    double within_cluster_prob = 0.9;
    double base_prob = 0.1;
    std::string class_base_prob;  // "j=v,..." overrides
    double signal_strength = 2.0;
    std::string class_signal;  // "j=v,..." overrides
    double noise_std = 1.0;
    double split = 0.0;  // 0 = no split files
};

struct TrainArgs {
    Common common;
    std::string labels, logits, val_labels, val_logits;
    std::size_t epochs = 50;
    std::size_t batch_size = 32;
    double lr0 = 0.002;
    double momentum = 0.0;
    double gamma_pos = 1.0, gamma_neg = 3.0, delta = 0.05, eps = 1e-8;
    std::string gcn_dims = "1,64,64,1";
    double leaky_slope = 0.01;
    bool final_nonlinearity = false;
    std::string propagation = "row_normalized";
    std::string loss_reduction = "sample_mean";
    std::string reweight_mode = "frequency";
};

struct EvalArgs {
    Common common;
    std::string model, cond_prob, labels, logits;
    double threshold = 0.5;
    std::size_t topk = 0;  // 0: threshold mode
    std::size_t k = 3;
};

struct AnalyzeArgs {
    Common common;
    std::string cond_prob, labels, before, after, model, logits;
    std::size_t k = 3;
    double bin_width = 0.02;
};

namespace detail {

using coprior::detail::format_double;
using coprior::detail::require;

inline std::vector<std::string> split_on(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep))
        if (!cur.empty()) out.push_back(cur);
    return out;
}

inline std::size_t parse_index(const std::string& s, const std::string& what) {
    std::size_t v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) throw validation_error("bad " + what + " '" + s + "'");
    return v;
}

inline std::vector<std::size_t> parse_dims(const std::string& s) {
    std::vector<std::size_t> dims;
    for (const auto& t : split_on(s, ',')) dims.push_back(parse_index(t, "layer width"));
    return dims;
}

inline std::vector<std::vector<std::size_t>> parse_clusters(const std::string& s) {
    std::vector<std::vector<std::size_t>> out;
    for (const auto& group : split_on(s, ';')) {
        std::vector<std::size_t> members;
        for (const auto& t : split_on(group, ',')) members.push_back(parse_index(t, "cluster member"));
        out.push_back(std::move(members));
    }
    return out;
}

inline void apply_overrides(std::vector<double>& values, const std::string& spec, const std::string& what) {
    for (const auto& item : split_on(spec, ',')) {
        const auto eq = item.find('=');
        if (eq == std::string::npos) throw validation_error("bad " + what + " override '" + item + "' (want j=value)");
        const auto j = parse_index(item.substr(0, eq), what + " class index");
        double v = 0.0;
        if (!coprior::detail::parse_double(item.substr(eq + 1), v))
            throw validation_error("bad " + what + " value in '" + item + "'");
        require(j < values.size(), what + " override class index out of range");
        values[j] = v;
    }
}

inline std::filesystem::path prepare_out_dir(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec || !std::filesystem::is_directory(dir)) throw validation_error("cannot create output directory '" + dir + "'");
    return std::filesystem::path(dir);
}

struct Manifest {
    std::string subcommand;
    json config = json::object();
    json inputs = json::object();
    json outputs = json::array();

    void add_input(const std::string& role, const std::string& path) {
        if (path.empty()) return;
        inputs[role] = {{"path", path}, {"fnv1a64", file_digest(path)}};
    }

    void write(const std::filesystem::path& dir, std::uint64_t seed) const {
        json m;
        m["subcommand"] = subcommand;
        m["tool_version"] = kToolVersion;
        m["seed"] = seed;
        m["config"] = config;
        m["inputs"] = inputs;
        m["outputs"] = outputs;
        const auto path = (dir / (subcommand + "_manifest.json")).string();
        std::ofstream out(path, std::ios::binary);
        if (!out) throw validation_error("cannot write '" + path + "'");
        out << m.dump(2) << '\n';
        if (!out) throw validation_error("write failed for '" + path + "'");
    }
};

inline void common_config(json& cfg, const Common& c) {
    cfg["seed"] = c.seed;
    cfg["threads"] = c.threads;
    cfg["out-dir"] = c.out_dir;
}

inline json metrics_json(const MetricsReport& r, const std::vector<std::string>& names) {
    json ap = json::array();
    for (double v : r.per_class_ap) ap.push_back(std::isfinite(v) ? json(v) : json(nullptr));
    json excluded = json::array();
    for (auto j : r.excluded_classes) excluded.push_back(names[j]);
    return {{"mAP", r.map}, {"CP", r.cp},   {"CR", r.cr},   {"CF1", r.cf1},
            {"OP", r.op},   {"OR", r.or_},  {"OF1", r.of1}, {"per_class_ap", ap},
            {"excluded_classes", excluded}};
}

inline std::string maybe_number(double v) { return std::isfinite(v) ? format_double(v) : std::string(); }

inline void check_class_names(const std::vector<std::string>& a, const std::vector<std::string>& b,
                              const std::string& what) {
    if (a != b) throw validation_error(what + ": class names do not match the labels file");
}

}  // namespace detail

// ---------------------------------------------------------------------------

inline void run_prior(const PriorArgs& args) {
    const auto labels = load_labels(args.labels);
    const auto out = detail::prepare_out_dir(args.common.out_dir);
    const auto mode = parse_reweight_mode(args.reweight_mode);
    const auto cooc = cooccurrence(labels);
    const auto a = conditional_prob(cooc);
    const auto alpha = mode == ReweightMode::none ? ReweightVector::ones(labels.n_classes()) : reweighting(cooc, mode);
    write_cooc_csv((out / "C.csv").string(), cooc, labels.class_names());
    write_cond_prob_csv((out / "A.csv").string(), a, labels.class_names());
    write_alpha_csv((out / "alpha.csv").string(), alpha, labels.class_names());

    detail::Manifest m{"prior"};
    detail::common_config(m.config, args.common);
    m.config["labels"] = args.labels;
    m.config["reweight-mode"] = args.reweight_mode;
    m.add_input("labels", args.labels);
    m.outputs = {"C.csv", "A.csv", "alpha.csv"};
    m.write(out, args.common.seed);
}

inline SyntheticSpec synth_spec(const SynthArgs& args) {
    SyntheticSpec s = make_synthetic_spec(args.n_classes, args.n_samples, detail::parse_clusters(args.clusters),
                                          args.within_cluster_prob, args.base_prob, args.signal_strength,
                                          args.noise_std, derive_seed(args.common.seed, "synth"));
    detail::apply_overrides(s.base_prob, args.class_base_prob, "base_prob");
    detail::apply_overrides(s.signal_strength, args.class_signal, "signal");
    return s;
}

inline void run_synth(const SynthArgs& args) {
    const auto spec = synth_spec(args);
    auto [labels, logits] = synth_generate(spec);
    const auto out = detail::prepare_out_dir(args.common.out_dir);
    detail::Manifest m{"synth"};
    auto emit = [&](const std::string& stem, const LabelMatrix& y, const LogitMatrix& z) {
        write_labels((out / (stem + "labels.csv")).string(), y);
        write_logits((out / (stem + "logits.csv")).string(), z.values(), y.sample_ids(), y.class_names());
        m.outputs.push_back(stem + "labels.csv");
        m.outputs.push_back(stem + "logits.csv");
    };
    emit("", labels, logits);
    if (args.split != 0.0) {
        auto [train_part, test_part] = split(labels, logits, args.split, derive_seed(args.common.seed, "split"));
        emit("train_", train_part.labels, train_part.logits);
        emit("test_", test_part.labels, test_part.logits);
    }
    detail::common_config(m.config, args.common);
    m.config["n-classes"] = args.n_classes;
    m.config["n-samples"] = args.n_samples;
    m.config["clusters"] = args.clusters;
    m.config["within-cluster-prob"] = args.within_cluster_prob;
    m.config["base-prob"] = args.base_prob;
    m.config["class-base-prob"] = args.class_base_prob;
    m.config["signal-strength"] = args.signal_strength;
    m.config["class-signal"] = args.class_signal;
    m.config["noise-std"] = args.noise_std;
    m.config["split"] = args.split;
    m.write(out, args.common.seed);
}

inline TrainConfig train_config(const TrainArgs& args) {
    TrainConfig c;
    c.epochs = args.epochs;
    c.batch_size = args.batch_size;
    c.lr0 = args.lr0;
    c.momentum = args.momentum;
    c.seed = args.common.seed;
    c.threads = args.common.threads;
    c.rasl.gamma_pos = args.gamma_pos;
    c.rasl.gamma_neg = args.gamma_neg;
    c.rasl.delta = args.delta;
    c.rasl.eps = args.eps;
    c.gcn_dims = detail::parse_dims(args.gcn_dims);
    c.leaky_slope = args.leaky_slope;
    c.final_nonlinearity = args.final_nonlinearity;
    c.propagation = parse_propagation(args.propagation);
    c.reduction = parse_loss_reduction(args.loss_reduction);
    c.reweight_mode = parse_reweight_mode(args.reweight_mode);
    return c;
}

inline void run_train(const TrainArgs& args) {
    const auto config = train_config(args);
    const auto labels = load_labels(args.labels);
    const auto logits = load_logits(args.logits, labels);
    std::optional<DataPart> validation;
    if (!args.val_labels.empty() || !args.val_logits.empty()) {
        detail::require(!args.val_labels.empty() && !args.val_logits.empty(),
                        "--val-labels and --val-logits must be given together");
        auto vy = load_labels(args.val_labels);
        detail::check_class_names(vy.class_names(), labels.class_names(), "validation labels");
        auto vz = load_logits(args.val_logits, vy);
        validation = DataPart{std::move(vy), std::move(vz)};
    }
    const auto out = detail::prepare_out_dir(args.common.out_dir);
    const auto result = train(labels, logits, config, validation);

    save_model((out / "model.txt").string(), result.model);
    write_cooc_csv((out / "C.csv").string(), result.cooc, labels.class_names());
    write_cond_prob_csv((out / "A.csv").string(), result.cond_prob, labels.class_names());
    write_alpha_csv((out / "alpha.csv").string(), result.alphas, labels.class_names());
    write_history_csv((out / "history.csv").string(), result.history);

    detail::Manifest m{"train"};
    detail::common_config(m.config, args.common);
    m.config["labels"] = args.labels;
    m.config["logits"] = args.logits;
    m.config["val-labels"] = args.val_labels;
    m.config["val-logits"] = args.val_logits;
    m.config["epochs"] = args.epochs;
    m.config["batch-size"] = args.batch_size;
    m.config["lr0"] = args.lr0;
    m.config["momentum"] = args.momentum;
    m.config["gamma-pos"] = args.gamma_pos;
    m.config["gamma-neg"] = args.gamma_neg;
    m.config["delta"] = args.delta;
    m.config["eps"] = args.eps;
    m.config["gcn-dims"] = args.gcn_dims;
    m.config["leaky-slope"] = args.leaky_slope;
    m.config["final-nonlinearity"] = args.final_nonlinearity;
    m.config["propagation"] = args.propagation;
    m.config["loss-reduction"] = args.loss_reduction;
    m.config["reweight-mode"] = args.reweight_mode;
    m.add_input("labels", args.labels);
    m.add_input("logits", args.logits);
    m.add_input("val-labels", args.val_labels);
    m.add_input("val-logits", args.val_logits);
    m.outputs = {"model.txt", "C.csv", "A.csv", "alpha.csv", "history.csv"};
    m.write(out, args.common.seed);
}

inline void run_eval(const EvalArgs& args) {
    const auto model = load_model(args.model);
    const auto prior = read_cond_prob_csv(args.cond_prob);
    const auto labels = load_labels(args.labels);
    detail::check_class_names(prior.class_names, labels.class_names(), "--cond-prob");
    const auto logits = load_logits(args.logits, labels);
    EvalOptions opts;
    if (args.topk > 0) {
        opts.mode = PredictionMode::topk;
        opts.topk = args.topk;
    } else {
        opts.threshold = args.threshold;
    }
    const auto out = detail::prepare_out_dir(args.common.out_dir);
    const Matrix refined = refine(model, prior.matrix, logits.values());
    const auto before = evaluate(logits.values(), labels, opts);
    const auto after = evaluate(refined, labels, opts);
    const auto& names = labels.class_names();

    json report;
    report["n_samples"] = labels.n_samples();
    report["n_classes"] = labels.n_classes();
    report["prediction"] = opts.mode == PredictionMode::topk ? json{{"mode", "topk"}, {"k", opts.topk}}
                                                             : json{{"mode", "threshold"}, {"threshold", opts.threshold}};
    report["cf1_convention"] = "CF1 = 2*CP*CR/(CP+CR); OF1 = 2*OP*OR/(OP+OR)";
    report["initial"] = detail::metrics_json(before, names);
    report["refined"] = detail::metrics_json(after, names);
    json table = json::array();
    std::ofstream csv((out / "per_class.csv").string(), std::ios::binary);
    if (!csv) throw validation_error("cannot write per_class.csv in '" + args.common.out_dir + "'");
    csv << "class,x,ap_before,ap_after,delta\n";
    for (std::size_t j = 0; j < names.size(); ++j) {
        const double x = top_k_mean_condprob(prior.matrix, j, std::min(args.k, names.size() - 1));
        const double b = before.per_class_ap[j], a = after.per_class_ap[j];
        const double d = a - b;
        table.push_back({{"class", names[j]},
                         {"top_k_condprob", x},
                         {"ap_initial", std::isfinite(b) ? json(b) : json(nullptr)},
                         {"ap_refined", std::isfinite(a) ? json(a) : json(nullptr)},
                         {"delta_ap", std::isfinite(d) ? json(d) : json(nullptr)}});
        csv << names[j] << ',' << detail::format_double(x) << ',' << detail::maybe_number(b) << ','
            << detail::maybe_number(a) << ',' << detail::maybe_number(d) << '\n';
    }
    csv.close();
    report["per_class"] = table;
    {
        std::ofstream r((out / "report.json").string(), std::ios::binary);
        if (!r) throw validation_error("cannot write report.json");
        r << report.dump(2) << '\n';
    }
    write_logits((out / "refined_logits.csv").string(), refined, labels.sample_ids(), names);

    detail::Manifest m{"eval"};
    detail::common_config(m.config, args.common);
    m.config["model"] = args.model;
    m.config["cond-prob"] = args.cond_prob;
    m.config["labels"] = args.labels;
    m.config["logits"] = args.logits;
    m.config["threshold"] = args.threshold;
    m.config["topk"] = args.topk;
    m.config["k"] = args.k;
    m.add_input("model", args.model);
    m.add_input("cond-prob", args.cond_prob);
    m.add_input("labels", args.labels);
    m.add_input("logits", args.logits);
    m.outputs = {"report.json", "per_class.csv", "refined_logits.csv"};
    m.write(out, args.common.seed);
}

inline void run_analyze(const AnalyzeArgs& args) {
    const auto prior = read_cond_prob_csv(args.cond_prob);
    const auto labels = load_labels(args.labels);
    detail::check_class_names(prior.class_names, labels.class_names(), "--cond-prob");
    Matrix before, after;
    const bool from_scores = !args.before.empty() || !args.after.empty();
    const bool from_model = !args.model.empty() || !args.logits.empty();
    detail::require(from_scores != from_model, "give either --before and --after, or --model and --logits");
    if (from_scores) {
        detail::require(!args.before.empty() && !args.after.empty(), "--before and --after must be given together");
        before = load_logits(args.before, labels).values();
        after = load_logits(args.after, labels).values();
    } else {
        detail::require(!args.model.empty() && !args.logits.empty(), "--model and --logits must be given together");
        before = load_logits(args.logits, labels).values();
        after = refine(load_model(args.model), prior.matrix, before);
    }
    const auto out = detail::prepare_out_dir(args.common.out_dir);
    const auto ap_before = per_class_average_precision(before, labels.values());
    const auto ap_after = per_class_average_precision(after, labels.values());
    const auto analysis = delta_ap_analysis(ap_before, ap_after, prior.matrix, args.k, args.bin_width);

    const auto path = (out / "bins.csv").string();
    std::ofstream csv(path, std::ios::binary);
    if (!csv) throw validation_error("cannot write '" + path + "'");
    csv << "bin_low,bin_high,mean_delta_ap,count\n";
    for (const auto& b : analysis.bins)
        csv << detail::format_double(b.bin_low) << ',' << detail::format_double(b.bin_high) << ','
            << detail::format_double(b.mean_delta_ap) << ',' << b.class_count << '\n';
    csv << "spearman," << detail::format_double(analysis.spearman) << ','
        << (analysis.spearman_defined ? "defined" : "undefined") << '\n';
    csv.close();
    if (!csv) throw validation_error("write failed for '" + path + "'");

    detail::Manifest m{"analyze"};
    detail::common_config(m.config, args.common);
    m.config["cond-prob"] = args.cond_prob;
    m.config["labels"] = args.labels;
    m.config["before"] = args.before;
    m.config["after"] = args.after;
    m.config["model"] = args.model;
    m.config["logits"] = args.logits;
    m.config["k"] = args.k;
    m.config["bin-width"] = args.bin_width;
    m.add_input("cond-prob", args.cond_prob);
    m.add_input("labels", args.labels);
    m.add_input("before", args.before);
    m.add_input("after", args.after);
    m.add_input("model", args.model);
    m.add_input("logits", args.logits);
    m.outputs = {"bins.csv"};
    m.write(out, args.common.seed);
}

// ---------------------------------------------------------------------------
// Argument handling

namespace detail {

inline void add_common(CLI::App& sub, Common& c) {
    sub.add_option("--seed", c.seed, "Master seed")->capture_default_str();
    sub.add_option("--threads", c.threads, "Worker threads for deterministic parallel paths")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    sub.add_option("--out-dir", c.out_dir, "Output directory")->capture_default_str();
    sub.add_option("--config", c.config, "JSON file with flag values (a manifest works too)");
}

// Turns the --config file into --key=value tokens placed right after the
// subcommand, so flags given on the command line (parsed later) win.
inline std::vector<std::string> expand_config(std::vector<std::string> args) {
    std::string path;
    for (std::size_t i = 2; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
        else if (args[i].starts_with("--config=")) path = args[i].substr(9);
    }
    if (path.empty() || args.size() < 2) return args;
    std::ifstream in(path);
    if (!in) throw validation_error("cannot open config '" + path + "'");
    json cfg;
    try {
        cfg = json::parse(in);
    } catch (const json::parse_error& e) {
        throw validation_error("config '" + path + "' is not valid JSON: " + e.what());
    }
    if (cfg.contains("config") && cfg["config"].is_object()) cfg = cfg["config"];
    if (!cfg.is_object()) throw validation_error("config '" + path + "' must be a JSON object");
    std::vector<std::string> injected;
    for (const auto& [key, value] : cfg.items()) {
        // An empty string records an option that was not given.
        if (key == "config" || value.is_null() || (value.is_string() && value.get<std::string>().empty())) continue;
        std::string text;
        if (value.is_string()) text = value.get<std::string>();
        else if (value.is_boolean()) text = value.get<bool>() ? "true" : "false";
        else if (value.is_number()) text = value.dump();
        else throw validation_error("config key '" + key + "' must be a scalar");
        injected.push_back("--" + key + "=" + text);
    }
    args.insert(args.begin() + 2, injected.begin(), injected.end());
    return args;
}

}  // namespace detail

// Parses and runs one subcommand. Returns the process exit code.
inline int main_entry(std::vector<std::string> args, std::ostream& err = std::cerr) {
    CLI::App app{"Class co-occurrence priors and GCN logit refinement for multi-label recognition", "coprior"};
    app.set_version_flag("--version", kToolVersion);
    app.require_subcommand(1);
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

    PriorArgs prior;
    auto* p = app.add_subcommand("prior", "Co-occurrence counts, conditional probabilities and class weights");
    detail::add_common(*p, prior.common);
    p->add_option("--labels", prior.labels, "Label CSV")->required();
    p->add_option("--reweight-mode", prior.reweight_mode, "frequency, literal or none")->capture_default_str();

    SynthArgs synth;
    auto* s = app.add_subcommand("synth", "Generate a synthetic dataset with clustered labels");
    detail::add_common(*s, synth.common);
    s->add_option("--n-classes", synth.n_classes)->capture_default_str();
    s->add_option("--n-samples", synth.n_samples)->capture_default_str();
    s->add_option("--clusters", synth.clusters, "Clusters as 'a,b,c;d,e' (empty: none)")->capture_default_str();
    s->add_option("--within-cluster-prob", synth.within_cluster_prob)->capture_default_str();
    s->add_option("--base-prob", synth.base_prob, "Marginal activation probability for every class")
        ->capture_default_str();
    s->add_option("--class-base-prob", synth.class_base_prob, "Per-class overrides 'j=p,...'");
    s->add_option("--signal-strength", synth.signal_strength, "Logit separation for every class")
        ->capture_default_str();
    s->add_option("--class-signal", synth.class_signal, "Per-class overrides 'j=s,...'");
    s->add_option("--noise-std", synth.noise_std)->capture_default_str();
    s->add_option("--split", synth.split, "Also write train_/test_ files with this training fraction");

    TrainArgs tr;
    auto* t = app.add_subcommand("train", "Train the GCN refinement head");
    detail::add_common(*t, tr.common);
    t->add_option("--labels", tr.labels, "Training label CSV")->required();
    t->add_option("--logits", tr.logits, "Training initial-logit CSV")->required();
    t->add_option("--val-labels", tr.val_labels, "Validation label CSV");
    t->add_option("--val-logits", tr.val_logits, "Validation initial-logit CSV");
    t->add_option("--epochs", tr.epochs)->capture_default_str();
    t->add_option("--batch-size", tr.batch_size)->capture_default_str();
    t->add_option("--lr0", tr.lr0, "Initial learning rate (cosine annealed per epoch)")->capture_default_str();
    t->add_option("--momentum", tr.momentum)->capture_default_str();
    t->add_option("--gamma-pos", tr.gamma_pos)->capture_default_str();
    t->add_option("--gamma-neg", tr.gamma_neg)->capture_default_str();
    t->add_option("--delta", tr.delta, "Probability shift for negatives")->capture_default_str();
    t->add_option("--eps", tr.eps, "Log clamp")->capture_default_str();
    t->add_option("--gcn-dims", tr.gcn_dims, "Layer widths, first and last must be 1")->capture_default_str();
    t->add_option("--leaky-slope", tr.leaky_slope)->capture_default_str();
    t->add_flag("--final-nonlinearity", tr.final_nonlinearity, "Apply LeakyReLU on the last layer too");
    t->add_option("--propagation", tr.propagation, "row_normalized or raw")->capture_default_str();
    t->add_option("--loss-reduction", tr.loss_reduction, "sample_mean or sum")->capture_default_str();
    t->add_option("--reweight-mode", tr.reweight_mode, "frequency, literal or none")->capture_default_str();

    EvalArgs ev;
    auto* e = app.add_subcommand("eval", "Evaluate initial and refined logits");
    detail::add_common(*e, ev.common);
    e->add_option("--model", ev.model)->required();
    e->add_option("--cond-prob", ev.cond_prob, "A.csv written by train")->required();
    e->add_option("--labels", ev.labels)->required();
    e->add_option("--logits", ev.logits)->required();
    e->add_option("--threshold", ev.threshold, "Sigmoid threshold for P/R/F1")->capture_default_str();
    e->add_option("--topk", ev.topk, "Predict the k highest-scoring classes per sample instead (0: off)")
        ->capture_default_str();
    e->add_option("--k", ev.k, "Top-k conditional probabilities averaged per class")->capture_default_str();

    AnalyzeArgs an;
    auto* a = app.add_subcommand("analyze", "Refinement gain binned by co-occurrence strength");
    detail::add_common(*a, an.common);
    a->add_option("--cond-prob", an.cond_prob)->required();
    a->add_option("--labels", an.labels)->required();
    a->add_option("--before", an.before, "Initial score CSV");
    a->add_option("--after", an.after, "Refined score CSV");
    a->add_option("--model", an.model, "Model file (refines --logits)");
    a->add_option("--logits", an.logits, "Initial-logit CSV");
    a->add_option("--k", an.k)->capture_default_str();
    a->add_option("--bin-width", an.bin_width)->capture_default_str();

    try {
        args = detail::expand_config(std::move(args));
        std::vector<std::string> rev(args.rbegin(), args.rend() - 1);
        app.parse(rev);
        if (p->parsed()) run_prior(prior);
        else if (s->parsed()) run_synth(synth);
        else if (t->parsed()) run_train(tr);
        else if (e->parsed()) run_eval(ev);
        else if (a->parsed()) run_analyze(an);
    } catch (const CLI::CallForHelp&) {
        std::cout << app.help();
        return kOk;
    } catch (const CLI::CallForAllHelp&) {
        std::cout << app.help("", CLI::AppFormatMode::All);
        return kOk;
    } catch (const CLI::CallForVersion&) {
        std::cout << kToolVersion << '\n';
        return kOk;
    } catch (const CLI::ParseError& ex) {
        err << "error: " << ex.what() << '\n';
        return kValidation;
    } catch (const validation_error& ex) {
        err << "error: " << ex.what() << '\n';
        return kValidation;
    } catch (const numeric_error& ex) {
        err << "numeric failure: " << ex.what() << '\n';
        return kRuntime;
    } catch (const std::exception& ex) {
        err << "failure: " << ex.what() << '\n';
        return kRuntime;
    }
    return kOk;
}

}  // namespace coprior::cli
