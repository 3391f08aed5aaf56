#include <algorithm>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "permrank/config.hpp"
#include "permrank/errors.hpp"
#include "permrank/experiment.hpp"
#include "permrank/manifest.hpp"
#include "permrank/rng.hpp"

namespace {

using namespace permrank;

// "-" means standard output everywhere an output path is taken.
void with_output(const std::string& path, const std::function<void(std::ostream&)>& fn) {
    if (path == "-") {
        fn(std::cout);
        std::cout.flush();
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) raise(errc::io_error, "cannot open " + path + " for writing");
    fn(out);
}

std::uint64_t resolve_seed(RunConfig& config, const char* context) {
    if (!config.seed_set) {
        config.seed = std::random_device{}();
        config.seed_set = true;
        std::cerr << context << ": seed not given, using seed=" << config.seed << "\n";
    }
    return config.seed;
}

std::vector<std::string> split_list(const std::string& csv) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(csv);
    while (std::getline(in, item, ',')) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

SvmParams svm_params_from(const RunConfig& c) {
    SvmParams p;
    p.kernel = c.kernel == "linear" ? KernelKind::Linear : KernelKind::Rbf;
    p.cost = c.cost;
    p.gamma = c.gamma;
    p.tolerance = c.tolerance;
    p.max_passes = c.max_passes;
    return p;
}

TreeParams tree_params_from(const RunConfig& c) {
    return TreeParams{c.min_split, c.min_leaf, c.complexity};
}

ForestParams forest_params_from(const RunConfig& c) {
    ForestParams p;
    p.n_trees = c.trees;
    p.mtry = c.mtry;
    p.bootstrap = c.bootstrap;
    p.tree = TreeParams{};  // forest trees grow to purity
    return p;
}

int cmd_extract(const std::vector<std::string>& manifests, const std::string& catalog_path,
                const std::string& label, const std::string& family, const std::string& out_path) {
    const PermissionCatalog catalog = PermissionCatalog::load(catalog_path);
    std::vector<AppSample> samples;
    for (const auto& path : manifests) {
        const ManifestInfo info = parse_manifest_file(path);
        for (const auto& w : info.parse_warnings) std::cerr << path << ": warning: " << w << "\n";
        const PermissionVector vec = to_permission_vector(info, catalog);
        if (vec.unknown_count > 0) {
            std::cerr << path << ": " << vec.unknown_count << " permission(s) outside the catalog\n";
        }
        AppSample s;
        s.app_id = path;
        for (auto& ch : s.app_id) {
            if (ch == ',') ch = '_';  // keep the CSV single-celled
        }
        s.bits = vec.bits;
        s.label = label == "malware" ? Label::Malware : Label::Benign;
        s.family = family;
        samples.push_back(std::move(s));
    }
    const FeatureMatrix m = build_matrix(std::move(samples), catalog);
    with_output(out_path, [&](std::ostream& out) { write_matrix_csv(m, out); });
    return 0;
}

int cmd_matrix(const std::vector<std::string>& inputs, const std::string& families_csv,
               std::size_t top_families, bool drop_zero, const std::string& out_path) {
    std::optional<FeatureMatrix> merged;
    for (const auto& path : inputs) {
        FeatureMatrix m = read_matrix_csv(std::filesystem::path(path));
        if (!merged) {
            merged = std::move(m);
            continue;
        }
        if (m.feature_names() != merged->feature_names()) {
            raise(errc::schema_error, path + ": columns differ from the first input");
        }
        std::vector<AppSample> rows;
        for (const auto* part : {&*merged, &m}) {
            for (std::size_t r = 0; r < part->row_count(); ++r) {
                AppSample s;
                s.app_id = part->app_id(r);
                const auto row = part->row(r);
                s.bits.assign(row.begin(), row.end());
                s.label = part->label(r);
                s.family = part->family(r);
                rows.push_back(std::move(s));
            }
        }
        merged = build_matrix(merged->feature_names(), std::move(rows));
    }

    FeatureMatrix m = std::move(*merged);
    if (!families_csv.empty()) {
        const auto list = split_list(families_csv);
        m = filter_families(m, std::set<std::string>(list.begin(), list.end()));
    }
    if (top_families > 0) {
        std::set<std::string> keep;
        for (const auto& [name, count] : family_counts(m)) {
            if (keep.size() >= top_families) break;
            keep.insert(name);
        }
        m = filter_families(m, keep);
    }
    if (drop_zero) {
        const ZeroImpactResult r = remove_zero_impact(m);
        for (const auto& name : r.removed) std::cerr << "removed zero-impact column " << name << "\n";
        m = r.matrix;
    }
    with_output(out_path, [&](std::ostream& out) { write_matrix_csv(m, out); });
    return 0;
}

int cmd_rank(const std::string& input, const std::string& method, const RunConfig& config, bool yates,
             const std::string& apply_path, const std::string& out_path) {
    const FeatureMatrix m = read_matrix_csv(std::filesystem::path(input));
    RankOptions options;
    const auto parsed = rank_method_from(method);
    if (!parsed) raise(errc::bad_config, "method must be chi2 or fisher");
    options.method = *parsed;
    options.alpha = config.alpha;
    options.yates = yates;
    options.threads = config.threads;
    const std::vector<RankedFeature> ranking = rank_features(m, options);
    with_output(out_path, [&](std::ostream& out) { write_ranking_csv(ranking, out); });
    if (!apply_path.empty()) {
        const FeatureMatrix filtered = apply_filter(m, ranking);
        write_matrix_csv(filtered, std::filesystem::path(apply_path));
    }
    return 0;
}

int cmd_train(const std::string& input, const std::string& algo, bool tune, RunConfig& config,
              const std::string& out_path) {
    config.validate();
    const FeatureMatrix m = read_matrix_csv(std::filesystem::path(input));
    if (algo == "dt") {
        const DecisionTree model = DecisionTree::train(m, tree_params_from(config));
        with_output(out_path, [&](std::ostream& out) { model.save(out); });
    } else if (algo == "rf") {
        ForestParams params = forest_params_from(config);
        params.seed = resolve_seed(config, "train");
        params.threads = config.threads;
        const RandomForest model = RandomForest::train(m, params);
        with_output(out_path, [&](std::ostream& out) { model.save(out); });
    } else if (algo == "svm") {
        SvmParams params = svm_params_from(config);
        if (tune) {
            const std::uint64_t seed = resolve_seed(config, "train");
            const TuneResult best = svm_tune(m, TuneGrid{}, config.folds, seed, params, config.threads);
            params.cost = best.cost;
            params.gamma = best.gamma;
            std::cerr << "tuned: cost=" << best.cost << " gamma=" << best.gamma
                      << " cv_accuracy=" << best.cv_accuracy << "\n";
        }
        const SvmModel model = SvmModel::train(m, params);
        if (!model.converged()) {
            std::cerr << "warning: optimizer hit max_passes=" << params.max_passes
                      << " before meeting tolerance; model saved anyway\n";
        }
        with_output(out_path, [&](std::ostream& out) { model.save(out); });
    } else {
        raise(errc::bad_config, "algo must be dt, rf, or svm");
    }
    return 0;
}

int cmd_eval(const std::string& input, const std::string& model_path, const RunConfig& config,
             const std::string& out_path) {
    const FeatureMatrix m = read_matrix_csv(std::filesystem::path(input));

    std::ifstream model_in(model_path);
    if (!model_in) raise(errc::io_error, "cannot open " + model_path);
    std::stringstream buffer;
    buffer << model_in.rdbuf();
    std::string kind;
    try {
        kind = nlohmann::json::parse(buffer.str()).at("kind").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        raise(errc::schema_error, std::string("model json: ") + e.what());
    }

    std::vector<Label> predicted;
    TimingRecord timing;
    const auto run = [&](const auto& model) {
        auto [labels, t] = timed([&] { return model.predict(m, config.threads); });
        predicted = std::move(labels);
        timing = t;
    };
    std::istringstream replay(buffer.str());
    if (kind == "decision_tree") run(DecisionTree::load(replay));
    else if (kind == "random_forest") run(RandomForest::load(replay));
    else if (kind == "svm") run(SvmModel::load(replay));
    else raise(errc::schema_error, "unknown model kind " + kind);

    std::vector<Label> truth;
    truth.reserve(m.row_count());
    for (std::size_t r = 0; r < m.row_count(); ++r) truth.push_back(m.label(r));
    const ConfusionCounts c = confusion(predicted, truth);
    const MetricsReport r = metrics(c, 1.0);
    if (!config.timing) timing = TimingRecord{};

    with_output(out_path, [&](std::ostream& out) {
        char buf[512];
        out << "acc,fpr,fnr,tpr,tnr,precision,f_score,tp,tn,fp,fn,user_s,system_s,elapsed_s\n";
        std::snprintf(buf, sizeof buf, "%.2f,%.2f,%.2f,%.2f,%.2f,%.2f,%.2f", r.accuracy, r.fpr, r.fnr,
                      r.tpr, r.tnr, r.precision, r.f_score);
        out << buf << ',' << c.tp << ',' << c.tn << ',' << c.fp << ',' << c.fn;
        std::snprintf(buf, sizeof buf, ",%.2f,%.2f,%.2f\n", timing.user_s, timing.system_s,
                      timing.elapsed_s);
        out << buf;
    });
    return 0;
}

int cmd_synth(std::size_t benign, std::size_t malware, std::size_t features, std::size_t signal,
              double base, double delta, const std::string& families_csv, RunConfig& config,
              const std::string& out_path) {
    if (signal > features) raise(errc::bad_config, "signal cannot exceed features");
    SynthSpec spec;
    char name[32];
    for (std::size_t i = 0; i < features; ++i) {
        std::snprintf(name, sizeof name, "f%03zu", i);
        spec.feature_names.push_back(name);
        const bool is_signal = i < signal;
        spec.p_benign.push_back(base);
        spec.p_malware.push_back(is_signal ? std::clamp(base + delta, 0.0, 1.0) : base);
    }
    spec.benign_count = benign;
    spec.malware_count = malware;
    spec.families = split_list(families_csv);
    const FeatureMatrix m = synth_generate(spec, resolve_seed(config, "synth"));
    with_output(out_path, [&](std::ostream& out) { write_matrix_csv(m, out); });
    return 0;
}

// Built-in benchmark pair: a mixed-family corpus and its top-two-family
// subset, mirroring the full-vs-filtered dataset layout.
std::vector<std::pair<std::string, FeatureMatrix>> bench_datasets(std::uint64_t seed) {
    SynthSpec spec;
    const double signal_delta[6] = {0.40, 0.35, 0.30, 0.30, 0.25, 0.20};
    const double bases[5] = {0.05, 0.10, 0.20, 0.35, 0.50};
    char name[32];
    for (std::size_t i = 0; i < 50; ++i) {
        std::snprintf(name, sizeof name, "f%03zu", i);
        spec.feature_names.push_back(name);
        const double base = bases[i % 5];
        spec.p_benign.push_back(base);
        spec.p_malware.push_back(i < 6 ? std::min(1.0, base + signal_delta[i]) : base);
    }
    spec.benign_count = 800;
    spec.malware_count = 400;
    spec.families = {"famA", "famA", "famB", "famA", "famB", "famC"};  // 3:2:1 mix
    FeatureMatrix synth1 = synth_generate(spec, splitmix64(seed) ^ fnv1a64("bench/synth1"));
    FeatureMatrix synth2 = filter_families(synth1, {"famA", "famB"});

    std::vector<std::pair<std::string, FeatureMatrix>> out;
    out.emplace_back("synth1", std::move(synth1));
    out.emplace_back("synth2", std::move(synth2));
    return out;
}

int cmd_bench(const std::vector<std::string>& data_args, RunConfig& config, const std::string& out_path,
              const std::string& json_path) {
    config.validate();
    const bool auto_seed = !config.seed_set;
    const std::uint64_t seed = resolve_seed(config, "bench");

    ExperimentSpec spec;
    if (data_args.empty()) {
        spec.datasets = bench_datasets(seed);
    } else {
        for (const auto& arg : data_args) {
            const auto eq = arg.find('=');
            if (eq == std::string::npos) {
                raise(errc::bad_config, "--data expects name=path, got '" + arg + "'");
            }
            spec.datasets.emplace_back(arg.substr(0, eq),
                                       read_matrix_csv(std::filesystem::path(arg.substr(eq + 1))));
        }
    }
    spec.train_fraction = config.train_fraction;
    spec.alpha = config.alpha;
    spec.seed = seed;
    spec.threads = config.threads;
    spec.measure_timing = config.timing;
    spec.tree = tree_params_from(config);
    spec.forest = forest_params_from(config);
    spec.svm = svm_params_from(config);
    spec.tune_folds = config.folds;

    const std::vector<ExperimentRow> rows = run_experiment_matrix(spec);
    with_output(out_path, [&](std::ostream& out) {
        // An auto-drawn seed is recorded in the header so the run can be
        // replayed; a caller-pinned seed keeps the bytes reproducible.
        if (auto_seed) out << "# seed=" << seed << "\n";
        write_report_csv(rows, out);
    });
    if (!json_path.empty()) {
        with_output(json_path, [&](std::ostream& out) { write_report_json(rows, seed, out); });
    }
    return 0;
}

// The config file must be known before CLI11 applies defaults, so flags can
// override file values; find it ahead of the real parse.
std::optional<std::string> find_config_arg(int argc, char** argv) {
    for (int i = 1; i < argc; ++i) {
        const std::string_view arg = argv[i];
        if (arg == "--config" && i + 1 < argc) return std::string(argv[i + 1]);
        if (arg.rfind("--config=", 0) == 0) return std::string(arg.substr(9));
    }
    return std::nullopt;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        RunConfig config;
        if (const auto path = find_config_arg(argc, argv)) config.load_file(*path);

        CLI::App app{"Permission-based malware triage toolkit"};
        app.require_subcommand(1);
        std::string config_path;

        const auto add_common = [&](CLI::App* sub, bool takes_seed, bool takes_threads) {
            sub->add_option("--config", config_path, "key=value config file; flags win over file values");
            if (takes_seed) {
                sub->add_option("--seed", config.seed, "RNG seed; omitted = drawn and reported")
                    ->each([&](const std::string&) { config.seed_set = true; });
            }
            if (takes_threads) {
                sub->add_option("--threads", config.threads, "worker cap, 0 = hardware default");
            }
        };

        // extract
        std::vector<std::string> manifests;
        std::string catalog_path = "data/permission_catalog.csv";
        std::string label = "benign";
        std::string family;
        std::string out_path = "-";
        auto* extract = app.add_subcommand("extract", "Parse manifests into a feature-matrix CSV");
        extract->add_option("manifests", manifests, "manifest files (.xml or binary)")
            ->required()
            ->expected(-1);
        extract->add_option("--catalog", catalog_path, "permission catalog CSV");
        extract->add_option("--label", label, "label for all rows: benign or malware")
            ->check(CLI::IsMember({"benign", "malware"}));
        extract->add_option("--family", family, "family tag for malware rows");
        extract->add_option("-o,--output", out_path, "output CSV path, - for stdout");
        add_common(extract, false, false);

        // matrix
        std::vector<std::string> matrix_inputs;
        std::string families_csv;
        std::size_t top_families = 0;
        bool drop_zero = false;
        std::string matrix_out = "-";
        auto* matrix = app.add_subcommand("matrix", "Merge and filter feature-matrix CSVs");
        matrix->add_option("inputs", matrix_inputs, "matrix CSVs with identical columns")
            ->required()
            ->expected(-1);
        matrix->add_option("--filter-families", families_csv,
                           "comma-separated malware families to keep (benign rows always stay)");
        matrix->add_option("--top-families", top_families,
                           "keep only the N most frequent malware families");
        matrix->add_flag("--remove-zero-impact", drop_zero, "drop columns no row declares");
        matrix->add_option("-o,--output", matrix_out, "output CSV path, - for stdout");
        add_common(matrix, false, false);

        // rank
        std::string rank_input;
        std::string method = "chi2";
        bool yates = false;
        std::string apply_path;
        std::string rank_out = "-";
        auto* rank = app.add_subcommand("rank", "Rank features by association with the label");
        rank->add_option("input", rank_input, "feature-matrix CSV")->required();
        rank->add_option("--method", method, "test: chi2 or fisher")
            ->check(CLI::IsMember({"chi2", "fisher"}));
        rank->add_option("--alpha", config.alpha, "keep threshold on p-values");
        rank->add_flag("--yates", yates, "apply the continuity correction (chi2 only)");
        rank->add_option("--apply", apply_path, "also write the matrix filtered to kept features");
        rank->add_option("-o,--output", rank_out, "ranking report CSV, - for stdout");
        add_common(rank, false, true);

        // train
        std::string train_input;
        std::string algo = "dt";
        bool tune = false;
        std::string model_out = "model.json";
        auto* train = app.add_subcommand("train", "Train a classifier and save the model JSON");
        train->add_option("input", train_input, "feature-matrix CSV")->required();
        train->add_option("--algo", algo, "classifier: dt, rf, or svm")
            ->check(CLI::IsMember({"dt", "rf", "svm"}));
        train->add_flag("--tune", tune, "grid-search cost/gamma by cross validation (svm)");
        train->add_option("--trees", config.trees, "forest size");
        train->add_option("--mtry", config.mtry, "candidate features per split, 0 = floor(sqrt(p))");
        train->add_option("--bootstrap", config.bootstrap, "bootstrap rows per tree (rf)");
        train->add_option("--min-split", config.min_split, "smallest splittable node (dt)");
        train->add_option("--min-leaf", config.min_leaf, "smallest allowed leaf (dt)");
        train->add_option("--complexity", config.complexity, "minimum impurity decrease factor (dt)");
        train->add_option("--kernel", config.kernel, "svm kernel: rbf or linear")
            ->check(CLI::IsMember({"rbf", "linear"}));
        train->add_option("--cost", config.cost, "svm box constraint");
        train->add_option("--gamma", config.gamma, "rbf width, 0 = 1/feature_count");
        train->add_option("--tolerance", config.tolerance, "KKT tolerance");
        train->add_option("--max-passes", config.max_passes, "optimizer pass budget");
        train->add_option("--folds", config.folds, "cross-validation folds for --tune");
        train->add_option("-o,--output", model_out, "model JSON path, - for stdout");
        add_common(train, true, true);

        // eval
        std::string eval_input;
        std::string model_path;
        std::string eval_out = "-";
        auto* eval = app.add_subcommand("eval", "Score a saved model against a labeled matrix");
        eval->add_option("input", eval_input, "feature-matrix CSV with truth labels")->required();
        eval->add_option("--model", model_path, "model JSON from train")->required();
        eval->add_option("-o,--output", eval_out, "metrics CSV path, - for stdout");
        add_common(eval, false, true);

        // bench
        std::vector<std::string> data_args;
        std::string bench_out = "-";
        std::string json_path;
        std::string timing_str;
        auto* bench = app.add_subcommand("bench", "Run the full experiment matrix and emit a report");
        bench->add_option("--data", data_args, "dataset as name=path; repeatable; omitted = built-in pair");
        bench->add_option("--timing", timing_str, "on records prediction times, off zeroes the columns")
            ->check(CLI::IsMember({"on", "off"}));
        bench->add_option("--alpha", config.alpha, "ranking keep threshold");
        bench->add_option("--train-fraction", config.train_fraction, "per-class training share");
        bench->add_option("--trees", config.trees, "forest size");
        bench->add_option("--folds", config.folds, "svm tuning folds");
        bench->add_option("--json", json_path, "also write the report as JSON here");
        bench->add_option("-o,--output", bench_out, "report CSV path, - for stdout");
        add_common(bench, true, true);

        // synth
        std::size_t benign = 1000, malware = 500, features = 50, signal = 5;
        double base = 0.2, delta = 0.3;
        std::string synth_families = "famA,famB,famC";
        std::string synth_out = "-";
        auto* synth = app.add_subcommand("synth", "Generate a planted-signal synthetic matrix");
        synth->add_option("--benign", benign, "benign row count");
        synth->add_option("--malware", malware, "malware row count");
        synth->add_option("--features", features, "total feature count");
        synth->add_option("--signal", signal, "leading features that carry class signal");
        synth->add_option("--base", base, "baseline Bernoulli rate for every feature");
        synth->add_option("--delta", delta, "malware-rate shift on signal features");
        synth->add_option("--families", synth_families, "comma-separated family cycle for malware rows");
        synth->add_option("-o,--output", synth_out, "output CSV path, - for stdout");
        add_common(synth, true, false);

        try {
            app.parse(argc, argv);
        } catch (const CLI::CallForHelp& e) {
            return app.exit(e);
        } catch (const CLI::CallForAllHelp& e) {
            return app.exit(e);
        } catch (const CLI::ParseError& e) {
            std::cerr << e.what() << "\n";
            return 1;
        }

        // bench's default for trees is lighter than train's; apply only when
        // the user did not choose.
        if (bench->parsed() && bench->count("--trees") == 0 && config.trees == 500) config.trees = 100;
        if (!timing_str.empty()) config.timing = timing_str == "on";

        if (extract->parsed()) return cmd_extract(manifests, catalog_path, label, family, out_path);
        if (matrix->parsed()) {
            return cmd_matrix(matrix_inputs, families_csv, top_families, drop_zero, matrix_out);
        }
        if (rank->parsed()) return cmd_rank(rank_input, method, config, yates, apply_path, rank_out);
        if (train->parsed()) return cmd_train(train_input, algo, tune, config, model_out);
        if (eval->parsed()) return cmd_eval(eval_input, model_path, config, eval_out);
        if (bench->parsed()) return cmd_bench(data_args, config, bench_out, json_path);
        if (synth->parsed()) {
            return cmd_synth(benign, malware, features, signal, base, delta, synth_families, config,
                             synth_out);
        }
        return 1;
    } catch (const permrank::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
