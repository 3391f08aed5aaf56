#include "permrank/experiment.hpp"

#include <algorithm>
#include <cstdio>
#include <ostream>
#include <string_view>
#include <tuple>

#include "json.hpp"
#include "permrank/errors.hpp"
#include "permrank/rng.hpp"

namespace permrank {

const char* to_string(FeatureSetKind kind) noexcept {
    switch (kind) {
    case FeatureSetKind::AllColumns: return "none";
    case FeatureSetKind::RelevantOnly: return "relevant_only";
    case FeatureSetKind::ChiSquare: return "chi_square";
    case FeatureSetKind::FisherExact: return "fisher_exact";
    }
    return "unknown";
}

const char* to_string(ClassifierKind kind) noexcept {
    switch (kind) {
    case ClassifierKind::DecisionTree: return "dt";
    case ClassifierKind::RandomForest: return "rf";
    case ClassifierKind::Svm: return "svm";
    }
    return "unknown";
}

namespace {

FeatureMatrix select_features(const FeatureMatrix& full, FeatureSetKind kind, double alpha,
                              unsigned threads) {
    if (kind == FeatureSetKind::AllColumns) return full;
    FeatureMatrix relevant = remove_zero_impact(full).matrix;
    if (kind == FeatureSetKind::RelevantOnly) return relevant;
    RankOptions options;
    options.method = kind == FeatureSetKind::ChiSquare ? RankMethod::ChiSquare : RankMethod::FisherExact;
    options.alpha = alpha;
    options.threads = threads;
    return apply_filter(relevant, rank_features(relevant, options));
}

struct TrainedPredictions {
    std::vector<Label> labels;
    TimingRecord timing;
};

TrainedPredictions run_classifier(const FeatureMatrix& train, const FeatureMatrix& test,
                                  ClassifierKind kind, bool tuned, const ExperimentSpec& spec,
                                  std::uint64_t unit_seed) {
    TrainedPredictions out;
    // The reference protocol times the prediction phase, not training.
    const auto predict_timed = [&](const auto& model) {
        auto [labels, timing] = timed([&] { return model.predict(test, spec.threads); });
        out.labels = std::move(labels);
        out.timing = timing;
    };

    switch (kind) {
    case ClassifierKind::DecisionTree: {
        const DecisionTree model = DecisionTree::train(train, spec.tree);
        predict_timed(model);
        break;
    }
    case ClassifierKind::RandomForest: {
        ForestParams params = spec.forest;
        params.seed = unit_seed;
        params.threads = spec.threads;
        const RandomForest model = RandomForest::train(train, params);
        predict_timed(model);
        break;
    }
    case ClassifierKind::Svm: {
        SvmParams params = spec.svm;
        if (tuned) {
            const TuneResult best =
                svm_tune(train, spec.tune_grid, spec.tune_folds, unit_seed, spec.svm, spec.threads);
            params.cost = best.cost;
            params.gamma = best.gamma;
        }
        const SvmModel model = SvmModel::train(train, params);
        predict_timed(model);
        break;
    }
    }
    if (!spec.measure_timing) out.timing = TimingRecord{};
    return out;
}

}  // namespace

std::vector<ExperimentRow> run_experiment_matrix(const ExperimentSpec& spec) {
    if (spec.datasets.empty()) raise(errc::empty_matrix, "no datasets in experiment spec");
    if (spec.feature_sets.empty() || spec.classifiers.empty()) {
        raise(errc::bad_parameter, "experiment spec needs feature sets and classifiers");
    }

    std::vector<ExperimentRow> rows;
    for (const auto& [dataset_name, full] : spec.datasets) {
        // One split per dataset, shared across feature sets so every
        // classifier sees the same apps.
        const SplitIndices split =
            stratified_split(full, spec.train_fraction, splitmix64(spec.seed) ^ fnv1a64(dataset_name));

        for (const FeatureSetKind fs : spec.feature_sets) {
            const FeatureMatrix selected = select_features(full, fs, spec.alpha, spec.threads);
            const FeatureMatrix train = selected.take_rows(split.train);
            const FeatureMatrix test = selected.take_rows(split.test);

            std::vector<Label> truth;
            truth.reserve(test.row_count());
            for (std::size_t r = 0; r < test.row_count(); ++r) truth.push_back(test.label(r));

            for (const ClassifierKind cls : spec.classifiers) {
                const bool wants_tuned = cls == ClassifierKind::Svm && spec.svm_tuned_variant;
                for (const bool tuned : wants_tuned ? std::vector<bool>{false, true}
                                                    : std::vector<bool>{false}) {
                    const std::string unit_name = dataset_name + "/" + to_string(fs) + "/" +
                                                  to_string(cls) + (tuned ? "/tuned" : "");
                    const std::uint64_t unit_seed = splitmix64(spec.seed) ^ fnv1a64(unit_name);
                    const TrainedPredictions result =
                        run_classifier(train, test, cls, tuned, spec, unit_seed);

                    ExperimentRow row;
                    row.dataset = dataset_name;
                    row.feature_set = fs;
                    row.feature_count = selected.feature_count();
                    row.classifier = cls;
                    row.tuned = tuned;
                    row.metrics = metrics(confusion(result.labels, truth), 1.0);
                    row.timing = result.timing;
                    rows.push_back(std::move(row));
                }
            }
        }
    }

    // Canonical order: the report is a set of rows, not a trace of spec order.
    std::sort(rows.begin(), rows.end(), [](const ExperimentRow& a, const ExperimentRow& b) {
        return std::tuple(a.dataset, std::string_view(to_string(a.feature_set)),
                          std::string_view(to_string(a.classifier)), a.tuned) <
               std::tuple(b.dataset, std::string_view(to_string(b.feature_set)),
                          std::string_view(to_string(b.classifier)), b.tuned);
    });
    return rows;
}

namespace {

std::string pct(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

}  // namespace

void write_report_csv(const std::vector<ExperimentRow>& rows, std::ostream& out) {
    out << "dataset,feature_set,classifier,tuned,acc,fpr,fnr,tpr,tnr,precision,f_score,"
           "user_s,system_s,elapsed_s\n";
    for (const auto& r : rows) {
        out << r.dataset << ',' << to_string(r.feature_set) << ',' << to_string(r.classifier) << ','
            << (r.tuned ? "yes" : "no") << ',' << pct(r.metrics.accuracy) << ',' << pct(r.metrics.fpr)
            << ',' << pct(r.metrics.fnr) << ',' << pct(r.metrics.tpr) << ',' << pct(r.metrics.tnr) << ','
            << pct(r.metrics.precision) << ',' << pct(r.metrics.f_score) << ',' << pct(r.timing.user_s)
            << ',' << pct(r.timing.system_s) << ',' << pct(r.timing.elapsed_s) << '\n';
    }
    if (!out) raise(errc::io_error, "report write failed");
}

void write_report_json(const std::vector<ExperimentRow>& rows, std::uint64_t seed, std::ostream& out) {
    nlohmann::json j;
    j["format_version"] = 1;
    j["seed"] = seed;
    nlohmann::json out_rows = nlohmann::json::array();
    for (const auto& r : rows) {
        out_rows.push_back({{"dataset", r.dataset},
                            {"feature_set", to_string(r.feature_set)},
                            {"feature_count", r.feature_count},
                            {"classifier", to_string(r.classifier)},
                            {"tuned", r.tuned},
                            {"acc", r.metrics.accuracy},
                            {"fpr", r.metrics.fpr},
                            {"fnr", r.metrics.fnr},
                            {"tpr", r.metrics.tpr},
                            {"tnr", r.metrics.tnr},
                            {"precision", r.metrics.precision},
                            {"f_score", r.metrics.f_score},
                            {"user_s", r.timing.user_s},
                            {"system_s", r.timing.system_s},
                            {"elapsed_s", r.timing.elapsed_s}});
    }
    j["rows"] = std::move(out_rows);
    out << j.dump(2) << '\n';
    if (!out) raise(errc::io_error, "report write failed");
}

}  // namespace permrank
