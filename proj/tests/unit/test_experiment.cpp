#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "permrank/errors.hpp"
#include "permrank/experiment.hpp"

using namespace permrank;

namespace {

errc code_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an Error");
    return errc::io_error;
}

// Three signal features, nine noise features, one dead column.
FeatureMatrix planted(std::uint64_t seed) {
    SynthSpec spec;
    for (int i = 0; i < 13; ++i) spec.feature_names.push_back("f" + std::to_string(i));
    spec.p_benign.assign(13, 0.3);
    spec.p_malware.assign(13, 0.3);
    for (int i = 0; i < 3; ++i) {
        spec.p_benign[i] = 0.15;
        spec.p_malware[i] = 0.60;
    }
    spec.p_benign[12] = 0.0;
    spec.p_malware[12] = 0.0;
    spec.benign_count = 120;
    spec.malware_count = 80;
    spec.families = {"fam1", "fam2"};
    return synth_generate(spec, seed);
}

ExperimentSpec base_spec(FeatureMatrix m) {
    ExperimentSpec spec;
    spec.datasets.emplace_back("ds", std::move(m));
    spec.seed = 11;
    spec.threads = 2;
    spec.measure_timing = false;
    spec.forest.n_trees = 25;
    spec.tune_grid.costs = {0.1, 10.0};
    spec.tune_grid.gamma_factors = {1.0};
    return spec;
}

std::string csv_of(const std::vector<ExperimentRow>& rows) {
    std::ostringstream out;
    write_report_csv(rows, out);
    return out.str();
}

}  // namespace

TEST_CASE("an experiment spec is validated") {
    ExperimentSpec empty;
    CHECK(code_of([&] { run_experiment_matrix(empty); }) == errc::empty_matrix);

    ExperimentSpec no_sets = base_spec(planted(1));
    no_sets.feature_sets.clear();
    CHECK(code_of([&] { run_experiment_matrix(no_sets); }) == errc::bad_parameter);

    ExperimentSpec no_classifiers = base_spec(planted(1));
    no_classifiers.classifiers.clear();
    CHECK(code_of([&] { run_experiment_matrix(no_classifiers); }) == errc::bad_parameter);
}

TEST_CASE("a single cell produces a single row") {
    ExperimentSpec spec = base_spec(planted(2));
    spec.feature_sets = {FeatureSetKind::AllColumns};
    spec.classifiers = {ClassifierKind::DecisionTree};
    const std::vector<ExperimentRow> rows = run_experiment_matrix(spec);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].dataset == "ds");
    CHECK(rows[0].feature_set == FeatureSetKind::AllColumns);
    CHECK(rows[0].feature_count == 13);
    CHECK(rows[0].classifier == ClassifierKind::DecisionTree);
    CHECK(!rows[0].tuned);
    CHECK(rows[0].metrics.accuracy >= 0.0);
    CHECK(rows[0].metrics.accuracy <= 100.0);
}

TEST_CASE("the tuned svm variant doubles only the svm rows") {
    ExperimentSpec spec = base_spec(planted(3));
    spec.feature_sets = {FeatureSetKind::RelevantOnly};
    spec.classifiers = {ClassifierKind::Svm};
    const std::vector<ExperimentRow> rows = run_experiment_matrix(spec);
    REQUIRE(rows.size() == 2);
    CHECK(!rows[0].tuned);
    CHECK(rows[1].tuned);

    spec.svm_tuned_variant = false;
    CHECK(run_experiment_matrix(spec).size() == 1);

    spec.classifiers = {ClassifierKind::DecisionTree};
    spec.svm_tuned_variant = true;
    CHECK(run_experiment_matrix(spec).size() == 1);  // tuning never applies to trees
}

TEST_CASE("the full matrix enumerates every cell in canonical order") {
    const FeatureMatrix m = planted(4);
    ExperimentSpec spec = base_spec(m);
    spec.datasets.clear();
    spec.datasets.emplace_back("beta", m);
    spec.datasets.emplace_back("alpha", m);

    const std::vector<ExperimentRow> rows = run_experiment_matrix(spec);
    // 2 datasets x 4 feature sets x (dt + rf + svm + tuned svm).
    REQUIRE(rows.size() == 32);
    CHECK(rows.front().dataset == "alpha");
    CHECK(rows.back().dataset == "beta");
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto key = [](const ExperimentRow& r) {
            return std::tuple(r.dataset, std::string(to_string(r.feature_set)),
                              std::string(to_string(r.classifier)), r.tuned);
        };
        CHECK(key(rows[i - 1]) < key(rows[i]));
    }

    // Selection narrows monotonically; identical datasets select identically.
    std::map<std::string, std::size_t> counts;
    for (const auto& r : rows) {
        if (r.dataset == "alpha") counts[to_string(r.feature_set)] = r.feature_count;
    }
    CHECK(counts.at("none") == 13);
    CHECK(counts.at("relevant_only") == 12);  // the dead column is dropped
    CHECK(counts.at("chi_square") <= counts.at("relevant_only"));
    CHECK(counts.at("fisher_exact") <= counts.at("relevant_only"));
    CHECK(counts.at("chi_square") >= 3);  // planted signal always survives
    CHECK(counts.at("fisher_exact") >= 3);
}

TEST_CASE("reports are deterministic and ignore spec ordering") {
    const FeatureMatrix m = planted(5);
    ExperimentSpec spec = base_spec(m);
    const std::string first = csv_of(run_experiment_matrix(spec));
    const std::string second = csv_of(run_experiment_matrix(spec));
    CHECK(first == second);

    ExperimentSpec shuffled = base_spec(m);
    shuffled.feature_sets = {FeatureSetKind::FisherExact, FeatureSetKind::AllColumns,
                             FeatureSetKind::ChiSquare, FeatureSetKind::RelevantOnly};
    shuffled.classifiers = {ClassifierKind::Svm, ClassifierKind::DecisionTree,
                            ClassifierKind::RandomForest};
    CHECK(csv_of(run_experiment_matrix(shuffled)) == first);
}

TEST_CASE("timing can be disabled") {
    ExperimentSpec spec = base_spec(planted(6));
    spec.feature_sets = {FeatureSetKind::AllColumns};
    spec.classifiers = {ClassifierKind::DecisionTree};

    spec.measure_timing = false;
    const std::vector<ExperimentRow> off = run_experiment_matrix(spec);
    CHECK(off[0].timing.user_s == 0.0);
    CHECK(off[0].timing.system_s == 0.0);
    CHECK(off[0].timing.elapsed_s == 0.0);

    spec.measure_timing = true;
    const std::vector<ExperimentRow> on = run_experiment_matrix(spec);
    CHECK(on[0].timing.elapsed_s >= 0.0);
}

TEST_CASE("the csv report has the documented shape") {
    ExperimentSpec spec = base_spec(planted(7));
    spec.feature_sets = {FeatureSetKind::AllColumns};
    spec.classifiers = {ClassifierKind::Svm};
    const std::string text = csv_of(run_experiment_matrix(spec));

    std::istringstream lines(text);
    std::string header;
    std::getline(lines, header);
    CHECK(header ==
          "dataset,feature_set,classifier,tuned,acc,fpr,fnr,tpr,tnr,precision,f_score,"
          "user_s,system_s,elapsed_s");
    std::string line;
    std::size_t body = 0;
    while (std::getline(lines, line)) {
        ++body;
        CHECK(std::count(line.begin(), line.end(), ',') == 13);
        CHECK(line.rfind("ds,none,svm,", 0) == 0);
    }
    CHECK(body == 2);
    CHECK(text.find(",yes,") != std::string::npos);
    CHECK(text.find(",no,") != std::string::npos);
}

TEST_CASE("the json report carries the seed and every row") {
    ExperimentSpec spec = base_spec(planted(8));
    spec.feature_sets = {FeatureSetKind::AllColumns, FeatureSetKind::RelevantOnly};
    spec.classifiers = {ClassifierKind::DecisionTree};
    const std::vector<ExperimentRow> rows = run_experiment_matrix(spec);

    std::ostringstream out;
    write_report_json(rows, spec.seed, out);
    const nlohmann::json j = nlohmann::json::parse(out.str());
    CHECK(j.at("format_version").get<int>() == 1);
    CHECK(j.at("seed").get<std::uint64_t>() == 11);
    REQUIRE(j.at("rows").size() == rows.size());
    for (const auto& row : j.at("rows")) {
        for (const char* key : {"dataset", "feature_set", "feature_count", "classifier", "tuned",
                                "acc", "fpr", "fnr", "tpr", "tnr", "precision", "f_score", "user_s",
                                "system_s", "elapsed_s"}) {
            CHECK(row.contains(key));
        }
    }
}
