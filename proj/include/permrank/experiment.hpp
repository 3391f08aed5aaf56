#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "permrank/dataset.hpp"
#include "permrank/forest.hpp"
#include "permrank/metrics.hpp"
#include "permrank/ranking.hpp"
#include "permrank/svm.hpp"
#include "permrank/tree.hpp"

namespace permrank {

enum class FeatureSetKind {
    AllColumns,    // the matrix as loaded
    RelevantOnly,  // zero-impact columns removed
    ChiSquare,     // relevant columns passing the chi-square threshold
    FisherExact,   // relevant columns passing the fisher threshold
};

const char* to_string(FeatureSetKind kind) noexcept;

enum class ClassifierKind { DecisionTree, RandomForest, Svm };

const char* to_string(ClassifierKind kind) noexcept;

struct ExperimentSpec {
    // Name -> matrix, evaluated independently.
    std::vector<std::pair<std::string, FeatureMatrix>> datasets;
    std::vector<FeatureSetKind> feature_sets = {FeatureSetKind::AllColumns, FeatureSetKind::RelevantOnly,
                                                FeatureSetKind::ChiSquare, FeatureSetKind::FisherExact};
    std::vector<ClassifierKind> classifiers = {ClassifierKind::DecisionTree,
                                               ClassifierKind::RandomForest, ClassifierKind::Svm};
    bool svm_tuned_variant = true;  // adds a tuned row next to every untuned svm row
    double train_fraction = 0.7;
    double alpha = 0.05;
    std::uint64_t seed = 0;
    unsigned threads = 0;
    bool measure_timing = true;     // off: timing fields stay zero

    TreeParams tree;
    ForestParams forest;
    SvmParams svm;
    TuneGrid tune_grid;
    std::size_t tune_folds = 3;
};

struct ExperimentRow {
    std::string dataset;
    FeatureSetKind feature_set = FeatureSetKind::AllColumns;
    std::size_t feature_count = 0;
    ClassifierKind classifier = ClassifierKind::DecisionTree;
    bool tuned = false;
    MetricsReport metrics;
    TimingRecord timing;  // prediction phase over the test split
};

// Feature selection runs on the full dataset; one stratified split per
// dataset is shared by every feature set and classifier. Rows come back in
// a canonical sorted order regardless of spec ordering.
std::vector<ExperimentRow> run_experiment_matrix(const ExperimentSpec& spec);

// Columns exactly:
// dataset,feature_set,classifier,tuned,acc,fpr,fnr,tpr,tnr,precision,f_score,user_s,system_s,elapsed_s
void write_report_csv(const std::vector<ExperimentRow>& rows, std::ostream& out);
void write_report_json(const std::vector<ExperimentRow>& rows, std::uint64_t seed, std::ostream& out);

}  // namespace permrank
