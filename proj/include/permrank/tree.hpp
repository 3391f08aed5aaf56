#pragma once

#include <cstdint>
#include <iosfwd>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "permrank/dataset.hpp"

namespace permrank {

struct TreeParams {
    std::size_t min_split = 2;   // nodes smaller than this become leaves
    std::size_t min_leaf = 1;    // both children must keep at least this many rows
    double complexity = 0.0;     // weighted decrease must exceed complexity * root gini
};

class DecisionTree {
public:
    struct Node {
        std::int32_t feature = -1;  // -1 marks a leaf
        std::int32_t left = -1;     // rows with feature == 0
        std::int32_t right = -1;    // rows with feature == 1
        Label majority = Label::Benign;
        std::uint64_t n_benign = 0;
        std::uint64_t n_malware = 0;
    };

    static DecisionTree train(const FeatureMatrix& m, const TreeParams& params = {});

    // Forest hook: grows on a row subset, sampling mtry candidate features
    // per node from rng. rng == nullptr means all features are candidates.
    static DecisionTree train_on_rows(const FeatureMatrix& m, std::span<const std::size_t> rows,
                                      const TreeParams& params, std::size_t mtry, std::mt19937_64* rng);

    Label predict(std::span<const std::uint8_t> row) const;
    std::vector<Label> predict(const FeatureMatrix& m, unsigned threads = 0) const;

    const std::vector<Node>& nodes() const noexcept { return nodes_; }
    const std::vector<std::string>& feature_names() const noexcept { return feature_names_; }
    std::size_t leaf_count() const noexcept;
    std::size_t depth() const noexcept;

    void save(std::ostream& out) const;
    static DecisionTree load(std::istream& in);

private:
    friend class RandomForest;
    std::vector<std::string> feature_names_;
    std::vector<Node> nodes_;
    TreeParams params_;
};

}  // namespace permrank
