#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "permrank/tree.hpp"

namespace permrank {

struct ForestParams {
    std::size_t n_trees = 500;
    std::size_t mtry = 0;       // 0 = floor(sqrt(feature_count))
    bool bootstrap = true;
    TreeParams tree;            // default: grow to purity
    std::uint64_t seed = 0;
    unsigned threads = 0;
};

class RandomForest {
public:
    static RandomForest train(const FeatureMatrix& m, const ForestParams& params);

    // Majority vote over trees; a tie is benign.
    Label predict(std::span<const std::uint8_t> row) const;
    std::vector<Label> predict(const FeatureMatrix& m, unsigned threads = 0) const;
    std::size_t malware_votes(std::span<const std::uint8_t> row) const;

    const std::vector<DecisionTree>& trees() const noexcept { return trees_; }
    const ForestParams& params() const noexcept { return params_; }

    void save(std::ostream& out) const;
    static RandomForest load(std::istream& in);

private:
    std::vector<DecisionTree> trees_;
    ForestParams params_;
};

}  // namespace permrank
