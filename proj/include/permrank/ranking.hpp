#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "permrank/dataset.hpp"
#include "permrank/stats.hpp"

namespace permrank {

enum class RankMethod { ChiSquare, FisherExact };

const char* to_string(RankMethod method) noexcept;
std::optional<RankMethod> rank_method_from(std::string_view token) noexcept;

struct RankedFeature {
    std::string name;
    std::optional<double> statistic;  // chi-square only
    double p_value = 1.0;
    bool degenerate = false;
    bool kept = false;  // p <= alpha
};

struct RankOptions {
    RankMethod method = RankMethod::ChiSquare;
    double alpha = 0.05;
    bool yates = false;     // chi-square only
    unsigned threads = 0;   // 0 = hardware default
};

// One test per column; both classes must be present. The result is sorted
// ascending by p-value, ties broken by column order.
std::vector<RankedFeature> rank_features(const FeatureMatrix& m, const RankOptions& options);

// Keeps exactly the columns whose verdict says kept, in matrix column
// order. Every ranked name must exist in the matrix.
FeatureMatrix apply_filter(const FeatureMatrix& m, const std::vector<RankedFeature>& ranking);

// CSV: permission,statistic,p_value,kept, in ranking order (ascending p).
// Statistic empty when the method does not produce one; p-values in
// scientific notation, 3 significant digits; kept is true/false.
void write_ranking_csv(const std::vector<RankedFeature>& ranking, std::ostream& out);
std::vector<RankedFeature> read_ranking_csv(std::istream& in);

}  // namespace permrank
