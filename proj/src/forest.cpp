#include "permrank/forest.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "json.hpp"
#include "permrank/errors.hpp"
#include "permrank/parallel.hpp"
#include "permrank/rng.hpp"

namespace permrank {
namespace {

constexpr int kForestFormatVersion = 1;

}  // namespace

RandomForest RandomForest::train(const FeatureMatrix& m, const ForestParams& params) {
    if (m.row_count() == 0 || m.feature_count() == 0) raise(errc::empty_matrix, "nothing to train on");
    if (params.n_trees == 0) raise(errc::bad_parameter, "n_trees must be >= 1");

    ForestParams resolved = params;
    if (resolved.mtry == 0) {
        resolved.mtry = static_cast<std::size_t>(
            std::floor(std::sqrt(static_cast<double>(m.feature_count()))));
        if (resolved.mtry == 0) resolved.mtry = 1;
    }
    if (resolved.mtry > m.feature_count()) raise(errc::bad_parameter, "mtry exceeds feature count");

    RandomForest f;
    f.params_ = resolved;
    f.trees_.resize(resolved.n_trees);
    // Tree i draws only from substream (seed, i), so the forest is identical
    // no matter how trees are scheduled over threads.
    parallel_for(resolved.n_trees, resolved.threads, [&](std::size_t i) {
        auto rng = substream(resolved.seed, i);
        std::vector<std::size_t> rows;
        rows.reserve(m.row_count());
        if (resolved.bootstrap) {
            for (std::size_t r = 0; r < m.row_count(); ++r) {
                rows.push_back(static_cast<std::size_t>(draw_below(rng, m.row_count())));
            }
        } else {
            for (std::size_t r = 0; r < m.row_count(); ++r) rows.push_back(r);
        }
        f.trees_[i] = DecisionTree::train_on_rows(m, rows, resolved.tree, resolved.mtry, &rng);
    });
    return f;
}

Label RandomForest::predict(std::span<const std::uint8_t> row) const {
    const std::size_t votes = malware_votes(row);
    return votes * 2 > trees_.size() ? Label::Malware : Label::Benign;
}

std::size_t RandomForest::malware_votes(std::span<const std::uint8_t> row) const {
    std::size_t votes = 0;
    for (const auto& t : trees_) {
        if (t.predict(row) == Label::Malware) ++votes;
    }
    return votes;
}

std::vector<Label> RandomForest::predict(const FeatureMatrix& m, unsigned threads) const {
    std::vector<Label> out(m.row_count());
    parallel_for(m.row_count(), threads, [&](std::size_t r) { out[r] = predict(m.row(r)); });
    return out;
}

void RandomForest::save(std::ostream& out) const {
    nlohmann::json j;
    j["format_version"] = kForestFormatVersion;
    j["kind"] = "random_forest";
    j["params"] = {{"n_trees", params_.n_trees},
                   {"mtry", params_.mtry},
                   {"bootstrap", params_.bootstrap},
                   {"seed", params_.seed},
                   {"min_split", params_.tree.min_split},
                   {"min_leaf", params_.tree.min_leaf},
                   {"complexity", params_.tree.complexity}};
    nlohmann::json trees = nlohmann::json::array();
    for (const auto& t : trees_) {
        std::ostringstream buf;
        t.save(buf);
        trees.push_back(nlohmann::json::parse(buf.str()));
    }
    j["trees"] = std::move(trees);
    out << j.dump(2) << '\n';
    if (!out) raise(errc::io_error, "forest write failed");
}

RandomForest RandomForest::load(std::istream& in) {
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        raise(errc::schema_error, std::string("forest json: ") + e.what());
    }
    try {
        if (j.at("format_version").get<int>() != kForestFormatVersion) {
            raise(errc::schema_error, "unsupported forest format version");
        }
        if (j.at("kind").get<std::string>() != "random_forest") {
            raise(errc::schema_error, "model kind is not random_forest");
        }
        RandomForest f;
        const auto& p = j.at("params");
        f.params_.n_trees = p.at("n_trees").get<std::size_t>();
        f.params_.mtry = p.at("mtry").get<std::size_t>();
        f.params_.bootstrap = p.at("bootstrap").get<bool>();
        f.params_.seed = p.at("seed").get<std::uint64_t>();
        f.params_.tree.min_split = p.at("min_split").get<std::size_t>();
        f.params_.tree.min_leaf = p.at("min_leaf").get<std::size_t>();
        f.params_.tree.complexity = p.at("complexity").get<double>();
        for (const auto& tj : j.at("trees")) {
            std::istringstream buf(tj.dump());
            f.trees_.push_back(DecisionTree::load(buf));
        }
        if (f.trees_.empty()) raise(errc::schema_error, "forest has no trees");
        return f;
    } catch (const nlohmann::json::exception& e) {
        raise(errc::schema_error, std::string("forest json: ") + e.what());
    }
}

}  // namespace permrank
