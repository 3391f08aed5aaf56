#include "permrank/tree.hpp"

#include <algorithm>
#include <istream>
#include <ostream>

#include "json.hpp"
#include "permrank/errors.hpp"
#include "permrank/parallel.hpp"
#include "permrank/rng.hpp"

namespace permrank {
namespace {

constexpr int kTreeFormatVersion = 1;

double gini(std::uint64_t n_benign, std::uint64_t n_malware) {
    const double n = static_cast<double>(n_benign + n_malware);
    if (n == 0.0) return 0.0;
    const double pb = static_cast<double>(n_benign) / n;
    const double pm = static_cast<double>(n_malware) / n;
    return 1.0 - pb * pb - pm * pm;
}

Label majority_of(std::uint64_t n_benign, std::uint64_t n_malware) {
    // Ties resolve to benign: an undecided app is not flagged.
    return n_malware > n_benign ? Label::Malware : Label::Benign;
}

struct Grower {
    const FeatureMatrix& m;
    const TreeParams& params;
    std::size_t mtry;
    std::mt19937_64* rng;
    double stop_threshold = 0.0;  // complexity * root gini
    std::size_t n_root = 0;
    std::vector<DecisionTree::Node> nodes;
    std::vector<std::size_t> candidate_buffer;

    // rows is reordered in place while partitioning; each call owns [begin, end).
    std::int32_t grow(std::vector<std::size_t>& rows, std::size_t begin, std::size_t end) {
        std::uint64_t n_benign = 0, n_malware = 0;
        for (std::size_t i = begin; i < end; ++i) {
            (m.label(rows[i]) == Label::Malware ? n_malware : n_benign) += 1;
        }

        DecisionTree::Node node;
        node.n_benign = n_benign;
        node.n_malware = n_malware;
        node.majority = majority_of(n_benign, n_malware);

        const std::size_t n_node = end - begin;
        const bool pure = n_benign == 0 || n_malware == 0;
        if (pure || n_node < params.min_split) {
            nodes.push_back(node);
            return static_cast<std::int32_t>(nodes.size() - 1);
        }

        const double node_gini = gini(n_benign, n_malware);
        const double node_weight = static_cast<double>(n_node) / static_cast<double>(n_root);

        // Candidate features for this node. With no rng the candidate set is
        // every feature; either way indexes ascend, so the lowest-index rule
        // breaks score ties identically in both modes.
        const std::size_t p = m.feature_count();
        std::span<const std::size_t> candidates;
        if (rng != nullptr && mtry < p) {
            candidate_buffer = sample_without_replacement(*rng, p, mtry);
            candidates = candidate_buffer;
        } else {
            if (candidate_buffer.size() != p) {
                candidate_buffer.resize(p);
                for (std::size_t i = 0; i < p; ++i) candidate_buffer[i] = i;
            }
            candidates = candidate_buffer;
        }

        double best_decrease = 0.0;
        std::int32_t best_feature = -1;
        for (const std::size_t c : candidates) {
            std::uint64_t ones_benign = 0, ones_malware = 0;
            for (std::size_t i = begin; i < end; ++i) {
                if (m.at(rows[i], c) != 0) {
                    (m.label(rows[i]) == Label::Malware ? ones_malware : ones_benign) += 1;
                }
            }
            const std::uint64_t n_ones = ones_benign + ones_malware;
            const std::uint64_t n_zeros = n_node - n_ones;
            if (n_ones < params.min_leaf || n_zeros < params.min_leaf) continue;

            const double g_ones = gini(ones_benign, ones_malware);
            const double g_zeros = gini(n_benign - ones_benign, n_malware - ones_malware);
            const double child_mix =
                (static_cast<double>(n_ones) * g_ones + static_cast<double>(n_zeros) * g_zeros) /
                static_cast<double>(n_node);
            const double decrease = node_weight * (node_gini - child_mix);
            if (decrease > best_decrease) {  // strict: ties keep the earlier, lower index
                best_decrease = decrease;
                best_feature = static_cast<std::int32_t>(c);
            }
        }

        if (best_feature < 0 || best_decrease <= stop_threshold) {
            nodes.push_back(node);
            return static_cast<std::int32_t>(nodes.size() - 1);
        }

        // Stable partition keeps row order inside each side, so identical
        // inputs grow identical trees regardless of traversal history.
        const auto split_point = std::stable_partition(
            rows.begin() + static_cast<std::ptrdiff_t>(begin), rows.begin() + static_cast<std::ptrdiff_t>(end),
            [&](std::size_t r) { return m.at(r, static_cast<std::size_t>(best_feature)) == 0; });
        const std::size_t mid = static_cast<std::size_t>(split_point - rows.begin());

        node.feature = best_feature;
        nodes.push_back(node);
        const std::size_t self = nodes.size() - 1;
        const std::int32_t left = grow(rows, begin, mid);
        const std::int32_t right = grow(rows, mid, end);
        nodes[self].left = left;
        nodes[self].right = right;
        return static_cast<std::int32_t>(self);
    }
};

}  // namespace

DecisionTree DecisionTree::train(const FeatureMatrix& m, const TreeParams& params) {
    std::vector<std::size_t> rows(m.row_count());
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
    return train_on_rows(m, rows, params, m.feature_count(), nullptr);
}

DecisionTree DecisionTree::train_on_rows(const FeatureMatrix& m, std::span<const std::size_t> rows,
                                         const TreeParams& params, std::size_t mtry,
                                         std::mt19937_64* rng) {
    if (m.row_count() == 0 || m.feature_count() == 0) raise(errc::empty_matrix, "nothing to train on");
    if (rows.empty()) raise(errc::empty_matrix, "empty row subset");
    if (params.min_leaf == 0 || params.min_split < 2) {
        raise(errc::bad_parameter, "min_leaf >= 1 and min_split >= 2 required");
    }
    if (params.complexity < 0.0) raise(errc::bad_parameter, "complexity must be >= 0");
    if (mtry == 0 || mtry > m.feature_count()) raise(errc::bad_parameter, "mtry outside [1, feature_count]");

    std::uint64_t n_benign = 0, n_malware = 0;
    for (const std::size_t r : rows) {
        if (r >= m.row_count()) raise(errc::schema_error, "row index out of range");
        (m.label(r) == Label::Malware ? n_malware : n_benign) += 1;
    }

    Grower grower{m, params, mtry, rng};
    grower.n_root = rows.size();
    grower.stop_threshold = params.complexity * gini(n_benign, n_malware);

    std::vector<std::size_t> work(rows.begin(), rows.end());
    grower.grow(work, 0, work.size());

    DecisionTree t;
    t.feature_names_ = m.feature_names();
    t.nodes_ = std::move(grower.nodes);
    t.params_ = params;
    return t;
}

Label DecisionTree::predict(std::span<const std::uint8_t> row) const {
    if (row.size() != feature_names_.size()) raise(errc::width_mismatch, "row width differs from model");
    std::size_t at = 0;  // the grower pushes the root first
    for (;;) {
        const Node& node = nodes_[at];
        if (node.feature < 0) return node.majority;
        at = static_cast<std::size_t>(row[static_cast<std::size_t>(node.feature)] == 0 ? node.left
                                                                                       : node.right);
    }
}

std::vector<Label> DecisionTree::predict(const FeatureMatrix& m, unsigned threads) const {
    std::vector<Label> out(m.row_count());
    parallel_for(m.row_count(), threads, [&](std::size_t r) { out[r] = predict(m.row(r)); });
    return out;
}

std::size_t DecisionTree::leaf_count() const noexcept {
    std::size_t n = 0;
    for (const auto& node : nodes_) {
        if (node.feature < 0) ++n;
    }
    return n;
}

std::size_t DecisionTree::depth() const noexcept {
    if (nodes_.empty()) return 0;
    std::size_t deepest = 0;
    std::vector<std::pair<std::size_t, std::size_t>> stack{{0, 0}};
    while (!stack.empty()) {
        const auto [at, d] = stack.back();
        stack.pop_back();
        deepest = std::max(deepest, d);
        const Node& node = nodes_[at];
        if (node.feature >= 0) {
            stack.push_back({static_cast<std::size_t>(node.left), d + 1});
            stack.push_back({static_cast<std::size_t>(node.right), d + 1});
        }
    }
    return deepest;
}

void DecisionTree::save(std::ostream& out) const {
    nlohmann::json j;
    j["format_version"] = kTreeFormatVersion;
    j["kind"] = "decision_tree";
    j["feature_names"] = feature_names_;
    j["params"] = {{"min_split", params_.min_split},
                   {"min_leaf", params_.min_leaf},
                   {"complexity", params_.complexity}};
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& n : nodes_) {
        nodes.push_back({{"feature", n.feature},
                         {"left", n.left},
                         {"right", n.right},
                         {"majority", n.majority == Label::Malware ? "malware" : "benign"},
                         {"n_benign", n.n_benign},
                         {"n_malware", n.n_malware}});
    }
    j["nodes"] = std::move(nodes);
    out << j.dump(2) << '\n';
    if (!out) raise(errc::io_error, "tree write failed");
}

DecisionTree DecisionTree::load(std::istream& in) {
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        raise(errc::schema_error, std::string("tree json: ") + e.what());
    }
    try {
        if (j.at("format_version").get<int>() != kTreeFormatVersion) {
            raise(errc::schema_error, "unsupported tree format version");
        }
        if (j.at("kind").get<std::string>() != "decision_tree") {
            raise(errc::schema_error, "model kind is not decision_tree");
        }
        DecisionTree t;
        t.feature_names_ = j.at("feature_names").get<std::vector<std::string>>();
        t.params_.min_split = j.at("params").at("min_split").get<std::size_t>();
        t.params_.min_leaf = j.at("params").at("min_leaf").get<std::size_t>();
        t.params_.complexity = j.at("params").at("complexity").get<double>();
        for (const auto& nj : j.at("nodes")) {
            Node n;
            n.feature = nj.at("feature").get<std::int32_t>();
            n.left = nj.at("left").get<std::int32_t>();
            n.right = nj.at("right").get<std::int32_t>();
            n.majority = nj.at("majority").get<std::string>() == "malware" ? Label::Malware : Label::Benign;
            n.n_benign = nj.at("n_benign").get<std::uint64_t>();
            n.n_malware = nj.at("n_malware").get<std::uint64_t>();
            t.nodes_.push_back(n);
        }
        if (t.nodes_.empty()) raise(errc::schema_error, "tree has no nodes");
        return t;
    } catch (const nlohmann::json::exception& e) {
        raise(errc::schema_error, std::string("tree json: ") + e.what());
    }
}

}  // namespace permrank
