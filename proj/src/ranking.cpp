#include "permrank/ranking.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <set>

#include "permrank/errors.hpp"
#include "permrank/parallel.hpp"

namespace permrank {

const char* to_string(RankMethod method) noexcept {
    return method == RankMethod::ChiSquare ? "chi_square" : "fisher_exact";
}

std::optional<RankMethod> rank_method_from(std::string_view token) noexcept {
    if (token == "chi_square" || token == "chi2") return RankMethod::ChiSquare;
    if (token == "fisher_exact" || token == "fisher") return RankMethod::FisherExact;
    return std::nullopt;
}

std::vector<RankedFeature> rank_features(const FeatureMatrix& m, const RankOptions& options) {
    if (m.row_count() == 0 || m.feature_count() == 0) {
        raise(errc::empty_matrix, "ranking needs rows and columns");
    }
    if (m.count(Label::Benign) == 0 || m.count(Label::Malware) == 0) {
        raise(errc::single_class, "ranking needs both classes");
    }
    if (!(options.alpha > 0.0) || !(options.alpha < 1.0)) {
        raise(errc::bad_parameter, "alpha must be inside (0, 1)");
    }

    // Shared read-only table for the Fisher path; one per call, not per column.
    const LogFactorialTable logfact(options.method == RankMethod::FisherExact ? m.row_count() : 1);

    std::vector<RankedFeature> out(m.feature_count());
    parallel_for(m.feature_count(), options.threads, [&](std::size_t c) {
        const ContingencyTable t = contingency(m, c);
        RankedFeature& f = out[c];
        f.name = m.feature_names()[c];
        if (options.method == RankMethod::ChiSquare) {
            const ChiSquareResult r = chi_square_test(t, options.yates);
            f.statistic = r.statistic;
            f.p_value = r.p_value;
            f.degenerate = r.degenerate;
        } else {
            f.p_value = fisher_exact_test(t, logfact);
            f.degenerate = t.col1() == 0 || t.col2() == 0;
        }
        f.kept = f.p_value <= options.alpha;
    });

    // Stable sort: equal p-values stay in column order.
    std::stable_sort(out.begin(), out.end(),
                     [](const RankedFeature& a, const RankedFeature& b) { return a.p_value < b.p_value; });
    return out;
}

FeatureMatrix apply_filter(const FeatureMatrix& m, const std::vector<RankedFeature>& ranking) {
    std::set<std::string> kept_names;
    for (const auto& f : ranking) {
        const auto& names = m.feature_names();
        if (std::find(names.begin(), names.end(), f.name) == names.end()) {
            raise(errc::unknown_feature, f.name + " is not a matrix column");
        }
        if (f.kept) kept_names.insert(f.name);
    }
    std::vector<std::size_t> keep;
    for (std::size_t c = 0; c < m.feature_count(); ++c) {
        if (kept_names.count(m.feature_names()[c]) != 0) keep.push_back(c);
    }
    return m.take_columns(keep);
}

void write_ranking_csv(const std::vector<RankedFeature>& ranking, std::ostream& out) {
    out << "permission,statistic,p_value,kept\n";
    char buf[64];
    for (const auto& f : ranking) {
        out << f.name << ',';
        if (f.statistic) {
            std::snprintf(buf, sizeof buf, "%.6f", *f.statistic);
            out << buf;
        }
        std::snprintf(buf, sizeof buf, "%.2E", f.p_value);
        out << ',' << buf << ',' << (f.kept ? "true" : "false") << '\n';
    }
    if (!out) raise(errc::io_error, "ranking write failed");
}

std::vector<RankedFeature> read_ranking_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) raise(errc::schema_error, "ranking csv is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "permission,statistic,p_value,kept") {
        raise(errc::schema_error, "ranking header must be permission,statistic,p_value,kept");
    }
    std::vector<RankedFeature> out;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        RankedFeature f;
        std::size_t start = 0;
        std::vector<std::string> cells;
        for (std::size_t i = 0; i <= line.size(); ++i) {
            if (i == line.size() || line[i] == ',') {
                cells.emplace_back(line.substr(start, i - start));
                start = i + 1;
            }
        }
        if (cells.size() != 4) raise(errc::schema_error, "ranking row needs 4 cells: " + line);
        f.name = cells[0];
        try {
            if (!cells[1].empty()) f.statistic = std::stod(cells[1]);
            f.p_value = std::stod(cells[2]);
        } catch (const std::exception&) {
            raise(errc::schema_error, "ranking row has a non-numeric cell: " + line);
        }
        if (cells[3] == "true") f.kept = true;
        else if (cells[3] == "false") f.kept = false;
        else raise(errc::schema_error, "kept must be true or false: " + line);
        out.push_back(std::move(f));
    }
    return out;
}

}  // namespace permrank
