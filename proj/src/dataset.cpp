#include "permrank/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "permrank/errors.hpp"
#include "permrank/rng.hpp"

namespace permrank {

FeatureMatrix::FeatureMatrix(std::vector<std::string> feature_names, std::vector<AppSample> samples)
    : feature_names_(std::move(feature_names)) {
    const std::size_t width = feature_names_.size();
    for (std::size_t i = 0; i + 1 < feature_names_.size(); ++i) {
        for (std::size_t j = i + 1; j < feature_names_.size(); ++j) {
            if (feature_names_[i] == feature_names_[j]) {
                raise(errc::schema_error, "duplicate feature name " + feature_names_[i]);
            }
        }
    }
    cells_.reserve(samples.size() * width);
    labels_.reserve(samples.size());
    families_.reserve(samples.size());
    app_ids_.reserve(samples.size());
    for (auto& s : samples) {
        if (s.bits.size() != width) {
            raise(errc::width_mismatch, "row " + s.app_id + " has " + std::to_string(s.bits.size()) +
                                            " cells, expected " + std::to_string(width));
        }
        for (const auto bit : s.bits) {
            if (bit > 1) raise(errc::schema_error, "cell values must be 0 or 1");
        }
        cells_.insert(cells_.end(), s.bits.begin(), s.bits.end());
        labels_.push_back(s.label);
        families_.push_back(s.label == Label::Malware ? std::move(s.family) : std::string());
        app_ids_.push_back(std::move(s.app_id));
    }
}

std::size_t FeatureMatrix::count(Label label) const noexcept {
    std::size_t n = 0;
    for (const auto l : labels_) {
        if (l == label) ++n;
    }
    return n;
}

std::size_t FeatureMatrix::column_sum(std::size_t c) const {
    std::size_t sum = 0;
    for (std::size_t r = 0; r < row_count(); ++r) sum += at(r, c);
    return sum;
}

FeatureMatrix FeatureMatrix::take_rows(std::span<const std::size_t> rows) const {
    FeatureMatrix out;
    out.feature_names_ = feature_names_;
    out.cells_.reserve(rows.size() * feature_count());
    for (const auto r : rows) {
        if (r >= row_count()) raise(errc::schema_error, "row index out of range");
        const auto src = row(r);
        out.cells_.insert(out.cells_.end(), src.begin(), src.end());
        out.labels_.push_back(labels_[r]);
        out.families_.push_back(families_[r]);
        out.app_ids_.push_back(app_ids_[r]);
    }
    return out;
}

FeatureMatrix FeatureMatrix::take_columns(std::span<const std::size_t> columns) const {
    FeatureMatrix out;
    for (const auto c : columns) {
        if (c >= feature_count()) raise(errc::schema_error, "column index out of range");
        out.feature_names_.push_back(feature_names_[c]);
    }
    out.cells_.reserve(row_count() * columns.size());
    for (std::size_t r = 0; r < row_count(); ++r) {
        for (const auto c : columns) out.cells_.push_back(at(r, c));
    }
    out.labels_ = labels_;
    out.families_ = families_;
    out.app_ids_ = app_ids_;
    return out;
}

FeatureMatrix build_matrix(std::vector<std::string> feature_names, std::vector<AppSample> samples) {
    return FeatureMatrix(std::move(feature_names), std::move(samples));
}

FeatureMatrix build_matrix(std::vector<AppSample> samples, const PermissionCatalog& catalog) {
    std::vector<std::string> names;
    names.reserve(catalog.size());
    for (const auto& e : catalog.entries()) names.push_back(e.name);
    return FeatureMatrix(std::move(names), std::move(samples));
}

ZeroImpactResult remove_zero_impact(const FeatureMatrix& m) {
    ZeroImpactResult out;
    std::vector<std::size_t> keep;
    for (std::size_t c = 0; c < m.feature_count(); ++c) {
        if (m.column_sum(c) == 0) {
            out.removed.push_back(m.feature_names()[c]);
        } else {
            keep.push_back(c);
        }
    }
    out.matrix = m.take_columns(keep);
    return out;
}

FeatureMatrix filter_families(const FeatureMatrix& m, const std::set<std::string>& keep) {
    std::vector<std::size_t> rows;
    for (std::size_t r = 0; r < m.row_count(); ++r) {
        if (m.label(r) == Label::Benign || keep.count(m.family(r)) != 0) rows.push_back(r);
    }
    return m.take_rows(rows);
}

std::vector<std::pair<std::string, std::size_t>> family_counts(const FeatureMatrix& m) {
    std::map<std::string, std::size_t> tally;
    for (std::size_t r = 0; r < m.row_count(); ++r) {
        if (m.label(r) == Label::Malware) ++tally[m.family(r)];
    }
    std::vector<std::pair<std::string, std::size_t>> out(tally.begin(), tally.end());
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    return out;
}

SplitIndices stratified_split(const FeatureMatrix& m, double train_fraction, std::uint64_t seed) {
    if (!(train_fraction > 0.0) || !(train_fraction < 1.0)) {
        raise(errc::bad_parameter, "train fraction must be inside (0, 1)");
    }
    std::vector<std::size_t> benign_rows, malware_rows;
    for (std::size_t r = 0; r < m.row_count(); ++r) {
        (m.label(r) == Label::Malware ? malware_rows : benign_rows).push_back(r);
    }
    if (benign_rows.size() < 2 || malware_rows.size() < 2) {
        raise(errc::class_too_small, "each class needs at least 2 rows to split");
    }

    SplitIndices out;
    out.seed = seed;
    auto rng = substream(seed, "stratified_split");
    for (auto* rows : {&benign_rows, &malware_rows}) {
        fisher_yates(rng, *rows);
        std::size_t n_train = static_cast<std::size_t>(
            std::llround(train_fraction * static_cast<double>(rows->size())));
        // Rounding at tiny class sizes may empty one side; both sides keep
        // at least one row of each class.
        n_train = std::clamp<std::size_t>(n_train, 1, rows->size() - 1);
        out.train.insert(out.train.end(), rows->begin(), rows->begin() + n_train);
        out.test.insert(out.test.end(), rows->begin() + n_train, rows->end());
    }
    std::sort(out.train.begin(), out.train.end());
    std::sort(out.test.begin(), out.test.end());
    return out;
}

FeatureMatrix synth_generate(const SynthSpec& spec, std::uint64_t seed) {
    const std::size_t p = spec.feature_names.size();
    if (p == 0) raise(errc::empty_matrix, "synth spec has no features");
    if (spec.p_benign.size() != p || spec.p_malware.size() != p) {
        raise(errc::width_mismatch, "rate vectors must match the feature list");
    }
    for (const auto rates : {&spec.p_benign, &spec.p_malware}) {
        for (const double v : *rates) {
            if (!(v >= 0.0) || !(v <= 1.0)) raise(errc::bad_probability, "rates must be in [0, 1]");
        }
    }
    if (spec.benign_count + spec.malware_count == 0) {
        raise(errc::empty_matrix, "synth spec generates no rows");
    }

    std::vector<AppSample> samples;
    samples.reserve(spec.benign_count + spec.malware_count);
    // One substream per class keeps each class's stream independent of the
    // other's row count.
    auto benign_rng = substream(seed, "synth/benign");
    auto malware_rng = substream(seed, "synth/malware");
    char id[32];
    for (std::size_t i = 0; i < spec.benign_count; ++i) {
        AppSample s;
        std::snprintf(id, sizeof id, "benign%06zu", i);
        s.app_id = id;
        s.label = Label::Benign;
        s.bits.resize(p);
        for (std::size_t c = 0; c < p; ++c) s.bits[c] = draw_bernoulli(benign_rng, spec.p_benign[c]) ? 1 : 0;
        samples.push_back(std::move(s));
    }
    for (std::size_t i = 0; i < spec.malware_count; ++i) {
        AppSample s;
        std::snprintf(id, sizeof id, "malware%06zu", i);
        s.app_id = id;
        s.label = Label::Malware;
        if (!spec.families.empty()) s.family = spec.families[i % spec.families.size()];
        s.bits.resize(p);
        for (std::size_t c = 0; c < p; ++c) s.bits[c] = draw_bernoulli(malware_rng, spec.p_malware[c]) ? 1 : 0;
        samples.push_back(std::move(s));
    }
    return build_matrix(spec.feature_names, std::move(samples));
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    for (const char c : line) {
        if (c == ',') {
            out.push_back(cell);
            cell.clear();
        } else {
            cell.push_back(c);
        }
    }
    out.push_back(cell);
    return out;
}

}  // namespace

FeatureMatrix read_matrix_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) raise(errc::schema_error, "csv is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto header = split_csv_line(line);
    if (header.size() < 3 || header.front() != "app_id" || header.back() != "label" ||
        header[header.size() - 2] != "family") {
        raise(errc::schema_error, "header must be app_id,<features...>,family,label");
    }
    std::vector<std::string> feature_names(header.begin() + 1, header.end() - 2);

    std::vector<AppSample> samples;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto cells = split_csv_line(line);
        if (cells.size() != header.size()) {
            raise(errc::schema_error, "line " + std::to_string(lineno) + " has " +
                                          std::to_string(cells.size()) + " cells, expected " +
                                          std::to_string(header.size()));
        }
        AppSample s;
        s.app_id = cells.front();
        s.bits.reserve(feature_names.size());
        for (std::size_t c = 1; c + 2 < cells.size(); ++c) {
            if (cells[c] == "0") s.bits.push_back(0);
            else if (cells[c] == "1") s.bits.push_back(1);
            else raise(errc::schema_error, "line " + std::to_string(lineno) + ": cell must be 0 or 1");
        }
        s.family = cells[cells.size() - 2];
        const std::string& label = cells.back();
        if (label == "benign") s.label = Label::Benign;
        else if (label == "malware") s.label = Label::Malware;
        else raise(errc::schema_error, "line " + std::to_string(lineno) + ": label must be benign or malware");
        samples.push_back(std::move(s));
    }
    return build_matrix(std::move(feature_names), std::move(samples));
}

FeatureMatrix read_matrix_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise(errc::io_error, "cannot open " + path.string());
    return read_matrix_csv(in);
}

void write_matrix_csv(const FeatureMatrix& m, std::ostream& out) {
    out << "app_id";
    for (const auto& name : m.feature_names()) out << ',' << name;
    out << ",family,label\n";
    for (std::size_t r = 0; r < m.row_count(); ++r) {
        out << m.app_id(r);
        const auto row = m.row(r);
        for (const auto bit : row) out << ',' << (bit ? '1' : '0');
        out << ',' << m.family(r) << ',' << to_string(m.label(r)) << '\n';
    }
    if (!out) raise(errc::io_error, "csv write failed");
}

void write_matrix_csv(const FeatureMatrix& m, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) raise(errc::io_error, "cannot open " + path.string() + " for writing");
    write_matrix_csv(m, out);
}

}  // namespace permrank
