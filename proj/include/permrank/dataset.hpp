#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "permrank/catalog.hpp"

namespace permrank {

enum class Label : std::uint8_t { Benign = 0, Malware = 1 };

inline const char* to_string(Label label) noexcept {
    return label == Label::Malware ? "malware" : "benign";
}

struct AppSample {
    std::string app_id;
    std::vector<std::uint8_t> bits;  // one per feature, 0/1
    Label label = Label::Benign;
    std::string family;  // empty for benign rows
};

// Row-major binary feature matrix with labels and family tags. Cell values
// are always 0 or 1; construction enforces it.
class FeatureMatrix {
public:
    FeatureMatrix() = default;
    FeatureMatrix(std::vector<std::string> feature_names, std::vector<AppSample> samples);

    std::size_t row_count() const noexcept { return labels_.size(); }
    std::size_t feature_count() const noexcept { return feature_names_.size(); }

    const std::vector<std::string>& feature_names() const noexcept { return feature_names_; }
    std::span<const std::uint8_t> row(std::size_t r) const {
        return std::span<const std::uint8_t>(cells_).subspan(r * feature_count(), feature_count());
    }
    std::uint8_t at(std::size_t r, std::size_t c) const { return cells_[r * feature_count() + c]; }
    Label label(std::size_t r) const { return labels_[r]; }
    const std::string& family(std::size_t r) const { return families_[r]; }
    const std::string& app_id(std::size_t r) const { return app_ids_[r]; }

    std::size_t count(Label label) const noexcept;
    std::size_t column_sum(std::size_t c) const;

    FeatureMatrix take_rows(std::span<const std::size_t> rows) const;
    FeatureMatrix take_columns(std::span<const std::size_t> columns) const;

private:
    std::vector<std::string> feature_names_;
    std::vector<std::uint8_t> cells_;
    std::vector<Label> labels_;
    std::vector<std::string> families_;
    std::vector<std::string> app_ids_;
};

FeatureMatrix build_matrix(std::vector<std::string> feature_names, std::vector<AppSample> samples);

// Column names and order come from the catalog.
FeatureMatrix build_matrix(std::vector<AppSample> samples, const PermissionCatalog& catalog);

struct ZeroImpactResult {
    FeatureMatrix matrix;
    std::vector<std::string> removed;  // all-zero columns, original order
};

// Drops features no row declares. Keeps all-ones columns: they carry no
// chi-square signal but they are not "never used".
ZeroImpactResult remove_zero_impact(const FeatureMatrix& m);

// Keeps benign rows plus malware rows whose family is in `keep`.
FeatureMatrix filter_families(const FeatureMatrix& m, const std::set<std::string>& keep);

// Malware family names sorted by descending row count, ties alphabetical.
std::vector<std::pair<std::string, std::size_t>> family_counts(const FeatureMatrix& m);

struct SplitIndices {
    std::vector<std::size_t> train;  // ascending
    std::vector<std::size_t> test;   // ascending
    std::uint64_t seed = 0;
};

// Per-class shuffle, then round(train_fraction * class_size) rows to train.
// Both classes must have at least 2 rows so neither side can lose a class.
SplitIndices stratified_split(const FeatureMatrix& m, double train_fraction, std::uint64_t seed);

struct SynthSpec {
    std::vector<std::string> feature_names;
    std::vector<double> p_benign;       // per-feature Bernoulli rates
    std::vector<double> p_malware;
    std::size_t benign_count = 0;
    std::size_t malware_count = 0;
    std::vector<std::string> families;  // cycled over malware rows; may be empty
};

FeatureMatrix synth_generate(const SynthSpec& spec, std::uint64_t seed);

// CSV schema: header app_id,<feature...>,family,label; cells are 0/1,
// label is benign/malware, LF line endings.
FeatureMatrix read_matrix_csv(std::istream& in);
FeatureMatrix read_matrix_csv(const std::filesystem::path& path);
void write_matrix_csv(const FeatureMatrix& m, std::ostream& out);
void write_matrix_csv(const FeatureMatrix& m, const std::filesystem::path& path);

}  // namespace permrank
