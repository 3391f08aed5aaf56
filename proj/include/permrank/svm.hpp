#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "permrank/dataset.hpp"

namespace permrank {

enum class KernelKind { Linear, Rbf };

const char* to_string(KernelKind kind) noexcept;

struct SvmParams {
    KernelKind kernel = KernelKind::Rbf;
    double gamma = 0.0;          // 0 = 1 / feature_count
    double cost = 1.0;           // box constraint C
    double tolerance = 1e-3;     // KKT violation tolerance
    std::size_t max_passes = 1000;
    bool track_objective = false;
};

// Soft-margin SVM trained by sequential minimal optimization. Malware is the
// +1 class, benign is -1.
class SvmModel {
public:
    static SvmModel train(const FeatureMatrix& m, const SvmParams& params);

    double decision(std::span<const std::uint8_t> row) const;
    Label predict(std::span<const std::uint8_t> row) const;  // decision > 0 is malware
    std::vector<Label> predict(const FeatureMatrix& m, unsigned threads = 0) const;

    std::size_t support_vector_count() const noexcept { return support_vectors_.size(); }
    const std::vector<std::vector<std::uint8_t>>& support_vectors() const noexcept {
        return support_vectors_;
    }
    const std::vector<std::int8_t>& sv_labels() const noexcept { return sv_labels_; }
    const std::vector<double>& alphas() const noexcept { return alphas_; }
    double bias() const noexcept { return bias_; }
    bool converged() const noexcept { return converged_; }
    std::size_t passes() const noexcept { return passes_; }
    const SvmParams& params() const noexcept { return params_; }
    const std::vector<std::string>& feature_names() const noexcept { return feature_names_; }
    // Dual objective after each optimization pass; filled when
    // params.track_objective is set.
    const std::vector<double>& objective_trace() const noexcept { return objective_trace_; }

    void save(std::ostream& out) const;
    static SvmModel load(std::istream& in);

private:
    std::vector<std::string> feature_names_;
    std::vector<std::vector<std::uint8_t>> support_vectors_;
    std::vector<double> alphas_;       // same order as support_vectors_
    std::vector<std::int8_t> sv_labels_;  // +1 malware, -1 benign
    double bias_ = 0.0;
    SvmParams params_;
    bool converged_ = true;
    std::size_t passes_ = 0;
    std::vector<double> objective_trace_;
};

struct TuneGrid {
    std::vector<double> costs = {0.1, 1.0, 10.0, 100.0};
    // Multipliers of the default gamma, i.e. value / feature_count.
    std::vector<double> gamma_factors = {0.5, 1.0, 2.0};
};

struct TunePoint {
    double cost = 0.0;
    double gamma = 0.0;
    double cv_accuracy = 0.0;
};

struct TuneResult {
    double cost = 0.0;
    double gamma = 0.0;
    double cv_accuracy = 0.0;
    std::vector<TunePoint> grid;  // every evaluated point, grid order
};

// Stratified k-fold cross validation over the grid; the winner maximizes
// mean accuracy, ties broken toward smaller cost then smaller gamma.
TuneResult svm_tune(const FeatureMatrix& m, const TuneGrid& grid, std::size_t folds,
                    std::uint64_t seed, const SvmParams& base, unsigned threads = 0);

}  // namespace permrank
