#include "permrank/svm.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>

#include "json.hpp"
#include "permrank/errors.hpp"
#include "permrank/parallel.hpp"
#include "permrank/rng.hpp"

namespace permrank {
namespace {

constexpr int kSvmFormatVersion = 1;
constexpr double kAlphaFloor = 1e-12;   // below this an alpha is zero
constexpr double kStepEps = 1e-8;       // minimum useful alpha progress
// Full kernel matrix is cached up to this many rows (about 50 MB of doubles).
constexpr std::size_t kKernelCacheLimit = 2500;

double dot(std::span<const std::uint8_t> x, std::span<const std::uint8_t> z) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += static_cast<double>(x[i] & z[i]);
    return s;
}

double hamming(std::span<const std::uint8_t> x, std::span<const std::uint8_t> z) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += static_cast<double>(x[i] ^ z[i]);
    return s;
}

double kernel_of(KernelKind kind, double gamma, std::span<const std::uint8_t> x,
                 std::span<const std::uint8_t> z) {
    if (kind == KernelKind::Linear) return dot(x, z);
    // For 0/1 vectors the squared distance is the hamming distance.
    return std::exp(-gamma * hamming(x, z));
}

// Platt's sequential minimal optimization, stripped of every random choice:
// scan starts are fixed and ties pick the lowest index, so a given matrix
// always trains to the same model.
class Smo {
public:
    Smo(const FeatureMatrix& m, const SvmParams& params)
        : m_(m), params_(params), n_(m.row_count()) {
        y_.resize(n_);
        for (std::size_t i = 0; i < n_; ++i) y_[i] = m.label(i) == Label::Malware ? 1.0 : -1.0;
        alpha_.assign(n_, 0.0);
        error_.resize(n_);
        for (std::size_t i = 0; i < n_; ++i) error_[i] = -y_[i];  // f == 0 initially
        if (n_ <= kKernelCacheLimit) {
            cache_.resize(n_ * n_);
            for (std::size_t i = 0; i < n_; ++i) {
                for (std::size_t j = 0; j <= i; ++j) {
                    const double k = kernel_of(params_.kernel, params_.gamma, m_.row(i), m_.row(j));
                    cache_[i * n_ + j] = k;
                    cache_[j * n_ + i] = k;
                }
            }
        }
    }

    void run(std::size_t max_passes, bool track_objective, std::vector<double>& trace, bool& converged,
             std::size_t& passes) {
        std::size_t num_changed = 0;
        bool examine_all = true;
        passes = 0;
        converged = false;
        while (num_changed > 0 || examine_all) {
            if (passes >= max_passes) {
                refit_bias();
                return;  // converged stays false
            }
            ++passes;
            num_changed = 0;
            for (std::size_t i = 0; i < n_; ++i) {
                if (examine_all || is_free(i)) num_changed += examine(i) ? 1 : 0;
            }
            if (track_objective) trace.push_back(objective());
            if (examine_all) {
                examine_all = false;
            } else if (num_changed == 0) {
                examine_all = true;
            }
        }
        refit_bias();
        converged = true;
    }

    const std::vector<double>& alpha() const noexcept { return alpha_; }
    double bias() const noexcept { return b_; }

    double objective() const {
        double lin = 0.0, quad = 0.0;
        for (std::size_t i = 0; i < n_; ++i) {
            if (alpha_[i] == 0.0) continue;
            lin += alpha_[i];
            for (std::size_t j = 0; j < n_; ++j) {
                if (alpha_[j] == 0.0) continue;
                quad += alpha_[i] * alpha_[j] * y_[i] * y_[j] * k(i, j);
            }
        }
        return lin - 0.5 * quad;
    }

private:
    double k(std::size_t i, std::size_t j) const {
        if (!cache_.empty()) return cache_[i * n_ + j];
        return kernel_of(params_.kernel, params_.gamma, m_.row(i), m_.row(j));
    }

    bool is_free(std::size_t i) const {
        return alpha_[i] > kAlphaFloor && alpha_[i] < params_.cost - kAlphaFloor;
    }

    // The threshold carried out of the last step is only one admissible
    // choice; when every alpha sits on a bound it can even fall outside the
    // interval the optimality conditions allow. Recenter it on the value
    // minimizing the worst margin residual: a free alpha wants its margin
    // exactly 1 (so it bounds b from both sides), a bound alpha demands one
    // side only. The midpoint of the two binding demands is minimax-optimal
    // and keeps every residual within the training tolerance.
    void refit_bias() {
        double lo = -std::numeric_limits<double>::infinity();
        double hi = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < n_; ++i) {
            const double g = b_ - error_[i];  // the b putting row i on its margin
            if (is_free(i)) {
                lo = std::max(lo, g);
                hi = std::min(hi, g);
                continue;
            }
            const bool upper = alpha_[i] >= params_.cost - kAlphaFloor;
            if ((y_[i] > 0.0) != upper) lo = std::max(lo, g);
            else hi = std::min(hi, g);
        }
        double b_new;
        if (std::isinf(lo) && std::isinf(hi)) b_new = b_;
        else if (std::isinf(lo)) b_new = hi;
        else if (std::isinf(hi)) b_new = lo;
        else b_new = 0.5 * (lo + hi);
        const double db = b_new - b_;
        b_ = b_new;
        for (std::size_t i = 0; i < n_; ++i) error_[i] += db;
    }

    bool examine(std::size_t i2) {
        const double y2 = y_[i2];
        const double a2 = alpha_[i2];
        const double e2 = error_[i2];
        const double r2 = e2 * y2;
        const bool violates = (r2 < -params_.tolerance && a2 < params_.cost - kAlphaFloor) ||
                              (r2 > params_.tolerance && a2 > kAlphaFloor);
        if (!violates) return false;

        // Best second choice: the free point with the largest |e1 - e2|;
        // the first such index wins ties.
        std::size_t best = n_;
        double best_gap = -1.0;
        for (std::size_t i = 0; i < n_; ++i) {
            if (!is_free(i)) continue;
            const double gap = std::fabs(error_[i] - e2);
            if (gap > best_gap) {
                best_gap = gap;
                best = i;
            }
        }
        if (best < n_ && step(best, i2)) return true;

        for (std::size_t i = 0; i < n_; ++i) {
            if (is_free(i) && step(i, i2)) return true;
        }
        for (std::size_t i = 0; i < n_; ++i) {
            if (step(i, i2)) return true;
        }
        return false;
    }

    bool step(std::size_t i1, std::size_t i2) {
        if (i1 == i2) return false;
        const double y1 = y_[i1], y2 = y_[i2];
        const double a1_old = alpha_[i1], a2_old = alpha_[i2];
        const double e1 = error_[i1], e2 = error_[i2];
        const double s = y1 * y2;
        const double c = params_.cost;

        double lo, hi;
        if (y1 != y2) {
            lo = std::max(0.0, a2_old - a1_old);
            hi = std::min(c, c + a2_old - a1_old);
        } else {
            lo = std::max(0.0, a1_old + a2_old - c);
            hi = std::min(c, a1_old + a2_old);
        }
        if (lo >= hi) return false;

        const double k11 = k(i1, i1), k12 = k(i1, i2), k22 = k(i2, i2);
        const double eta = k11 + k22 - 2.0 * k12;
        double a2;
        if (eta > 0.0) {
            a2 = a2_old + y2 * (e1 - e2) / eta;
            a2 = std::clamp(a2, lo, hi);
        } else {
            // Objective is flat or concave along the pair direction; compare
            // the interval ends and move to the better one.
            const double f1 = y1 * e1 - a1_old * k11 - s * a2_old * k12;
            const double f2 = y2 * e2 - s * a1_old * k12 - a2_old * k22;
            const double l1 = a1_old + s * (a2_old - lo);
            const double h1 = a1_old + s * (a2_old - hi);
            const double obj_lo = l1 * f1 + lo * f2 + 0.5 * l1 * l1 * k11 + 0.5 * lo * lo * k22 +
                                  s * lo * l1 * k12;
            const double obj_hi = h1 * f1 + hi * f2 + 0.5 * h1 * h1 * k11 + 0.5 * hi * hi * k22 +
                                  s * hi * h1 * k12;
            if (obj_lo < obj_hi - kStepEps) a2 = lo;
            else if (obj_lo > obj_hi + kStepEps) a2 = hi;
            else return false;
        }
        if (std::fabs(a2 - a2_old) < kStepEps * (a2 + a2_old + kStepEps)) return false;
        const double a1 = a1_old + s * (a2_old - a2);

        // New threshold keeps the updated free point exactly on its margin.
        const double d1 = y1 * (a1 - a1_old);
        const double d2 = y2 * (a2 - a2_old);
        const double b1 = b_ - e1 - d1 * k11 - d2 * k12;
        const double b2 = b_ - e2 - d1 * k12 - d2 * k22;
        double b_new;
        if (a1 > kAlphaFloor && a1 < c - kAlphaFloor) b_new = b1;
        else if (a2 > kAlphaFloor && a2 < c - kAlphaFloor) b_new = b2;
        else b_new = 0.5 * (b1 + b2);

        const double db = b_new - b_;
        alpha_[i1] = a1;
        alpha_[i2] = a2;
        b_ = b_new;
        for (std::size_t i = 0; i < n_; ++i) {
            error_[i] += d1 * k(i1, i) + d2 * k(i2, i) + db;
        }
        return true;
    }

    const FeatureMatrix& m_;
    const SvmParams& params_;
    std::size_t n_;
    std::vector<double> y_;
    std::vector<double> alpha_;
    std::vector<double> error_;  // f(x_i) - y_i for every row
    std::vector<double> cache_;
    double b_ = 0.0;
};

}  // namespace

const char* to_string(KernelKind kind) noexcept {
    return kind == KernelKind::Linear ? "linear" : "rbf";
}

SvmModel SvmModel::train(const FeatureMatrix& m, const SvmParams& params) {
    if (m.row_count() == 0 || m.feature_count() == 0) raise(errc::empty_matrix, "nothing to train on");
    if (m.count(Label::Benign) == 0 || m.count(Label::Malware) == 0) {
        raise(errc::single_class, "training needs both classes");
    }
    if (!(params.cost > 0.0)) raise(errc::bad_parameter, "cost must be > 0");
    if (params.gamma < 0.0) raise(errc::bad_parameter, "gamma must be >= 0");
    if (!(params.tolerance > 0.0)) raise(errc::bad_parameter, "tolerance must be > 0");
    if (params.max_passes == 0) raise(errc::bad_parameter, "max_passes must be >= 1");

    SvmParams resolved = params;
    if (resolved.gamma == 0.0) resolved.gamma = 1.0 / static_cast<double>(m.feature_count());

    Smo smo(m, resolved);
    SvmModel model;
    smo.run(resolved.max_passes, resolved.track_objective, model.objective_trace_, model.converged_,
            model.passes_);

    model.feature_names_ = m.feature_names();
    model.params_ = resolved;
    model.bias_ = smo.bias();
    for (std::size_t i = 0; i < m.row_count(); ++i) {
        if (smo.alpha()[i] > kAlphaFloor) {
            const auto row = m.row(i);
            model.support_vectors_.emplace_back(row.begin(), row.end());
            model.alphas_.push_back(smo.alpha()[i]);
            model.sv_labels_.push_back(m.label(i) == Label::Malware ? 1 : -1);
        }
    }
    return model;
}

double SvmModel::decision(std::span<const std::uint8_t> row) const {
    if (row.size() != feature_names_.size()) raise(errc::width_mismatch, "row width differs from model");
    double f = bias_;
    for (std::size_t i = 0; i < support_vectors_.size(); ++i) {
        f += alphas_[i] * static_cast<double>(sv_labels_[i]) *
             kernel_of(params_.kernel, params_.gamma, support_vectors_[i], row);
    }
    return f;
}

Label SvmModel::predict(std::span<const std::uint8_t> row) const {
    return decision(row) > 0.0 ? Label::Malware : Label::Benign;
}

std::vector<Label> SvmModel::predict(const FeatureMatrix& m, unsigned threads) const {
    std::vector<Label> out(m.row_count());
    parallel_for(m.row_count(), threads, [&](std::size_t r) { out[r] = predict(m.row(r)); });
    return out;
}

void SvmModel::save(std::ostream& out) const {
    nlohmann::json j;
    j["format_version"] = kSvmFormatVersion;
    j["kind"] = "svm";
    j["feature_names"] = feature_names_;
    j["label_map"] = {{"malware", 1}, {"benign", -1}};
    j["params"] = {{"kernel", to_string(params_.kernel)},
                   {"gamma", params_.gamma},
                   {"cost", params_.cost},
                   {"tolerance", params_.tolerance},
                   {"max_passes", params_.max_passes}};
    j["bias"] = bias_;
    j["converged"] = converged_;
    j["alphas"] = alphas_;
    j["sv_labels"] = sv_labels_;
    nlohmann::json svs = nlohmann::json::array();
    for (const auto& sv : support_vectors_) svs.push_back(sv);
    j["support_vectors"] = std::move(svs);
    out << j.dump(2) << '\n';
    if (!out) raise(errc::io_error, "svm write failed");
}

SvmModel SvmModel::load(std::istream& in) {
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        raise(errc::schema_error, std::string("svm json: ") + e.what());
    }
    try {
        if (j.at("format_version").get<int>() != kSvmFormatVersion) {
            raise(errc::schema_error, "unsupported svm format version");
        }
        if (j.at("kind").get<std::string>() != "svm") raise(errc::schema_error, "model kind is not svm");
        SvmModel model;
        model.feature_names_ = j.at("feature_names").get<std::vector<std::string>>();
        const auto& p = j.at("params");
        model.params_.kernel =
            p.at("kernel").get<std::string>() == "linear" ? KernelKind::Linear : KernelKind::Rbf;
        model.params_.gamma = p.at("gamma").get<double>();
        model.params_.cost = p.at("cost").get<double>();
        model.params_.tolerance = p.at("tolerance").get<double>();
        model.params_.max_passes = p.at("max_passes").get<std::size_t>();
        model.bias_ = j.at("bias").get<double>();
        model.converged_ = j.at("converged").get<bool>();
        model.alphas_ = j.at("alphas").get<std::vector<double>>();
        model.sv_labels_ = j.at("sv_labels").get<std::vector<std::int8_t>>();
        for (const auto& svj : j.at("support_vectors")) {
            model.support_vectors_.push_back(svj.get<std::vector<std::uint8_t>>());
        }
        if (model.alphas_.size() != model.support_vectors_.size() ||
            model.alphas_.size() != model.sv_labels_.size()) {
            raise(errc::schema_error, "support vector arrays disagree in length");
        }
        for (const auto& sv : model.support_vectors_) {
            if (sv.size() != model.feature_names_.size()) {
                raise(errc::schema_error, "support vector width differs from feature list");
            }
        }
        return model;
    } catch (const nlohmann::json::exception& e) {
        raise(errc::schema_error, std::string("svm json: ") + e.what());
    }
}

namespace {

// Stratified fold assignment: rows of each class are shuffled, then dealt
// round-robin, so fold sizes differ by at most one per class.
std::vector<std::size_t> fold_assignment(const FeatureMatrix& m, std::size_t folds, std::uint64_t seed) {
    std::vector<std::size_t> fold_of(m.row_count(), 0);
    auto rng = substream(seed, "svm_tune/folds");
    for (const Label cls : {Label::Benign, Label::Malware}) {
        std::vector<std::size_t> rows;
        for (std::size_t r = 0; r < m.row_count(); ++r) {
            if (m.label(r) == cls) rows.push_back(r);
        }
        fisher_yates(rng, rows);
        for (std::size_t i = 0; i < rows.size(); ++i) fold_of[rows[i]] = i % folds;
    }
    return fold_of;
}

}  // namespace

TuneResult svm_tune(const FeatureMatrix& m, const TuneGrid& grid, std::size_t folds, std::uint64_t seed,
                    const SvmParams& base, unsigned threads) {
    if (folds < 2) raise(errc::bad_parameter, "tuning needs at least 2 folds");
    if (grid.costs.empty() || grid.gamma_factors.empty()) raise(errc::bad_parameter, "empty tune grid");
    const std::size_t n_benign = m.count(Label::Benign);
    const std::size_t n_malware = m.count(Label::Malware);
    if (n_benign < folds || n_malware < folds) {
        raise(errc::class_too_small, "each class needs at least `folds` rows");
    }

    const std::vector<std::size_t> fold_of = fold_assignment(m, folds, seed);
    const double default_gamma = 1.0 / static_cast<double>(m.feature_count());

    struct Cell {
        double cost;
        double gamma;
    };
    std::vector<Cell> cells;
    for (const double cost : grid.costs) {
        for (const double factor : grid.gamma_factors) {
            cells.push_back({cost, factor * default_gamma});
        }
    }

    // Folds are fixed up front, so every grid cell sees the same partition
    // and cells can run in parallel without touching each other.
    std::vector<double> accuracy(cells.size(), 0.0);
    parallel_for(cells.size(), threads, [&](std::size_t ci) {
        SvmParams params = base;
        params.cost = cells[ci].cost;
        params.gamma = cells[ci].gamma;
        params.track_objective = false;
        std::uint64_t correct = 0, total = 0;
        for (std::size_t f = 0; f < folds; ++f) {
            std::vector<std::size_t> train_rows, test_rows;
            for (std::size_t r = 0; r < m.row_count(); ++r) {
                (fold_of[r] == f ? test_rows : train_rows).push_back(r);
            }
            const FeatureMatrix train = m.take_rows(train_rows);
            const FeatureMatrix test = m.take_rows(test_rows);
            const SvmModel model = SvmModel::train(train, params);
            for (std::size_t r = 0; r < test.row_count(); ++r) {
                if (model.predict(test.row(r)) == test.label(r)) ++correct;
                ++total;
            }
        }
        accuracy[ci] = static_cast<double>(correct) / static_cast<double>(total);
    });

    TuneResult out;
    out.grid.reserve(cells.size());
    for (std::size_t ci = 0; ci < cells.size(); ++ci) {
        out.grid.push_back({cells[ci].cost, cells[ci].gamma, accuracy[ci]});
    }
    std::size_t best = 0;
    for (std::size_t ci = 1; ci < cells.size(); ++ci) {
        const auto& cand = out.grid[ci];
        const auto& cur = out.grid[best];
        const bool better = cand.cv_accuracy > cur.cv_accuracy ||
                            (cand.cv_accuracy == cur.cv_accuracy &&
                             (cand.cost < cur.cost ||
                              (cand.cost == cur.cost && cand.gamma < cur.gamma)));
        if (better) best = ci;
    }
    out.cost = out.grid[best].cost;
    out.gamma = out.grid[best].gamma;
    out.cv_accuracy = out.grid[best].cv_accuracy;
    return out;
}

}  // namespace permrank
