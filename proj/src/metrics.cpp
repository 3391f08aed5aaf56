#include "permrank/metrics.hpp"

#include <chrono>

#include <sys/resource.h>

#include "permrank/errors.hpp"

namespace permrank {

ConfusionCounts confusion(std::span<const Label> predicted, std::span<const Label> truth) {
    if (predicted.size() != truth.size()) {
        raise(errc::width_mismatch, "prediction and truth lengths differ");
    }
    if (predicted.empty()) raise(errc::empty_matrix, "no predictions to score");
    ConfusionCounts c;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        const bool pred_malware = predicted[i] == Label::Malware;
        if (truth[i] == Label::Malware) {
            (pred_malware ? c.tp : c.fn) += 1;
        } else {
            (pred_malware ? c.fp : c.tn) += 1;
        }
    }
    return c;
}

MetricsReport metrics(const ConfusionCounts& c, double alpha) {
    if (c.total() == 0) raise(errc::empty_matrix, "empty confusion counts");
    if (!(alpha > 0.0)) raise(errc::bad_parameter, "alpha must be > 0");
    if (c.tp + c.fn == 0 || c.tn + c.fp == 0) {
        raise(errc::missing_class, "truth set must contain both classes");
    }

    const double tp = static_cast<double>(c.tp), tn = static_cast<double>(c.tn);
    const double fp = static_cast<double>(c.fp), fn = static_cast<double>(c.fn);

    MetricsReport r;
    r.alpha = alpha;
    r.tpr = 100.0 * tp / (tp + fn);
    r.fnr = 100.0 * fn / (tp + fn);
    r.tnr = 100.0 * tn / (tn + fp);
    r.fpr = 100.0 * fp / (tn + fp);
    r.accuracy = 100.0 * (tp + tn) / static_cast<double>(c.total());
    if (tp + fp > 0.0) {
        r.precision = 100.0 * tp / (tp + fp);
    } else {
        // Nothing predicted positive: precision is declared 0 so degenerate
        // classifiers still produce a row.
        r.precision = 0.0;
        r.degenerate_precision = true;
    }
    const double a2 = alpha * alpha;
    const double denom = a2 * r.precision + r.tpr;
    r.f_score = denom > 0.0 ? (1.0 + a2) * r.precision * r.tpr / denom : 0.0;
    return r;
}

namespace detail {

TimingSample timing_now() {
    rusage usage{};
    getrusage(RUSAGE_SELF, &usage);
    const auto to_seconds = [](const timeval& tv) {
        return static_cast<double>(tv.tv_sec) + static_cast<double>(tv.tv_usec) * 1e-6;
    };
    const auto wall = std::chrono::steady_clock::now().time_since_epoch();
    return {to_seconds(usage.ru_utime), to_seconds(usage.ru_stime),
            std::chrono::duration<double>(wall).count()};
}

TimingRecord timing_delta(const TimingSample& start) {
    const TimingSample now = timing_now();
    return {now.user_s - start.user_s, now.system_s - start.system_s, now.elapsed_s - start.elapsed_s};
}

}  // namespace detail
}  // namespace permrank
