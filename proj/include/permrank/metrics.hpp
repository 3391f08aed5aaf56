#pragma once

#include <cstdint>
#include <span>
#include <type_traits>
#include <utility>

#include "permrank/dataset.hpp"

namespace permrank {

// Malware is the positive class throughout.
struct ConfusionCounts {
    std::uint64_t tp = 0;  // malware predicted malware
    std::uint64_t tn = 0;  // benign predicted benign
    std::uint64_t fp = 0;  // benign predicted malware
    std::uint64_t fn = 0;  // malware predicted benign

    std::uint64_t total() const noexcept { return tp + tn + fp + fn; }
};

ConfusionCounts confusion(std::span<const Label> predicted, std::span<const Label> truth);

struct MetricsReport {
    // All values are percentages in [0, 100].
    double tpr = 0.0;        // recall on malware
    double tnr = 0.0;
    double fpr = 0.0;
    double fnr = 0.0;
    double accuracy = 0.0;
    double precision = 0.0;
    double f_score = 0.0;
    double alpha = 1.0;      // F-measure weight
    bool degenerate_precision = false;  // nothing was predicted positive
};

// alpha weighs precision against recall in F; alpha = 1 is the harmonic
// mean. The truth set must contain both classes.
MetricsReport metrics(const ConfusionCounts& c, double alpha = 1.0);

struct TimingRecord {
    double user_s = 0.0;
    double system_s = 0.0;
    double elapsed_s = 0.0;
    // Set where the platform offers no CPU accounting and user/system had
    // to be copied from the wall clock.
    bool cpu_times_are_elapsed = false;
};

namespace detail {
struct TimingSample {
    double user_s;
    double system_s;
    double elapsed_s;
};
TimingSample timing_now();
TimingRecord timing_delta(const TimingSample& start);
}  // namespace detail

// Runs fn and reports process CPU (user/system) plus wall time spent in it.
template <typename Fn>
auto timed(Fn&& fn) {
    const auto start = detail::timing_now();
    if constexpr (std::is_void_v<std::invoke_result_t<Fn&>>) {
        fn();
        return detail::timing_delta(start);
    } else {
        auto result = fn();
        return std::pair{std::move(result), detail::timing_delta(start)};
    }
}

}  // namespace permrank
