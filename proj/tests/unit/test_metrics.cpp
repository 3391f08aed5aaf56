#include <cmath>
#include <functional>
#include <vector>

#include "doctest.h"
#include "permrank/errors.hpp"
#include "permrank/metrics.hpp"
#include "permrank/rng.hpp"

using namespace permrank;

namespace {

errc code_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an Error");
    return errc::io_error;
}

}  // namespace

TEST_CASE("confusion tallies the four cells") {
    const std::vector<Label> truth = {Label::Malware, Label::Malware, Label::Malware,
                                      Label::Benign, Label::Benign, Label::Benign};
    const std::vector<Label> predicted = {Label::Malware, Label::Malware, Label::Benign,
                                          Label::Benign, Label::Malware, Label::Benign};
    const ConfusionCounts c = confusion(predicted, truth);
    CHECK(c.tp == 2);
    CHECK(c.fn == 1);
    CHECK(c.fp == 1);
    CHECK(c.tn == 2);
    CHECK(c.total() == 6);

    const std::vector<Label> short_row = {Label::Benign};
    CHECK(code_of([&] { confusion(short_row, truth); }) == errc::width_mismatch);
    CHECK(code_of([&] { confusion({}, {}); }) == errc::empty_matrix);
}

TEST_CASE("a perfect classifier scores 100 across the board") {
    const MetricsReport r = metrics({.tp = 40, .tn = 60, .fp = 0, .fn = 0});
    CHECK(r.accuracy == doctest::Approx(100.0));
    CHECK(r.tpr == doctest::Approx(100.0));
    CHECK(r.tnr == doctest::Approx(100.0));
    CHECK(r.fpr == doctest::Approx(0.0));
    CHECK(r.fnr == doctest::Approx(0.0));
    CHECK(r.precision == doctest::Approx(100.0));
    CHECK(r.f_score == doctest::Approx(100.0));
    CHECK(!r.degenerate_precision);
}

TEST_CASE("an inverted classifier scores zero") {
    const MetricsReport r = metrics({.tp = 0, .tn = 0, .fp = 60, .fn = 40});
    CHECK(r.accuracy == doctest::Approx(0.0));
    CHECK(r.tpr == doctest::Approx(0.0));
    CHECK(r.tnr == doctest::Approx(0.0));
    CHECK(r.fpr == doctest::Approx(100.0));
    CHECK(r.fnr == doctest::Approx(100.0));
    CHECK(r.precision == doctest::Approx(0.0));
    CHECK(r.f_score == doctest::Approx(0.0));
    CHECK(!r.degenerate_precision);  // positives were predicted, just wrongly
}

TEST_CASE("a hand-tallied table reproduces every rate") {
    const MetricsReport r = metrics({.tp = 30, .tn = 50, .fp = 10, .fn = 10});
    CHECK(r.tpr == doctest::Approx(75.0).epsilon(1e-12));
    CHECK(r.fnr == doctest::Approx(25.0).epsilon(1e-12));
    CHECK(r.tnr == doctest::Approx(250.0 / 3.0).epsilon(1e-12));
    CHECK(r.fpr == doctest::Approx(50.0 / 3.0).epsilon(1e-12));
    CHECK(r.accuracy == doctest::Approx(80.0).epsilon(1e-12));
    CHECK(r.precision == doctest::Approx(75.0).epsilon(1e-12));
    CHECK(r.f_score == doctest::Approx(75.0).epsilon(1e-12));
}

TEST_CASE("rates pair up and the harmonic identity holds on random tables") {
    auto rng = substream(404, "metrics_property");
    for (int i = 0; i < 200; ++i) {
        ConfusionCounts c;
        c.tp = draw_below(rng, 200);
        c.fn = draw_below(rng, 200);
        c.fp = draw_below(rng, 200);
        c.tn = draw_below(rng, 200);
        if (c.tp + c.fn == 0) c.tp = 1;
        if (c.tn + c.fp == 0) c.tn = 1;
        const MetricsReport r = metrics(c);
        CHECK(std::fabs(r.tpr + r.fnr - 100.0) <= 1e-9);
        CHECK(std::fabs(r.tnr + r.fpr - 100.0) <= 1e-9);
        const double acc = 100.0 * static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
        CHECK(std::fabs(r.accuracy - acc) <= 1e-12);
        if (r.precision + r.tpr > 0.0) {
            const double harmonic = 2.0 * r.precision * r.tpr / (r.precision + r.tpr);
            CHECK(std::fabs(r.f_score - harmonic) <= 1e-12 * std::max(1.0, harmonic));
        } else {
            CHECK(r.f_score == 0.0);
        }
    }
}

TEST_CASE("published precision and recall pairs reproduce their F score") {
    // Counts chosen so precision and recall come out at the quoted values.
    const MetricsReport a = metrics({.tp = 21287853, .tn = 1, .fp = 2922147, .fn = 694647});
    CHECK(a.precision == doctest::Approx(87.93).epsilon(1e-9));
    CHECK(a.tpr == doctest::Approx(96.84).epsilon(1e-9));
    CHECK(std::fabs(a.f_score - 92.17) <= 0.02);

    const MetricsReport b = metrics({.tp = 9046205, .tn = 1, .fp = 123795, .fn = 818795});
    CHECK(b.precision == doctest::Approx(98.65).epsilon(1e-9));
    CHECK(b.tpr == doctest::Approx(91.70).epsilon(1e-9));
    CHECK(std::fabs(b.f_score - 95.05) <= 0.02);
}

TEST_CASE("a truth set with one class is rejected") {
    CHECK(code_of([] { metrics({.tp = 5, .tn = 0, .fp = 0, .fn = 3}); }) == errc::missing_class);
    CHECK(code_of([] { metrics({.tp = 0, .tn = 5, .fp = 3, .fn = 0}); }) == errc::missing_class);
    CHECK(code_of([] { metrics(ConfusionCounts{}); }) == errc::empty_matrix);
}

TEST_CASE("predicting nothing positive is flagged, not an error") {
    const MetricsReport r = metrics({.tp = 0, .tn = 5, .fp = 0, .fn = 5});
    CHECK(r.degenerate_precision);
    CHECK(r.precision == doctest::Approx(0.0));
    CHECK(r.f_score == doctest::Approx(0.0));
    CHECK(r.accuracy == doctest::Approx(50.0));
}

TEST_CASE("the F weight is validated and applied") {
    const ConfusionCounts c{.tp = 30, .tn = 50, .fp = 10, .fn = 10};
    CHECK(code_of([&] { metrics(c, 0.0); }) == errc::bad_parameter);
    CHECK(code_of([&] { metrics(c, -1.0); }) == errc::bad_parameter);

    const MetricsReport r = metrics(c, 2.0);
    CHECK(r.alpha == doctest::Approx(2.0));
    const double expected = 5.0 * r.precision * r.tpr / (4.0 * r.precision + r.tpr);
    CHECK(r.f_score == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("timed reports non-negative durations and passes results through") {
    const auto [value, record] = timed([] {
        double s = 0.0;
        for (int i = 1; i <= 200000; ++i) s += 1.0 / static_cast<double>(i);
        return s;
    });
    CHECK(value > 12.0);
    CHECK(record.elapsed_s >= 0.0);
    CHECK(record.user_s >= 0.0);
    CHECK(record.system_s >= 0.0);

    const TimingRecord void_record = timed([] {});
    CHECK(void_record.elapsed_s >= 0.0);
}
