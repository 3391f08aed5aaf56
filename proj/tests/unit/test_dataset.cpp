#include <cmath>
#include <functional>
#include <set>
#include <sstream>

#include "doctest.h"
#include "permrank/dataset.hpp"
#include "permrank/errors.hpp"

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

AppSample sample(std::string id, std::vector<std::uint8_t> bits, Label label, std::string family = "") {
    AppSample s;
    s.app_id = std::move(id);
    s.bits = std::move(bits);
    s.label = label;
    s.family = std::move(family);
    return s;
}

// Two features; a separates the classes, b is constant zero.
FeatureMatrix tiny() {
    return build_matrix({"a", "b"}, {sample("m0", {1, 0}, Label::Malware, "famX"),
                                     sample("m1", {1, 0}, Label::Malware, "famY"),
                                     sample("b0", {0, 0}, Label::Benign),
                                     sample("b1", {0, 0}, Label::Benign)});
}

}  // namespace

TEST_CASE("build_matrix basic shape and accessors") {
    const auto m = tiny();
    CHECK(m.row_count() == 4);
    CHECK(m.feature_count() == 2);
    CHECK(m.at(0, 0) == 1);
    CHECK(m.at(0, 1) == 0);
    CHECK(m.label(0) == Label::Malware);
    CHECK(m.label(2) == Label::Benign);
    CHECK(m.family(0) == "famX");
    CHECK(m.family(2) == "");
    CHECK(m.app_id(3) == "b1");
    CHECK(m.count(Label::Malware) == 2);
    CHECK(m.count(Label::Benign) == 2);
    CHECK(m.column_sum(0) == 2);
    CHECK(m.column_sum(1) == 0);
}

TEST_CASE("build_matrix validation") {
    CHECK(code_of([] {
        build_matrix({"a"}, {sample("x", {1, 0}, Label::Benign)});
    }) == errc::width_mismatch);
    CHECK(code_of([] {
        build_matrix({"a"}, {sample("x", {2}, Label::Benign)});
    }) == errc::schema_error);
    CHECK(code_of([] {
        build_matrix({"a", "a"}, {sample("x", {1, 1}, Label::Benign)});
    }) == errc::schema_error);
}

TEST_CASE("benign rows never carry a family") {
    const auto m = build_matrix({"a"}, {sample("b", {1}, Label::Benign, "sneaky")});
    CHECK(m.family(0) == "");
}

TEST_CASE("take_rows and take_columns slice consistently") {
    const auto m = tiny();
    const std::size_t rows[] = {0, 3};
    const auto sliced = m.take_rows(rows);
    CHECK(sliced.row_count() == 2);
    CHECK(sliced.app_id(0) == "m0");
    CHECK(sliced.app_id(1) == "b1");
    CHECK(sliced.at(0, 0) == 1);

    const std::size_t cols[] = {1};
    const auto narrow = m.take_columns(cols);
    CHECK(narrow.feature_count() == 1);
    CHECK(narrow.feature_names()[0] == "b");
    CHECK(narrow.row_count() == 4);
}

TEST_CASE("remove_zero_impact drops all-zero columns only") {
    const auto m = build_matrix({"used", "zero", "full"},
                                {sample("m", {1, 0, 1}, Label::Malware, "f"),
                                 sample("b", {0, 0, 1}, Label::Benign)});
    const auto r = remove_zero_impact(m);
    CHECK(r.matrix.feature_count() == 2);
    CHECK(r.matrix.feature_names() == std::vector<std::string>{"used", "full"});
    CHECK(r.removed == std::vector<std::string>{"zero"});

    // Idempotent: a second pass removes nothing.
    const auto again = remove_zero_impact(r.matrix);
    CHECK(again.removed.empty());
    CHECK(again.matrix.feature_count() == 2);
}

TEST_CASE("filter_families keeps benign rows and chosen families") {
    const auto m = tiny();
    const auto kept = filter_families(m, {"famX"});
    CHECK(kept.row_count() == 3);  // m0 + both benign
    CHECK(kept.feature_count() == m.feature_count());
    CHECK(kept.count(Label::Benign) == 2);
    CHECK(kept.count(Label::Malware) == 1);
    CHECK(kept.app_id(0) == "m0");

    const auto none = filter_families(m, {});
    CHECK(none.count(Label::Malware) == 0);
    CHECK(none.count(Label::Benign) == 2);
}

TEST_CASE("family_counts sorts by count then name") {
    const auto m = build_matrix({"a"}, {sample("1", {0}, Label::Malware, "beta"),
                                        sample("2", {0}, Label::Malware, "alpha"),
                                        sample("3", {0}, Label::Malware, "beta"),
                                        sample("4", {0}, Label::Malware, "gamma"),
                                        sample("5", {0}, Label::Malware, "alpha"),
                                        sample("6", {0}, Label::Benign)});
    const auto counts = family_counts(m);
    REQUIRE(counts.size() == 3);
    CHECK(counts[0] == std::pair<std::string, std::size_t>{"alpha", 2});
    CHECK(counts[1] == std::pair<std::string, std::size_t>{"beta", 2});
    CHECK(counts[2] == std::pair<std::string, std::size_t>{"gamma", 1});
}

TEST_CASE("stratified_split respects per-class proportions") {
    std::vector<AppSample> rows;
    for (int i = 0; i < 100; ++i) rows.push_back(sample("b" + std::to_string(i), {0}, Label::Benign));
    for (int i = 0; i < 10; ++i) {
        rows.push_back(sample("m" + std::to_string(i), {1}, Label::Malware, "f"));
    }
    const auto m = build_matrix({"a"}, std::move(rows));
    const auto split = stratified_split(m, 0.7, 11);

    CHECK(split.seed == 11);
    CHECK(split.train.size() == 77);  // 70 benign + 7 malware
    CHECK(split.test.size() == 33);
    CHECK(std::is_sorted(split.train.begin(), split.train.end()));
    CHECK(std::is_sorted(split.test.begin(), split.test.end()));

    std::set<std::size_t> all(split.train.begin(), split.train.end());
    all.insert(split.test.begin(), split.test.end());
    CHECK(all.size() == 110);

    std::size_t train_malware = 0;
    for (auto r : split.train) train_malware += m.label(r) == Label::Malware ? 1 : 0;
    CHECK(train_malware == 7);
}

TEST_CASE("stratified_split rounds per class") {
    // 80009 benign rows at 0.7 round to 56006; 3857 malware to 2700.
    std::vector<AppSample> rows;
    rows.reserve(83866);
    for (int i = 0; i < 80009; ++i) rows.push_back(sample("b" + std::to_string(i), {0}, Label::Benign));
    for (int i = 0; i < 3857; ++i) {
        rows.push_back(sample("m" + std::to_string(i), {0}, Label::Malware, "f"));
    }
    const auto m = build_matrix({"a"}, std::move(rows));
    const auto split = stratified_split(m, 0.7, 5);
    std::size_t train_benign = 0, train_malware = 0;
    for (auto r : split.train) {
        (m.label(r) == Label::Benign ? train_benign : train_malware) += 1;
    }
    CHECK(train_benign == 56006);
    CHECK(train_malware == 2700);
    CHECK(split.train.size() + split.test.size() == 83866);
}

TEST_CASE("stratified_split is seed-deterministic and seed-sensitive") {
    const auto m = tiny();
    const auto s1 = stratified_split(m, 0.5, 3);
    const auto s2 = stratified_split(m, 0.5, 3);
    CHECK(s1.train == s2.train);
    CHECK(s1.test == s2.test);

    bool any_difference = false;
    for (std::uint64_t seed = 0; seed < 32 && !any_difference; ++seed) {
        any_difference = stratified_split(m, 0.5, seed).train != s1.train;
    }
    CHECK(any_difference);
}

TEST_CASE("stratified_split domain errors") {
    const auto m = tiny();
    CHECK(code_of([&] { stratified_split(m, 0.0, 1); }) == errc::bad_parameter);
    CHECK(code_of([&] { stratified_split(m, 1.0, 1); }) == errc::bad_parameter);

    const auto lopsided = build_matrix({"a"}, {sample("m", {1}, Label::Malware, "f"),
                                               sample("b0", {0}, Label::Benign),
                                               sample("b1", {0}, Label::Benign)});
    CHECK(code_of([&] { stratified_split(lopsided, 0.7, 1); }) == errc::class_too_small);
}

TEST_CASE("synth_generate shapes, families and determinism") {
    SynthSpec spec;
    spec.feature_names = {"s0", "n0"};
    spec.p_benign = {0.1, 0.5};
    spec.p_malware = {0.9, 0.5};
    spec.benign_count = 10;
    spec.malware_count = 7;
    spec.families = {"fa", "fb"};

    const auto m1 = synth_generate(spec, 42);
    const auto m2 = synth_generate(spec, 42);
    CHECK(m1.row_count() == 17);
    CHECK(m1.count(Label::Benign) == 10);
    CHECK(m1.count(Label::Malware) == 7);
    CHECK(m1.feature_names() == spec.feature_names);

    for (std::size_t r = 0; r < m1.row_count(); ++r) {
        CHECK(m1.app_id(r) == m2.app_id(r));
        CHECK(m1.label(r) == m2.label(r));
        for (std::size_t c = 0; c < m1.feature_count(); ++c) CHECK(m1.at(r, c) == m2.at(r, c));
    }

    // Families cycle over malware rows.
    std::size_t fa = 0, fb = 0;
    for (std::size_t r = 0; r < m1.row_count(); ++r) {
        if (m1.label(r) != Label::Malware) continue;
        if (m1.family(r) == "fa") ++fa;
        if (m1.family(r) == "fb") ++fb;
    }
    CHECK(fa == 4);
    CHECK(fb == 3);
}

TEST_CASE("synth_generate with degenerate rates is exact") {
    SynthSpec spec;
    spec.feature_names = {"always", "never"};
    spec.p_benign = {1.0, 0.0};
    spec.p_malware = {1.0, 0.0};
    spec.benign_count = 20;
    spec.malware_count = 20;
    const auto m = synth_generate(spec, 7);
    for (std::size_t r = 0; r < m.row_count(); ++r) {
        CHECK(m.at(r, 0) == 1);
        CHECK(m.at(r, 1) == 0);
    }
}

TEST_CASE("synth_generate allows a one-class output") {
    SynthSpec spec;
    spec.feature_names = {"f"};
    spec.p_benign = {0.5};
    spec.p_malware = {0.5};
    spec.benign_count = 0;
    spec.malware_count = 5;
    const auto m = synth_generate(spec, 1);
    CHECK(m.row_count() == 5);
    CHECK(m.count(Label::Malware) == 5);
}

TEST_CASE("synth_generate empirical rate tracks the requested rate") {
    SynthSpec spec;
    spec.feature_names = {"f"};
    spec.p_benign = {0.5};
    spec.p_malware = {0.5};
    spec.benign_count = 10000;
    spec.malware_count = 0;
    const auto m = synth_generate(spec, 99);
    double rate = static_cast<double>(m.column_sum(0)) / 10000.0;
    // 4 sigma of Binomial(1e4, .5)/1e4 is 0.02.
    CHECK(std::abs(rate - 0.5) < 0.02);
}

TEST_CASE("synth_generate rejects bad probabilities") {
    SynthSpec spec;
    spec.feature_names = {"f"};
    spec.p_benign = {1.5};
    spec.p_malware = {0.5};
    spec.benign_count = 1;
    spec.malware_count = 1;
    CHECK(code_of([&] { synth_generate(spec, 1); }) == errc::bad_probability);
    spec.p_benign = {0.5};
    spec.p_malware = {-0.1};
    CHECK(code_of([&] { synth_generate(spec, 1); }) == errc::bad_probability);
    spec.p_malware = {0.5, 0.5};
    CHECK(code_of([&] { synth_generate(spec, 1); }) == errc::width_mismatch);
}

TEST_CASE("matrix csv round-trip is exact") {
    const auto m = tiny();
    std::ostringstream out;
    write_matrix_csv(m, out);
    std::istringstream in(out.str());
    const auto back = read_matrix_csv(in);

    CHECK(back.feature_names() == m.feature_names());
    REQUIRE(back.row_count() == m.row_count());
    for (std::size_t r = 0; r < m.row_count(); ++r) {
        CHECK(back.app_id(r) == m.app_id(r));
        CHECK(back.label(r) == m.label(r));
        CHECK(back.family(r) == m.family(r));
        for (std::size_t c = 0; c < m.feature_count(); ++c) CHECK(back.at(r, c) == m.at(r, c));
    }

    std::ostringstream out2;
    write_matrix_csv(back, out2);
    CHECK(out2.str() == out.str());
}

TEST_CASE("matrix csv header and layout") {
    const auto m = build_matrix({"a", "b"}, {sample("x", {1, 0}, Label::Malware, "fam")});
    std::ostringstream out;
    write_matrix_csv(m, out);
    CHECK(out.str() == "app_id,a,b,family,label\nx,1,0,fam,malware\n");
}

TEST_CASE("matrix csv schema violations") {
    const auto parse = [](const std::string& text) {
        std::istringstream in(text);
        return read_matrix_csv(in);
    };
    CHECK(code_of([&] { parse(""); }) == errc::schema_error);
    CHECK(code_of([&] { parse("app_id,a,family\nx,1,f\n"); }) == errc::schema_error);
    CHECK(code_of([&] { parse("app_id,a,family,label\nx,2,f,malware\n"); }) == errc::schema_error);
    CHECK(code_of([&] { parse("app_id,a,family,label\nx,1,f,unknown\n"); }) == errc::schema_error);
    CHECK(code_of([&] { parse("app_id,a,family,label\nx,1,malware\n"); }) == errc::schema_error);
}

TEST_CASE("matrix csv tolerates CRLF line endings") {
    std::istringstream in("app_id,a,family,label\r\nx,1,f,malware\r\ny,0,,benign\r\n");
    const auto m = read_matrix_csv(in);
    CHECK(m.row_count() == 2);
    CHECK(m.at(0, 0) == 1);
    CHECK(m.label(1) == Label::Benign);
}
