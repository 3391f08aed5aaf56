#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <functional>
#include <string>

#include "doctest.h"
#include "permrank/config.hpp"
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

class TempFile {
public:
    explicit TempFile(const std::string& text) {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("permrank_config_" + std::to_string(::getpid()) + "_" + std::to_string(counter++) +
                 ".conf");
        std::ofstream out(path_, std::ios::binary);
        out << text;
    }
    ~TempFile() { std::filesystem::remove(path_); }
    const std::filesystem::path& path() const noexcept { return path_; }

private:
    std::filesystem::path path_;
};

}  // namespace

TEST_CASE("defaults are sane and validate") {
    const RunConfig c;
    CHECK(c.seed == 0);
    CHECK(!c.seed_set);
    CHECK(c.threads == 0);
    CHECK(c.alpha == doctest::Approx(0.05));
    CHECK(c.train_fraction == doctest::Approx(0.7));
    CHECK(c.timing);
    CHECK(c.min_split == 2);
    CHECK(c.min_leaf == 1);
    CHECK(c.complexity == doctest::Approx(0.0));
    CHECK(c.trees == 500);
    CHECK(c.mtry == 0);
    CHECK(c.bootstrap);
    CHECK(c.kernel == "rbf");
    CHECK(c.cost == doctest::Approx(1.0));
    CHECK(c.gamma == doctest::Approx(0.0));
    CHECK(c.tolerance == doctest::Approx(1e-3));
    CHECK(c.max_passes == 1000);
    CHECK(c.folds == 3);
    c.validate();
}

TEST_CASE("a file overlays only the keys it names") {
    const TempFile file("seed=42\nalpha=0.01\nkernel=linear\ntrees=50\n");
    RunConfig c;
    c.load_file(file.path());
    CHECK(c.seed == 42);
    CHECK(c.seed_set);
    CHECK(c.alpha == doctest::Approx(0.01));
    CHECK(c.kernel == "linear");
    CHECK(c.trees == 50);
    // Untouched keys keep their defaults.
    CHECK(c.train_fraction == doctest::Approx(0.7));
    CHECK(c.cost == doctest::Approx(1.0));
    CHECK(c.folds == 3);
    c.validate();
}

TEST_CASE("later files override earlier ones") {
    const TempFile first("cost=2\ngamma=0.5\n");
    const TempFile second("cost=8\n");
    RunConfig c;
    c.load_file(first.path());
    c.load_file(second.path());
    CHECK(c.cost == doctest::Approx(8.0));
    CHECK(c.gamma == doctest::Approx(0.5));
}

TEST_CASE("comments, blanks, and padding are tolerated") {
    const TempFile file("# a full-line comment\n"
                        "\n"
                        "  threads = 4   # trailing comment\n"
                        "\ttiming\t=\toff\t\n"
                        "train_fraction=0.8\r\n");
    RunConfig c;
    c.load_file(file.path());
    CHECK(c.threads == 4);
    CHECK(!c.timing);
    CHECK(c.train_fraction == doctest::Approx(0.8));
}

TEST_CASE("every boolean spelling works") {
    for (const char* word : {"on", "true", "1"}) {
        const TempFile file(std::string("bootstrap=") + word + "\n");
        RunConfig c;
        c.bootstrap = false;
        c.load_file(file.path());
        CHECK(c.bootstrap);
    }
    for (const char* word : {"off", "false", "0"}) {
        const TempFile file(std::string("timing=") + word + "\n");
        RunConfig c;
        c.load_file(file.path());
        CHECK(!c.timing);
    }
    const TempFile bad("timing=yes\n");
    RunConfig c;
    CHECK(code_of([&] { c.load_file(bad.path()); }) == errc::bad_config);
}

TEST_CASE("malformed files are rejected with bad_config") {
    const auto fails = [](const std::string& text) {
        const TempFile file(text);
        RunConfig c;
        return code_of([&] { c.load_file(file.path()); });
    };
    CHECK(fails("mystery=1\n") == errc::bad_config);
    CHECK(fails("just some words\n") == errc::bad_config);
    CHECK(fails("trees=12x\n") == errc::bad_config);
    CHECK(fails("trees=-3\n") == errc::bad_config);
    CHECK(fails("alpha=lots\n") == errc::bad_config);

    RunConfig c;
    CHECK(code_of([&] { c.load_file("/nonexistent/permrank.conf"); }) == errc::io_error);
}

TEST_CASE("validate rejects out-of-domain values field by field") {
    const auto rejected = [](const std::function<void(RunConfig&)>& poke) {
        RunConfig c;
        poke(c);
        return code_of([&] { c.validate(); }) == errc::bad_config;
    };
    CHECK(rejected([](RunConfig& c) { c.train_fraction = 0.0; }));
    CHECK(rejected([](RunConfig& c) { c.train_fraction = 1.0; }));
    CHECK(rejected([](RunConfig& c) { c.alpha = 0.0; }));
    CHECK(rejected([](RunConfig& c) { c.alpha = 1.0; }));
    CHECK(rejected([](RunConfig& c) { c.kernel = "poly"; }));
    CHECK(rejected([](RunConfig& c) { c.cost = 0.0; }));
    CHECK(rejected([](RunConfig& c) { c.gamma = -0.5; }));
    CHECK(rejected([](RunConfig& c) { c.tolerance = 0.0; }));
    CHECK(rejected([](RunConfig& c) { c.trees = 0; }));
    CHECK(rejected([](RunConfig& c) { c.min_leaf = 0; }));
    CHECK(rejected([](RunConfig& c) { c.min_split = 1; }));
    CHECK(rejected([](RunConfig& c) { c.complexity = -0.1; }));
    CHECK(rejected([](RunConfig& c) { c.folds = 1; }));
    CHECK(rejected([](RunConfig& c) { c.max_passes = 0; }));

    RunConfig edge;
    edge.train_fraction = 0.99;
    edge.alpha = 0.001;
    edge.kernel = "linear";
    edge.validate();
}
