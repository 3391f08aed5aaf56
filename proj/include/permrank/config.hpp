#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

namespace permrank {

// Every knob a subcommand can take, with its default. A config file's
// key=value pairs overlay the defaults; command-line flags overlay both.
struct RunConfig {
    std::uint64_t seed = 0;
    bool seed_set = false;      // false = draw entropy and report it
    unsigned threads = 0;       // 0 = hardware default
    double alpha = 0.05;        // ranking threshold
    double train_fraction = 0.7;
    bool timing = true;

    // tree
    std::size_t min_split = 2;
    std::size_t min_leaf = 1;
    double complexity = 0.0;

    // forest
    std::size_t trees = 500;
    std::size_t mtry = 0;       // 0 = floor(sqrt(p))
    bool bootstrap = true;

    // svm
    std::string kernel = "rbf";
    double cost = 1.0;
    double gamma = 0.0;         // 0 = 1/p
    double tolerance = 1e-3;
    std::size_t max_passes = 1000;
    std::size_t folds = 3;      // tuning folds

    // Overlays file entries onto this config. Unknown keys are errors.
    void load_file(const std::filesystem::path& path);

    // Raises errc::bad_config on out-of-domain values.
    void validate() const;
};

}  // namespace permrank
