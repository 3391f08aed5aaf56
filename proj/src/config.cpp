#include "permrank/config.hpp"

#include <fstream>

#include "permrank/errors.hpp"

namespace permrank {
namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t");
    return s.substr(begin, end - begin + 1);
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
    try {
        // stoull would wrap a leading minus around instead of rejecting it.
        if (value.empty() || value[0] == '-') throw std::invalid_argument(value);
        std::size_t used = 0;
        const std::uint64_t v = std::stoull(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        raise(errc::bad_config, key + " needs an unsigned integer, got '" + value + "'");
    }
}

double parse_real(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const double v = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        raise(errc::bad_config, key + " needs a number, got '" + value + "'");
    }
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "on" || value == "true" || value == "1") return true;
    if (value == "off" || value == "false" || value == "0") return false;
    raise(errc::bad_config, key + " needs on/off, got '" + value + "'");
}

}  // namespace

void RunConfig::load_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) raise(errc::io_error, "cannot open config " + path.string());

    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            raise(errc::bad_config, path.string() + ":" + std::to_string(lineno) + ": expected key=value");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));

        if (key == "seed") {
            seed = parse_u64(key, value);
            seed_set = true;
        } else if (key == "threads") {
            threads = static_cast<unsigned>(parse_u64(key, value));
        } else if (key == "alpha") {
            alpha = parse_real(key, value);
        } else if (key == "train_fraction") {
            train_fraction = parse_real(key, value);
        } else if (key == "timing") {
            timing = parse_bool(key, value);
        } else if (key == "min_split") {
            min_split = parse_u64(key, value);
        } else if (key == "min_leaf") {
            min_leaf = parse_u64(key, value);
        } else if (key == "complexity") {
            complexity = parse_real(key, value);
        } else if (key == "trees") {
            trees = parse_u64(key, value);
        } else if (key == "mtry") {
            mtry = parse_u64(key, value);
        } else if (key == "bootstrap") {
            bootstrap = parse_bool(key, value);
        } else if (key == "kernel") {
            kernel = value;
        } else if (key == "cost") {
            cost = parse_real(key, value);
        } else if (key == "gamma") {
            gamma = parse_real(key, value);
        } else if (key == "tolerance") {
            tolerance = parse_real(key, value);
        } else if (key == "max_passes") {
            max_passes = parse_u64(key, value);
        } else if (key == "folds") {
            folds = parse_u64(key, value);
        } else {
            raise(errc::bad_config, path.string() + ":" + std::to_string(lineno) + ": unknown key " + key);
        }
    }
}

void RunConfig::validate() const {
    if (!(train_fraction > 0.0) || !(train_fraction < 1.0)) {
        raise(errc::bad_config, "train_fraction must be inside (0, 1)");
    }
    if (!(alpha > 0.0) || !(alpha < 1.0)) raise(errc::bad_config, "alpha must be inside (0, 1)");
    if (kernel != "rbf" && kernel != "linear") raise(errc::bad_config, "kernel must be rbf or linear");
    if (!(cost > 0.0)) raise(errc::bad_config, "cost must be > 0");
    if (gamma < 0.0) raise(errc::bad_config, "gamma must be >= 0");
    if (!(tolerance > 0.0)) raise(errc::bad_config, "tolerance must be > 0");
    if (trees == 0) raise(errc::bad_config, "trees must be >= 1");
    if (min_leaf == 0 || min_split < 2) raise(errc::bad_config, "min_leaf >= 1 and min_split >= 2");
    if (complexity < 0.0) raise(errc::bad_config, "complexity must be >= 0");
    if (folds < 2) raise(errc::bad_config, "folds must be >= 2");
    if (max_passes == 0) raise(errc::bad_config, "max_passes must be >= 1");
}

}  // namespace permrank
