#pragma once

#include <stdexcept>
#include <string>

namespace permrank {

// Every failure the library reports deliberately carries one of these codes.
// Anything else escaping a permrank call is a plain bug.
enum class errc {
    malformed_header,   // file-level header is wrong (magic, declared size)
    truncated_chunk,    // chunk geometry violates the container
    bad_string_index,   // string-pool reference out of range
    xml_syntax,         // plain-text manifest is not well formed
    width_mismatch,     // row width disagrees with the feature list
    empty_matrix,       // operation needs at least one row/column
    class_too_small,    // a class has too few rows for the requested split
    bad_probability,    // probability outside [0, 1]
    single_class,       // training needs both classes present
    missing_class,      // scoring needs both classes in the truth set
    unknown_feature,    // referenced feature is not in the matrix
    bad_parameter,      // out-of-domain numeric parameter
    schema_error,       // CSV/JSON shape is not the documented one
    io_error,           // file could not be read or written
    bad_config,         // config file or flag value rejected
};

const char* to_string(errc code) noexcept;

class Error : public std::runtime_error {
public:
    Error(errc code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

    errc code() const noexcept { return code_; }

private:
    errc code_;
};

[[noreturn]] inline void raise(errc code, const std::string& message) {
    throw Error(code, message);
}

inline const char* to_string(errc code) noexcept {
    switch (code) {
    case errc::malformed_header: return "malformed header";
    case errc::truncated_chunk: return "truncated chunk";
    case errc::bad_string_index: return "bad string index";
    case errc::xml_syntax: return "xml syntax error";
    case errc::width_mismatch: return "width mismatch";
    case errc::empty_matrix: return "empty matrix";
    case errc::class_too_small: return "class too small";
    case errc::bad_probability: return "bad probability";
    case errc::single_class: return "single class";
    case errc::missing_class: return "missing class";
    case errc::unknown_feature: return "unknown feature";
    case errc::bad_parameter: return "bad parameter";
    case errc::schema_error: return "schema error";
    case errc::io_error: return "io error";
    case errc::bad_config: return "bad config";
    }
    return "unknown error";
}

}  // namespace permrank
