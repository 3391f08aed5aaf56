#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "permrank/catalog.hpp"

namespace permrank {

struct ManifestInfo {
    std::string package_name;
    // Unique, in declaration order. Names are kept exactly as declared
    // (usually fully qualified).
    std::vector<std::string> declared_permissions;
    std::vector<std::string> parse_warnings;

    bool has_permission(std::string_view name) const noexcept;
};

// Binary Android XML. Structural violations raise Error with
// errc::malformed_header (file header), errc::truncated_chunk (chunk
// geometry) or errc::bad_string_index (string-pool references); anything
// recoverable lands in parse_warnings instead.
ManifestInfo parse_axml(std::span<const std::uint8_t> input);

// Plain-text manifest. Raises errc::xml_syntax on malformed input.
ManifestInfo parse_plain_xml(std::string_view input);

// Sniffs the binary magic and dispatches to one of the two parsers.
ManifestInfo parse_manifest_file(const std::filesystem::path& path);

struct PermissionVector {
    std::vector<std::uint8_t> bits;  // one per catalog entry, catalog order
    std::size_t unknown_count = 0;   // declared names outside the catalog
};

// Matches by unqualified name, case-sensitively.
PermissionVector to_permission_vector(const ManifestInfo& info, const PermissionCatalog& catalog);

}  // namespace permrank
