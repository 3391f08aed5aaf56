#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace permrank {

enum class ProtectionLevel { Normal, Dangerous, Signature };

const char* to_string(ProtectionLevel level) noexcept;
std::optional<ProtectionLevel> protection_level_from(std::string_view token) noexcept;

struct CatalogEntry {
    std::string name;  // unqualified, e.g. "INTERNET"
    ProtectionLevel level;
};

// Fixed universe of permission names that defines feature-vector order.
// Entries are sorted by name; the order is the column order everywhere.
class PermissionCatalog {
public:
    explicit PermissionCatalog(std::vector<CatalogEntry> entries);

    static PermissionCatalog load(const std::filesystem::path& csv_path);

    std::size_t size() const noexcept { return entries_.size(); }
    const CatalogEntry& at(std::size_t i) const { return entries_.at(i); }
    const std::vector<CatalogEntry>& entries() const noexcept { return entries_; }

    // Index of an unqualified name, or nullopt if outside the catalog.
    std::optional<std::size_t> index_of(std::string_view name) const noexcept;

    std::size_t count(ProtectionLevel level) const noexcept;

private:
    std::vector<CatalogEntry> entries_;
};

// Final dot-separated segment: "android.permission.INTERNET" -> "INTERNET".
std::string_view unqualified_name(std::string_view permission) noexcept;

}  // namespace permrank
