#include "permrank/catalog.hpp"

#include <algorithm>
#include <fstream>

#include "permrank/errors.hpp"

namespace permrank {

const char* to_string(ProtectionLevel level) noexcept {
    switch (level) {
    case ProtectionLevel::Normal: return "normal";
    case ProtectionLevel::Dangerous: return "dangerous";
    case ProtectionLevel::Signature: return "signature";
    }
    return "unknown";
}

std::optional<ProtectionLevel> protection_level_from(std::string_view token) noexcept {
    if (token == "normal") return ProtectionLevel::Normal;
    if (token == "dangerous") return ProtectionLevel::Dangerous;
    if (token == "signature") return ProtectionLevel::Signature;
    return std::nullopt;
}

PermissionCatalog::PermissionCatalog(std::vector<CatalogEntry> entries) : entries_(std::move(entries)) {
    std::sort(entries_.begin(), entries_.end(),
              [](const CatalogEntry& a, const CatalogEntry& b) { return a.name < b.name; });
    for (std::size_t i = 0; i + 1 < entries_.size(); ++i) {
        if (entries_[i].name == entries_[i + 1].name) {
            raise(errc::schema_error, "duplicate catalog entry " + entries_[i].name);
        }
    }
    for (const auto& e : entries_) {
        if (e.name.empty()) raise(errc::schema_error, "empty catalog name");
        if (e.name.find('.') != std::string::npos) {
            raise(errc::schema_error, "catalog names must be unqualified: " + e.name);
        }
    }
}

PermissionCatalog PermissionCatalog::load(const std::filesystem::path& csv_path) {
    std::ifstream in(csv_path);
    if (!in) raise(errc::io_error, "cannot open catalog " + csv_path.string());

    std::string line;
    if (!std::getline(in, line)) raise(errc::schema_error, "catalog is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "name,level") raise(errc::schema_error, "catalog header must be name,level");

    std::vector<CatalogEntry> entries;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) raise(errc::schema_error, "catalog row lacks a level: " + line);
        const std::string name = line.substr(0, comma);
        const std::string level_token = line.substr(comma + 1);
        const auto level = protection_level_from(level_token);
        if (!level) raise(errc::schema_error, "unknown protection level " + level_token);
        entries.push_back({name, *level});
    }
    if (entries.empty()) raise(errc::schema_error, "catalog has no entries");
    return PermissionCatalog(std::move(entries));
}

std::optional<std::size_t> PermissionCatalog::index_of(std::string_view name) const noexcept {
    const auto it = std::lower_bound(
        entries_.begin(), entries_.end(), name,
        [](const CatalogEntry& e, std::string_view target) { return e.name < target; });
    if (it == entries_.end() || it->name != name) return std::nullopt;
    return static_cast<std::size_t>(it - entries_.begin());
}

std::size_t PermissionCatalog::count(ProtectionLevel level) const noexcept {
    std::size_t n = 0;
    for (const auto& e : entries_) {
        if (e.level == level) ++n;
    }
    return n;
}

std::string_view unqualified_name(std::string_view permission) noexcept {
    const auto dot = permission.rfind('.');
    return dot == std::string_view::npos ? permission : permission.substr(dot + 1);
}

}  // namespace permrank
