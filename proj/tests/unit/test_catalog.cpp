#include "doctest.h"
#include "permrank/catalog.hpp"
#include "permrank/errors.hpp"

using namespace permrank;

namespace {
const PermissionCatalog& shipped() {
    static PermissionCatalog c = PermissionCatalog::load(PERMRANK_DATA_DIR "/permission_catalog.csv");
    return c;
}
}  // namespace

TEST_CASE("shipped catalog has the documented shape") {
    const auto& c = shipped();
    CHECK(c.size() == 94);
    CHECK(c.count(ProtectionLevel::Normal) == 37);
    CHECK(c.count(ProtectionLevel::Dangerous) == 28);
    CHECK(c.count(ProtectionLevel::Signature) == 29);
}

TEST_CASE("shipped catalog is sorted and unique") {
    const auto& c = shipped();
    for (std::size_t i = 1; i < c.size(); ++i) CHECK(c.at(i - 1).name < c.at(i).name);
}

TEST_CASE("index_of finds whatever the catalog holds") {
    const auto& c = shipped();
    for (std::size_t i = 0; i < c.size(); ++i) {
        const auto idx = c.index_of(c.at(i).name);
        REQUIRE(idx.has_value());
        CHECK(*idx == i);
    }
    CHECK_FALSE(c.index_of("NOT_A_PERMISSION").has_value());
    CHECK_FALSE(c.index_of("internet").has_value());
}

TEST_CASE("well-known entries carry their protection level") {
    const auto& c = shipped();
    REQUIRE(c.index_of("INTERNET").has_value());
    CHECK(c.at(*c.index_of("INTERNET")).level == ProtectionLevel::Normal);
    REQUIRE(c.index_of("SEND_SMS").has_value());
    CHECK(c.at(*c.index_of("SEND_SMS")).level == ProtectionLevel::Dangerous);
}

TEST_CASE("constructor rejects duplicates and qualified names") {
    CHECK_THROWS_AS(PermissionCatalog({{"A", ProtectionLevel::Normal}, {"A", ProtectionLevel::Normal}}),
                    Error);
    CHECK_THROWS_AS(PermissionCatalog({{"android.permission.A", ProtectionLevel::Normal}}), Error);
    CHECK_THROWS_AS(PermissionCatalog({{"", ProtectionLevel::Normal}}), Error);
}

TEST_CASE("constructor sorts entries") {
    const PermissionCatalog c({{"B", ProtectionLevel::Normal}, {"A", ProtectionLevel::Dangerous}});
    CHECK(c.at(0).name == "A");
    CHECK(c.at(1).name == "B");
}

TEST_CASE("unqualified_name keeps the last segment") {
    CHECK(unqualified_name("android.permission.INTERNET") == "INTERNET");
    CHECK(unqualified_name("com.vendor.sdk.EXTRA") == "EXTRA");
    CHECK(unqualified_name("INTERNET") == "INTERNET");
    CHECK(unqualified_name("") == "");
}

TEST_CASE("protection level tokens round-trip") {
    for (auto level : {ProtectionLevel::Normal, ProtectionLevel::Dangerous, ProtectionLevel::Signature}) {
        const auto back = protection_level_from(to_string(level));
        REQUIRE(back.has_value());
        CHECK(*back == level);
    }
    CHECK_FALSE(protection_level_from("runtime").has_value());
}

TEST_CASE("load rejects a missing file and a bad header") {
    CHECK_THROWS_AS(PermissionCatalog::load("/nonexistent/catalog.csv"), Error);
}
