#include "permrank/manifest.hpp"

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "permrank/errors.hpp"

namespace permrank {
namespace {

// Chunk types of the binary XML container.
constexpr std::uint16_t kChunkStringPool = 0x0001;
constexpr std::uint16_t kChunkXml = 0x0003;
constexpr std::uint16_t kChunkStartNamespace = 0x0100;
constexpr std::uint16_t kChunkEndNamespace = 0x0101;
constexpr std::uint16_t kChunkStartElement = 0x0102;
constexpr std::uint16_t kChunkEndElement = 0x0103;
constexpr std::uint16_t kChunkCdata = 0x0104;
constexpr std::uint16_t kChunkResourceMap = 0x0180;

constexpr std::uint32_t kStringPoolUtf8 = 1u << 8;
constexpr std::uint32_t kNoEntry = 0xffffffffu;
constexpr std::uint8_t kTypeString = 0x03;
constexpr std::uint32_t kResIdName = 0x01010003;  // android:name
constexpr std::size_t kAttributeRecordSize = 20;

std::uint16_t read_u16(std::span<const std::uint8_t> d, std::size_t at) {
    return static_cast<std::uint16_t>(d[at] | (d[at + 1] << 8));
}

std::uint32_t read_u32(std::span<const std::uint8_t> d, std::size_t at) {
    return static_cast<std::uint32_t>(d[at]) | (static_cast<std::uint32_t>(d[at + 1]) << 8) |
           (static_cast<std::uint32_t>(d[at + 2]) << 16) | (static_cast<std::uint32_t>(d[at + 3]) << 24);
}

void append_utf8(std::string& out, std::uint32_t cp) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xc0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xe0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3f)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
    } else {
        out.push_back(static_cast<char>(0xf0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3f)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3f)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
    }
}

// Decodes the string pool eagerly. Offsets that escape the chunk are index
// violations rather than geometry ones: the chunk itself is intact, the
// table inside it points outside the data it owns.
std::vector<std::string> parse_string_pool(std::span<const std::uint8_t> chunk, std::size_t header_size) {
    if (header_size < 28 || chunk.size() < 28) {
        raise(errc::truncated_chunk, "string pool header too small");
    }
    const std::uint32_t string_count = read_u32(chunk, 8);
    const std::uint32_t flags = read_u32(chunk, 16);
    const std::uint32_t strings_start = read_u32(chunk, 20);
    const bool utf8 = (flags & kStringPoolUtf8) != 0;

    const std::size_t offsets_at = header_size;
    if (offsets_at + static_cast<std::size_t>(string_count) * 4 > chunk.size()) {
        raise(errc::truncated_chunk, "string pool offset table overruns chunk");
    }
    if (strings_start > chunk.size()) {
        raise(errc::bad_string_index, "string data start outside pool");
    }

    std::vector<std::string> pool;
    pool.reserve(string_count);
    for (std::uint32_t i = 0; i < string_count; ++i) {
        const std::uint32_t rel = read_u32(chunk, offsets_at + static_cast<std::size_t>(i) * 4);
        std::size_t at = static_cast<std::size_t>(strings_start) + rel;
        if (at >= chunk.size()) raise(errc::bad_string_index, "string offset outside pool");

        std::string s;
        if (utf8) {
            // Two length prefixes (UTF-16 units, then bytes), each one or two
            // bytes with a high-bit extension.
            auto read_len8 = [&](const char* what) -> std::size_t {
                if (at >= chunk.size()) raise(errc::bad_string_index, what);
                std::size_t len = chunk[at++];
                if (len & 0x80) {
                    if (at >= chunk.size()) raise(errc::bad_string_index, what);
                    len = ((len & 0x7f) << 8) | chunk[at++];
                }
                return len;
            };
            read_len8("utf8 length prefix outside pool");
            const std::size_t byte_len = read_len8("utf8 length prefix outside pool");
            if (at + byte_len > chunk.size()) raise(errc::bad_string_index, "utf8 string overruns pool");
            s.assign(reinterpret_cast<const char*>(chunk.data()) + at, byte_len);
        } else {
            auto read_len16 = [&]() -> std::size_t {
                if (at + 2 > chunk.size()) raise(errc::bad_string_index, "utf16 length prefix outside pool");
                std::size_t len = read_u16(chunk, at);
                at += 2;
                if (len & 0x8000) {
                    if (at + 2 > chunk.size()) raise(errc::bad_string_index, "utf16 length prefix outside pool");
                    len = ((len & 0x7fff) << 16) | read_u16(chunk, at);
                    at += 2;
                }
                return len;
            };
            const std::size_t unit_len = read_len16();
            if (at + unit_len * 2 > chunk.size()) raise(errc::bad_string_index, "utf16 string overruns pool");
            for (std::size_t u = 0; u < unit_len; ++u) {
                std::uint32_t cp = read_u16(chunk, at + u * 2);
                if (cp >= 0xd800 && cp < 0xdc00 && u + 1 < unit_len) {
                    const std::uint32_t lo = read_u16(chunk, at + (u + 1) * 2);
                    if (lo >= 0xdc00 && lo < 0xe000) {
                        cp = 0x10000 + ((cp - 0xd800) << 10) + (lo - 0xdc00);
                        ++u;
                    }
                }
                if (cp >= 0xd800 && cp < 0xe000) cp = 0xfffd;  // unpaired surrogate
                append_utf8(s, cp);
            }
        }
        pool.push_back(std::move(s));
    }
    return pool;
}

struct AxmlState {
    std::vector<std::string> pool;
    std::vector<std::uint32_t> resource_map;
    ManifestInfo info;
    bool seen_pool = false;

    const std::string& pooled(std::uint32_t index, const char* what) const {
        if (index >= pool.size()) {
            raise(errc::bad_string_index, std::string(what) + " index " + std::to_string(index) +
                                              " outside pool of " + std::to_string(pool.size()));
        }
        return pool[index];
    }

    // An attribute name is its pool string; compiled manifests may leave that
    // empty and identify the attribute by resource id instead.
    bool attr_is(std::uint32_t name_index, std::string_view literal, std::uint32_t res_id) const {
        const std::string& s = pooled(name_index, "attribute name");
        if (!s.empty()) return s == literal;
        return name_index < resource_map.size() && resource_map[name_index] == res_id;
    }
};

void add_permission(ManifestInfo& info, std::string name) {
    if (name.empty()) {
        info.parse_warnings.push_back("uses-permission with empty name ignored");
        return;
    }
    const bool dup = std::find(info.declared_permissions.begin(), info.declared_permissions.end(), name) !=
                     info.declared_permissions.end();
    if (dup) {
        info.parse_warnings.push_back("duplicate permission " + name + " ignored");
        return;
    }
    info.declared_permissions.push_back(std::move(name));
}

void parse_start_element(AxmlState& st, std::span<const std::uint8_t> chunk, std::size_t header_size) {
    // Payload: ns, name, attributeStart, attributeSize, attributeCount,
    // idIndex, classIndex, styleIndex.
    if (chunk.size() < header_size + 20) raise(errc::truncated_chunk, "start element payload too small");
    const std::size_t body = header_size;
    const std::uint32_t name_index = read_u32(chunk, body + 4);
    const std::uint16_t attribute_start = read_u16(chunk, body + 8);
    const std::uint16_t attribute_size = read_u16(chunk, body + 10);
    const std::uint16_t attribute_count = read_u16(chunk, body + 12);

    const std::string& element = st.pooled(name_index, "element name");
    const bool want_package = element == "manifest";
    const bool want_permission = element == "uses-permission";
    if (!want_package && !want_permission) return;

    if (attribute_size < kAttributeRecordSize) {
        raise(errc::truncated_chunk, "attribute record smaller than 20 bytes");
    }
    const std::size_t attrs_at = body + attribute_start;
    if (attrs_at + static_cast<std::size_t>(attribute_count) * attribute_size > chunk.size()) {
        raise(errc::truncated_chunk, "attribute table overruns element chunk");
    }

    for (std::uint16_t i = 0; i < attribute_count; ++i) {
        const std::size_t at = attrs_at + static_cast<std::size_t>(i) * attribute_size;
        // Record: ns, name, rawValue, then size u16 / res0 u8 / dataType u8 / data u32.
        const std::uint32_t attr_name = read_u32(chunk, at + 4);
        const std::uint32_t raw_value = read_u32(chunk, at + 8);
        const std::uint8_t data_type = chunk[at + 15];
        const std::uint32_t data = read_u32(chunk, at + 16);

        const bool is_name = want_permission && st.attr_is(attr_name, "name", kResIdName);
        const bool is_package = want_package && st.pooled(attr_name, "attribute name") == "package";
        if (!is_name && !is_package) continue;

        std::string value;
        if (raw_value != kNoEntry) {
            value = st.pooled(raw_value, "attribute value");
        } else if (data_type == kTypeString) {
            value = st.pooled(data, "attribute value");
        } else {
            st.info.parse_warnings.push_back("non-string value on " + element + " attribute skipped");
            continue;
        }
        if (is_package) {
            st.info.package_name = value;
        } else {
            add_permission(st.info, std::move(value));
        }
    }
}

}  // namespace

bool ManifestInfo::has_permission(std::string_view name) const noexcept {
    return std::find(declared_permissions.begin(), declared_permissions.end(), name) !=
           declared_permissions.end();
}

ManifestInfo parse_axml(std::span<const std::uint8_t> input) {
    if (input.size() < 8) raise(errc::malformed_header, "input shorter than a file header");
    const std::uint16_t magic = read_u16(input, 0);
    const std::uint16_t header_size = read_u16(input, 2);
    const std::uint32_t declared = read_u32(input, 4);
    if (magic != kChunkXml) raise(errc::malformed_header, "not a binary xml file");
    if (header_size != 8) raise(errc::malformed_header, "unexpected file header size");
    if (declared < 8 || declared > input.size()) {
        raise(errc::malformed_header, "declared file size disagrees with input");
    }

    AxmlState st;
    std::size_t pos = 8;
    while (pos < declared) {
        if (declared - pos < 8) raise(errc::truncated_chunk, "trailing bytes smaller than a chunk header");
        const std::uint16_t type = read_u16(input, pos);
        const std::uint16_t chunk_header = read_u16(input, pos + 2);
        const std::uint32_t chunk_size = read_u32(input, pos + 4);
        if (chunk_size < 8 || chunk_header < 8 || chunk_size < chunk_header) {
            raise(errc::truncated_chunk, "chunk sizes inconsistent");
        }
        if (chunk_size % 4 != 0) raise(errc::truncated_chunk, "chunk size not 4-byte aligned");
        if (chunk_size > declared - pos) raise(errc::truncated_chunk, "chunk overruns file");

        const auto chunk = input.subspan(pos, chunk_size);
        switch (type) {
        case kChunkStringPool:
            st.pool = parse_string_pool(chunk, chunk_header);
            st.seen_pool = true;
            break;
        case kChunkResourceMap: {
            st.resource_map.clear();
            for (std::size_t at = chunk_header; at + 4 <= chunk_size; at += 4) {
                st.resource_map.push_back(read_u32(chunk, at));
            }
            break;
        }
        case kChunkStartElement:
            if (!st.seen_pool) raise(errc::truncated_chunk, "element before string pool");
            parse_start_element(st, chunk, chunk_header);
            break;
        case kChunkEndElement:
        case kChunkStartNamespace:
        case kChunkEndNamespace:
        case kChunkCdata:
            break;
        default:
            st.info.parse_warnings.push_back("unknown chunk type 0x" + [&] {
                char buf[8];
                std::snprintf(buf, sizeof buf, "%04x", type);
                return std::string(buf);
            }() + " skipped");
            break;
        }
        pos += chunk_size;
    }
    return std::move(st.info);
}

namespace {

// Plain-text manifests only need elements and attributes; content, comments
// and declarations are skipped.
class XmlScanner {
public:
    explicit XmlScanner(std::string_view text) : text_(text) {}

    ManifestInfo run() {
        skip_prolog();
        std::size_t depth = 0;
        bool saw_root = false;
        while (pos_ < text_.size()) {
            skip_until('<');
            if (pos_ >= text_.size()) break;
            if (starts_with("<!--")) {
                skip_past("-->", "unterminated comment");
            } else if (starts_with("<![CDATA[")) {
                skip_past("]]>", "unterminated CDATA section");
            } else if (starts_with("<?")) {
                skip_past("?>", "unterminated processing instruction");
            } else if (starts_with("<!")) {
                skip_past(">", "unterminated declaration");
            } else if (starts_with("</")) {
                pos_ += 2;
                read_name();
                skip_space();
                expect('>');
                if (depth == 0) raise(errc::xml_syntax, "close tag without open tag");
                --depth;
            } else {
                ++pos_;  // consume '<'
                const std::string name = read_name();
                const bool root = !saw_root;
                if (root) {
                    saw_root = true;
                    if (name != "manifest") raise(errc::xml_syntax, "root element is not manifest");
                } else if (depth == 0) {
                    raise(errc::xml_syntax, "content after the root element");
                }
                const bool self_closed = read_attributes(name, root);
                if (!self_closed) ++depth;
            }
        }
        if (depth != 0) raise(errc::xml_syntax, "unclosed element at end of input");
        if (!saw_root) raise(errc::xml_syntax, "no root element");
        return std::move(info_);
    }

private:
    void skip_prolog() {
        // UTF-8 BOM if present.
        if (text_.size() >= 3 && static_cast<unsigned char>(text_[0]) == 0xef &&
            static_cast<unsigned char>(text_[1]) == 0xbb && static_cast<unsigned char>(text_[2]) == 0xbf) {
            pos_ = 3;
        }
    }

    bool starts_with(std::string_view prefix) const {
        return text_.substr(pos_).substr(0, prefix.size()) == prefix;
    }

    void skip_until(char c) {
        while (pos_ < text_.size() && text_[pos_] != c) ++pos_;
    }

    void skip_past(std::string_view marker, const char* what) {
        const auto at = text_.find(marker, pos_);
        if (at == std::string_view::npos) raise(errc::xml_syntax, what);
        pos_ = at + marker.size();
    }

    void skip_space() {
        while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t' || text_[pos_] == '\n' ||
                                       text_[pos_] == '\r')) {
            ++pos_;
        }
    }

    void expect(char c) {
        if (pos_ >= text_.size() || text_[pos_] != c) {
            raise(errc::xml_syntax, std::string("expected '") + c + "'");
        }
        ++pos_;
    }

    static bool name_char(char c) {
        return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' ||
               c == '-' || c == '.' || c == ':';
    }

    std::string read_name() {
        const std::size_t start = pos_;
        while (pos_ < text_.size() && name_char(text_[pos_])) ++pos_;
        if (pos_ == start) raise(errc::xml_syntax, "expected a name");
        return std::string(text_.substr(start, pos_ - start));
    }

    std::string read_quoted() {
        skip_space();
        if (pos_ >= text_.size() || (text_[pos_] != '"' && text_[pos_] != '\'')) {
            raise(errc::xml_syntax, "attribute value must be quoted");
        }
        const char quote = text_[pos_++];
        const std::size_t start = pos_;
        skip_until(quote);
        if (pos_ >= text_.size()) raise(errc::xml_syntax, "unterminated attribute value");
        std::string raw(text_.substr(start, pos_ - start));
        ++pos_;
        return decode_entities(raw);
    }

    static std::string decode_entities(const std::string& raw) {
        if (raw.find('&') == std::string::npos) return raw;
        std::string out;
        out.reserve(raw.size());
        std::size_t i = 0;
        while (i < raw.size()) {
            if (raw[i] != '&') {
                out.push_back(raw[i++]);
                continue;
            }
            const auto semi = raw.find(';', i);
            if (semi == std::string::npos) raise(errc::xml_syntax, "unterminated entity");
            const std::string_view ent = std::string_view(raw).substr(i + 1, semi - i - 1);
            if (ent == "amp") out.push_back('&');
            else if (ent == "lt") out.push_back('<');
            else if (ent == "gt") out.push_back('>');
            else if (ent == "quot") out.push_back('"');
            else if (ent == "apos") out.push_back('\'');
            else if (!ent.empty() && ent[0] == '#') {
                const bool hex = ent.size() > 1 && (ent[1] == 'x' || ent[1] == 'X');
                std::uint32_t cp = 0;
                try {
                    cp = static_cast<std::uint32_t>(
                        std::stoul(std::string(ent.substr(hex ? 2 : 1)), nullptr, hex ? 16 : 10));
                } catch (const std::exception&) {
                    raise(errc::xml_syntax, "bad character reference");
                }
                append_utf8(out, cp);
            } else {
                raise(errc::xml_syntax, "unknown entity &" + std::string(ent) + ";");
            }
            i = semi + 1;
        }
        return out;
    }

    // Consumes attributes and the tag terminator; returns true when the
    // element is self-closing.
    bool read_attributes(const std::string& element, bool root) {
        std::string permission_name;
        for (;;) {
            skip_space();
            if (pos_ >= text_.size()) raise(errc::xml_syntax, "unterminated start tag");
            if (text_[pos_] == '>') {
                ++pos_;
                flush(element, root, permission_name);
                return false;
            }
            if (starts_with("/>")) {
                pos_ += 2;
                flush(element, root, permission_name);
                return true;
            }
            const std::string attr = read_name();
            skip_space();
            expect('=');
            const std::string value = read_quoted();
            if (root && attr == "package") info_.package_name = value;
            if (element == "uses-permission" && (attr == "android:name" || attr == "name")) {
                permission_name = value;
            }
        }
    }

    void flush(const std::string& element, bool /*root*/, const std::string& permission_name) {
        if (element != "uses-permission") return;
        if (permission_name.empty()) {
            info_.parse_warnings.push_back("uses-permission without a name attribute");
            return;
        }
        add_permission(info_, permission_name);
    }

    std::string_view text_;
    std::size_t pos_ = 0;
    ManifestInfo info_;
};

}  // namespace

ManifestInfo parse_plain_xml(std::string_view input) {
    return XmlScanner(input).run();
}

ManifestInfo parse_manifest_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise(errc::io_error, "cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    const std::string bytes = buf.str();

    const auto data = std::span<const std::uint8_t>(
        reinterpret_cast<const std::uint8_t*>(bytes.data()), bytes.size());
    if (bytes.size() >= 4 && read_u16(data, 0) == kChunkXml && read_u16(data, 2) == 8) {
        return parse_axml(data);
    }
    return parse_plain_xml(bytes);
}

PermissionVector to_permission_vector(const ManifestInfo& info, const PermissionCatalog& catalog) {
    PermissionVector out;
    out.bits.assign(catalog.size(), 0);
    for (const auto& declared : info.declared_permissions) {
        const auto idx = catalog.index_of(unqualified_name(declared));
        if (idx) {
            out.bits[*idx] = 1;
        } else {
            ++out.unknown_count;
        }
    }
    return out;
}

}  // namespace permrank
