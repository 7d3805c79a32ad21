#include "specfi/text.hpp"

#include <cctype>

#include "specfi/util.hpp"

namespace specfi {

namespace {

// Decodes one UTF-8 codepoint starting at `i`; advances `i`. Malformed bytes
// are passed through as single-byte codepoints.
std::uint32_t decode_utf8(std::string_view s, std::size_t& i) {
    unsigned char c = s[i];
    if (c < 0x80) {
        ++i;
        return c;
    }
    int len = 0;
    std::uint32_t cp = 0;
    if ((c & 0xE0) == 0xC0) {
        len = 2;
        cp = c & 0x1F;
    } else if ((c & 0xF0) == 0xE0) {
        len = 3;
        cp = c & 0x0F;
    } else if ((c & 0xF8) == 0xF0) {
        len = 4;
        cp = c & 0x07;
    } else {
        ++i;
        return c;
    }
    if (i + len > s.size()) {
        ++i;
        return c;
    }
    for (int k = 1; k < len; ++k) {
        unsigned char cc = s[i + k];
        if ((cc & 0xC0) != 0x80) {
            ++i;
            return c;
        }
        cp = (cp << 6) | (cc & 0x3F);
    }
    i += len;
    return cp;
}

void encode_utf8(std::uint32_t cp, std::string& out) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

bool is_alnum_cp(std::uint32_t cp) {
    if (cp < 0x80) return std::isalnum(static_cast<int>(cp)) != 0;
    if (cp == 0xD7 || cp == 0xF7) return false;  // multiplication/division signs
    if (cp >= 0xC0 && cp <= 0x24F) return true;  // Latin-1 supplement + extended A/B
    if (cp >= 0xB2 && cp <= 0xB9 && (cp == 0xB2 || cp == 0xB3 || cp == 0xB9)) return true;  // ²³¹
    return cp > 0x24F;  // other scripts: treat as letters, no case mapping
}

std::uint32_t lower_cp(std::uint32_t cp) {
    if (cp < 0x80) return static_cast<std::uint32_t>(std::tolower(static_cast<int>(cp)));
    if (cp >= 0xC0 && cp <= 0xDE && cp != 0xD7) return cp + 0x20;  // Latin-1 uppercase
    if (cp >= 0x100 && cp <= 0x137 && (cp % 2 == 0)) return cp + 1;  // Latin extended-A pairs
    if (cp >= 0x139 && cp <= 0x148 && (cp % 2 == 1)) return cp + 1;
    if (cp >= 0x14A && cp <= 0x177 && (cp % 2 == 0)) return cp + 1;
    if (cp >= 0x179 && cp <= 0x17E && (cp % 2 == 1)) return cp + 1;
    return cp;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string current;
    std::size_t i = 0;
    while (i < text.size()) {
        std::uint32_t cp = decode_utf8(text, i);
        if (is_alnum_cp(cp)) {
            encode_utf8(lower_cp(cp), current);
        } else if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
}

std::size_t word_count(std::string_view text) {
    std::size_t count = 0;
    bool in_word = false;
    for (unsigned char c : text) {
        bool ws = std::isspace(c) != 0;
        if (!ws && !in_word) ++count;
        in_word = !ws;
    }
    return count;
}

std::vector<std::string> split_sentences(std::string_view text) {
    std::vector<std::string> out;
    std::string current;
    for (std::size_t i = 0; i < text.size(); ++i) {
        char c = text[i];
        current.push_back(c);
        if (c == '.' || c == '!' || c == '?') {
            bool at_end = (i + 1 == text.size());
            bool before_ws = !at_end && std::isspace(static_cast<unsigned char>(text[i + 1]));
            if (at_end || before_ws) {
                std::string s = trim(current);
                if (!s.empty()) out.push_back(std::move(s));
                current.clear();
            }
        }
    }
    std::string s = trim(current);
    if (!s.empty()) out.push_back(std::move(s));
    return out;
}

std::string to_lower(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    std::size_t i = 0;
    while (i < text.size()) {
        std::uint32_t cp = decode_utf8(text, i);
        encode_utf8(lower_cp(cp), out);
    }
    return out;
}

std::string trim(std::string_view s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

bool contains_word_boundary(std::string_view haystack, std::string_view needle) {
    if (needle.empty()) return false;
    auto is_word = [](unsigned char c) { return std::isalnum(c) != 0 || c >= 0x80; };
    std::size_t pos = 0;
    while ((pos = haystack.find(needle, pos)) != std::string_view::npos) {
        bool left_ok = pos == 0 || !is_word(haystack[pos - 1]);
        std::size_t end = pos + needle.size();
        bool right_ok = end == haystack.size() || !is_word(haystack[end]);
        if (left_ok && right_ok) return true;
        ++pos;
    }
    return false;
}

std::string hex64(std::uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[v & 0xF];
        v >>= 4;
    }
    return out;
}

}  // namespace specfi
