#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace labeldec {

using LabelId = std::uint32_t;

// Reserved label spellings shared across the toolkit.
inline constexpr std::string_view kEosLabel = "<eos>";
inline constexpr std::string_view kUnkLabel = "<unk>";
inline constexpr std::string_view kEowSymbol = "</w>";
inline constexpr std::string_view kWhitespaceLabel = "<sp>";
inline constexpr std::string_view kUnkWord = "<UNK>";
inline constexpr char kWordEndMarker = '#';
inline constexpr char kBpeJoin = '_';

// LM token spellings (ARPA conventions).
inline constexpr std::string_view kSentBegin = "<s>";
inline constexpr std::string_view kSentEnd = "</s>";

// Input files that do not meet their format contract.
class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Arguments or configurations that violate an operation's preconditions.
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline std::vector<std::string> split_ws(std::string_view s)
{
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
        std::size_t j = i;
        while (j < s.size() && s[j] != ' ' && s[j] != '\t') ++j;
        if (j > i) out.emplace_back(s.substr(i, j - i));
        i = j;
    }
    return out;
}

inline std::string join(const std::vector<std::string>& parts, std::string_view sep = " ")
{
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out += sep;
        out += parts[i];
    }
    return out;
}

// Splits on UTF-8 code point boundaries; malformed bytes fall back to single bytes.
inline std::vector<std::string> utf8_chars(std::string_view s)
{
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < s.size()) {
        const auto c = static_cast<unsigned char>(s[i]);
        std::size_t n = 1;
        if ((c >> 5) == 0x6) n = 2;
        else if ((c >> 4) == 0xE) n = 3;
        else if ((c >> 3) == 0x1E) n = 4;
        if (i + n > s.size()) n = 1;
        out.emplace_back(s.substr(i, n));
        i += n;
    }
    return out;
}

// "$1", "$2", ...  ($ followed by digits only)
inline bool is_disambig_symbol(std::string_view s)
{
    if (s.size() < 2 || s[0] != '$') return false;
    for (std::size_t i = 1; i < s.size(); ++i)
        if (s[i] < '0' || s[i] > '9') return false;
    return true;
}

inline bool has_word_end_marker(std::string_view s)
{
    return !s.empty() && s.back() == kWordEndMarker;
}

inline std::uint64_t fnv1a64(std::string_view data)
{
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace labeldec
