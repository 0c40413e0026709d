#pragma once

#include <charconv>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace tabqa {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// UTF-8
//
// All text in the toolkit is UTF-8. Decoding is lenient: an invalid byte is
// consumed as a single replacement codepoint so that byte offsets always
// advance and no input can wedge a scanner.

inline constexpr uint32_t kReplacementCp = 0xFFFD;

// Decodes the codepoint starting at s[i] and advances i past it.
inline uint32_t utf8_next(std::string_view s, size_t& i) {
    const auto b0 = static_cast<unsigned char>(s[i]);
    if (b0 < 0x80) {
        ++i;
        return b0;
    }
    int len = 0;
    uint32_t cp = 0;
    if ((b0 & 0xE0) == 0xC0) {
        len = 2;
        cp = b0 & 0x1Fu;
    } else if ((b0 & 0xF0) == 0xE0) {
        len = 3;
        cp = b0 & 0x0Fu;
    } else if ((b0 & 0xF8) == 0xF0) {
        len = 4;
        cp = b0 & 0x07u;
    } else {
        ++i;
        return kReplacementCp;
    }
    if (i + len > s.size()) {
        ++i;
        return kReplacementCp;
    }
    for (int k = 1; k < len; ++k) {
        const auto b = static_cast<unsigned char>(s[i + k]);
        if ((b & 0xC0) != 0x80) {
            ++i;
            return kReplacementCp;
        }
        cp = (cp << 6) | (b & 0x3Fu);
    }
    i += len;
    return cp;
}

inline void utf8_append(std::string& out, uint32_t cp) {
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

inline std::vector<uint32_t> utf8_codepoints(std::string_view s) {
    std::vector<uint32_t> cps;
    cps.reserve(s.size());
    for (size_t i = 0; i < s.size();) cps.push_back(utf8_next(s, i));
    return cps;
}

inline size_t utf8_length(std::string_view s) {
    size_t n = 0;
    for (size_t i = 0; i < s.size(); ++n) utf8_next(s, i);
    return n;
}

// First n codepoints of s, as bytes.
inline std::string utf8_prefix(std::string_view s, size_t n) {
    size_t i = 0;
    for (size_t k = 0; k < n && i < s.size(); ++k) utf8_next(s, i);
    return std::string(s.substr(0, i));
}

// ---------------------------------------------------------------------------
// Decimal digits across scripts
//
// Each supported script contributes one contiguous block of ten codepoints.
// A token mixes scripts when its digits come from more than one block; such
// tokens are never treated as numbers.

inline constexpr uint32_t kDigitBlocks[] = {
    0x0030,  // ASCII
    0x0660,  // Arabic-Indic
    0x06F0,  // Extended Arabic-Indic
    0x0966,  // Devanagari
    0x09E6,  // Bengali
    0x0A66,  // Gurmukhi
    0x0AE6,  // Gujarati
    0x0B66,  // Oriya
    0x0BE6,  // Tamil
    0x0C66,  // Telugu
    0x0CE6,  // Kannada
    0x0D66,  // Malayalam
    0x0E50,  // Thai
    0x0ED0,  // Lao
    0x1040,  // Myanmar
    0x17E0,  // Khmer
};

// Zero codepoint of the block cp belongs to, or 0 when cp is not a digit.
inline uint32_t digit_block(uint32_t cp) {
    for (uint32_t zero : kDigitBlocks)
        if (cp >= zero && cp < zero + 10) return zero;
    return 0;
}

// 0..9, or -1 when cp is not a decimal digit of a supported script.
inline int digit_value(uint32_t cp) {
    const uint32_t zero = digit_block(cp);
    return zero ? static_cast<int>(cp - zero) : -1;
}

// ---------------------------------------------------------------------------
// Whitespace

inline bool is_space(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

inline std::string_view trim(std::string_view s) {
    size_t b = 0, e = s.size();
    while (b < e && is_space(s[b])) ++b;
    while (e > b && is_space(s[e - 1])) --e;
    return s.substr(b, e - b);
}

// Trim plus collapse of internal whitespace runs to one space. Applied when
// matching headers and when comparing cells in metrics, never to stored text.
inline std::string collapse_ws(std::string_view s) {
    s = trim(s);
    std::string out;
    out.reserve(s.size());
    bool in_run = false;
    for (char c : s) {
        if (is_space(c)) {
            in_run = true;
            continue;
        }
        if (in_run && !out.empty()) out.push_back(' ');
        in_run = false;
        out.push_back(c);
    }
    return out;
}

inline bool is_ascii_alnum(char c) {
    return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}

inline char ascii_lower(char c) {
    return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
}

inline std::string ascii_lower(std::string_view s) {
    std::string out(s);
    for (char& c : out) c = ascii_lower(c);
    return out;
}

inline bool ascii_iequals(std::string_view a, std::string_view b) {
    if (a.size() != b.size()) return false;
    for (size_t i = 0; i < a.size(); ++i)
        if (ascii_lower(a[i]) != ascii_lower(b[i])) return false;
    return true;
}

// ---------------------------------------------------------------------------
// Numbers
//
// parse_number accepts an optional ASCII sign, digits of exactly one script,
// and at most one '.' fraction. Grouping marks, exponents and mixed-script
// digit runs all fail the parse, which demotes the token to text.

struct ParsedNumber {
    double value = 0.0;
    bool integral = true;
};

inline std::optional<ParsedNumber> parse_number(std::string_view raw) {
    std::string_view s = trim(raw);
    if (s.empty()) return std::nullopt;
    size_t i = 0;
    bool neg = false;
    if (s[0] == '+' || s[0] == '-') {
        neg = s[0] == '-';
        i = 1;
    }
    std::string ascii;
    ascii.reserve(s.size());
    uint32_t block = 0;
    bool seen_digit = false, seen_dot = false;
    while (i < s.size()) {
        if (s[i] == '.') {
            if (seen_dot) return std::nullopt;
            seen_dot = true;
            ascii.push_back('.');
            ++i;
            continue;
        }
        const uint32_t cp = utf8_next(s, i);
        const int v = digit_value(cp);
        if (v < 0) return std::nullopt;
        const uint32_t b = digit_block(cp);
        if (block == 0)
            block = b;
        else if (b != block)
            return std::nullopt;
        ascii.push_back(static_cast<char>('0' + v));
        seen_digit = true;
    }
    if (!seen_digit) return std::nullopt;
    if (seen_dot && (ascii.front() == '.' || ascii.back() == '.')) return std::nullopt;
    double value = 0.0;
    const auto* first = ascii.data();
    const auto* last = ascii.data() + ascii.size();
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last) return std::nullopt;
    return ParsedNumber{neg ? -value : value, !seen_dot};
}

// Shortest round-trip rendering, ASCII digits.
inline std::string format_number(double v, bool integral) {
    char buf[64];
    if (integral && v >= -9.2e18 && v <= 9.2e18 &&
        v == static_cast<double>(static_cast<long long>(v))) {
        const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, static_cast<long long>(v));
        return std::string(buf, ptr);
    }
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

// Fixed two decimal places, then trailing zeros (and a bare point) trimmed.
// Used for averages so both sides of a comparison can share one rendering.
inline std::string format_decimal2(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, 2);
    std::string s(buf, ptr);
    if (s.find('.') != std::string::npos) {
        while (s.back() == '0') s.pop_back();
        if (s.back() == '.') s.pop_back();
    }
    if (s == "-0") s = "0";
    return s;
}

// ---------------------------------------------------------------------------
// Hashing (FNV-1a, 64-bit). Used for record ids, store checksums and the
// reproducibility manifest; stability across platforms matters more than
// collision resistance here.

inline constexpr uint64_t kFnvOffset = 0xcbf29ce484222325ull;
inline constexpr uint64_t kFnvPrime = 0x100000001b3ull;

inline uint64_t fnv1a(std::string_view data, uint64_t h = kFnvOffset) {
    for (unsigned char c : data) {
        h ^= c;
        h *= kFnvPrime;
    }
    return h;
}

inline uint64_t fnv1a_u64(uint64_t v, uint64_t h = kFnvOffset) {
    for (int k = 0; k < 8; ++k) {
        h ^= (v >> (k * 8)) & 0xFF;
        h *= kFnvPrime;
    }
    return h;
}

inline std::string hex64(uint64_t v) {
    static const char* d = "0123456789abcdef";
    std::string s(16, '0');
    for (int k = 15; k >= 0; --k) {
        s[static_cast<size_t>(k)] = d[v & 0xF];
        v >>= 4;
    }
    return s;
}

// ---------------------------------------------------------------------------
// Deterministic RNG
//
// splitmix64 with Lemire's bounded rejection. The standard distributions are
// implementation-defined, so every sampled choice in the toolkit goes through
// this generator to keep corpora byte-identical across compilers.

struct Rng {
    uint64_t state = 0x9E3779B97F4A7C15ull;

    explicit Rng(uint64_t seed = 0) : state(seed + 0x9E3779B97F4A7C15ull) {}

    uint64_t next() {
        uint64_t z = (state += 0x9E3779B97F4A7C15ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    // Uniform in [0, n). n must be positive.
    uint64_t bounded(uint64_t n) {
        const uint64_t threshold = (0 - n) % n;
        for (;;) {
            const uint64_t r = next();
            if (r >= threshold) return r % n;
        }
    }

    size_t index(size_t n) { return static_cast<size_t>(bounded(n)); }

    bool chance(double p) {
        if (p <= 0.0) return false;
        if (p >= 1.0) return true;
        return static_cast<double>(next() >> 11) * 0x1.0p-53 < p;
    }
};

// Stable seed derivation for per-work-item generators.
inline uint64_t derive_seed(uint64_t seed, std::string_view a, std::string_view b = {},
                            uint64_t round = 0) {
    uint64_t h = fnv1a_u64(seed);
    h = fnv1a(a, h);
    h = fnv1a("\x1f", h);
    h = fnv1a(b, h);
    h = fnv1a_u64(round, h);
    return h;
}

}  // namespace tabqa
