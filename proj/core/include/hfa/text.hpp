#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace hfa::text {

/// Decodes UTF-8 into code points. Throws PositionedError(NonUtf8Input) at the
/// offset of the first byte of an invalid sequence (overlongs, surrogates and
/// truncated sequences included).
std::u32string decode_utf8(std::string_view bytes);

std::string encode_utf8(std::u32string_view code_points);
void append_utf8(std::string& out, char32_t cp);

std::string to_lower_ascii(std::string_view s);
std::string_view trim(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);
std::string join(const std::vector<std::string>& parts, std::string_view sep);
bool iequals(std::string_view a, std::string_view b);

/// Word tokens are maximal runs of ASCII letters/digits or non-ASCII bytes
/// (so accented letters stay inside words). Offsets index the input.
struct Token {
    std::string text;
    std::size_t begin = 0;
    std::size_t end = 0;
};
std::vector<Token> word_tokens(std::string_view s);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

/// Fixed-point rendering used by every report ("%.Nf").
std::string fixed(double value, int decimals);

}  // namespace hfa::text
