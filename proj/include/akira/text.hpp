#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace akira {

std::string_view trim(std::string_view s) noexcept;
std::string to_lower(std::string_view s);
/// Splits on '\n', dropping a trailing '\r' per line. A final newline does not add an empty line.
std::vector<std::string_view> split_lines(std::string_view text);
std::vector<std::string_view> split(std::string_view text, char sep);
bool contains_icase(std::string_view haystack, std::string_view needle);
std::string replace_all(std::string text, std::string_view from, std::string_view to);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

/// Non-blank, non-comment lines.
std::size_t count_loc(std::string_view code);
/// Levenshtein distance over lines.
std::size_t line_edit_distance(std::string_view a, std::string_view b);

}  // namespace akira
