#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

namespace bargain {

using Json = nlohmann::json;

// Calls fn(line_number, record) for every non-blank line. Line numbers are
// 1-based; malformed JSON raises ParseError naming the line.
void for_each_jsonl(const std::filesystem::path& path,
                    const std::function<void(std::size_t, const Json&)>& fn);

std::vector<Json> read_jsonl(const std::filesystem::path& path);

// Write-then-rename so readers never observe a half-written file.
void write_lines_atomic(const std::filesystem::path& path,
                        const std::vector<std::string>& lines);

void write_text_atomic(const std::filesystem::path& path,
                       const std::string& text);

}  // namespace bargain
