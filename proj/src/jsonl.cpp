#include "bargain/jsonl.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "bargain/errors.hpp"

namespace bargain {

void for_each_jsonl(const std::filesystem::path& path,
                    const std::function<void(std::size_t, const Json&)>& fn) {
  std::ifstream in(path);
  if (!in) {
    throw ValidationError("cannot open file: " + path.string());
  }
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    Json record = Json::parse(line, nullptr, false);
    if (record.is_discarded()) {
      throw ParseError(path.filename().string() + " line " +
                       std::to_string(line_number) + ": malformed JSON");
    }
    fn(line_number, record);
  }
}

std::vector<Json> read_jsonl(const std::filesystem::path& path) {
  std::vector<Json> records;
  for_each_jsonl(path, [&](std::size_t, const Json& j) { records.push_back(j); });
  return records;
}

void write_text_atomic(const std::filesystem::path& path,
                       const std::string& text) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw ValidationError("cannot write file: " + tmp.string());
    }
    out << text;
    if (!out.flush()) {
      throw ValidationError("write failed: " + tmp.string());
    }
  }
  std::filesystem::rename(tmp, path);
}

void write_lines_atomic(const std::filesystem::path& path,
                        const std::vector<std::string>& lines) {
  std::ostringstream buffer;
  for (const auto& line : lines) {
    buffer << line << '\n';
  }
  write_text_atomic(path, buffer.str());
}

}  // namespace bargain
