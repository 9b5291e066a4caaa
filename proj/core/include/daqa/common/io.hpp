#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace daqa {

using Json = nlohmann::json;

/// Reads a whole JSON document; throws LoadError naming the path on failure.
Json read_json(const std::filesystem::path& path);

/// Writes `value` pretty-printed with a trailing newline, creating parent dirs.
void write_json(const std::filesystem::path& path, const Json& value);

/// Reads a JSON-lines file (blank lines skipped).
std::vector<Json> read_jsonl(const std::filesystem::path& path);

/// Writes one compact JSON object per line.
void write_jsonl(const std::filesystem::path& path, const std::vector<Json>& rows);

/// Writes raw bytes / text, creating parent directories.
void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

}  // namespace daqa
