#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace lteval {

using json = nlohmann::json;

// Strings.
std::string trim(std::string_view s);
std::string to_lower(std::string_view s);
std::vector<std::string> split_lines(std::string_view s);
bool iequals(std::string_view a, std::string_view b);

/// Fixed-point formatting, locale independent. Used for every number that
/// ends up in an output file so that reruns are byte-identical.
std::string format_fixed(double value, int precision);

/// Lowercase hex SHA-256 of `data`.
std::string sha256_hex(std::string_view data);

/// Stable fingerprint of a JSON value: SHA-256 over its canonical dump
/// (object keys sorted), truncated to 16 hex chars.
std::string fingerprint(const json& value);

// Files.
std::string read_file(const std::filesystem::path& path);

/// Writes to a sibling temp file and renames it over `path`.
void atomic_write_file(const std::filesystem::path& path, std::string_view content);

/// Calls `fn(line_number, record)` for each non-blank line. Line numbers are
/// 1-based. Throws Error(MalformedRecord) with the line number on bad JSON.
void for_each_jsonl(const std::filesystem::path& path,
                    const std::function<void(std::size_t, const json&)>& fn);

std::string to_jsonl(const std::vector<json>& records);

/// Runs `fn(i)` for i in [0, n) on up to `jobs` threads. Exceptions escaping
/// `fn` are rethrown on the calling thread after all workers stop.
void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn);

/// Warning sink. Defaults to stderr; tests swap it to capture output.
using WarningSink = std::function<void(const std::string&)>;
void set_warning_sink(WarningSink sink);
void warn(const std::string& message);

}  // namespace lteval
