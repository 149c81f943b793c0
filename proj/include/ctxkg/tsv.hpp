#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace ctxkg {

/// Raised when an input file is missing or malformed. Carries the path so the
/// CLI can name it.
class InputError : public std::runtime_error {
 public:
  InputError(const std::filesystem::path& path, const std::string& what)
      : std::runtime_error(path.string() + ": " + what), path_(path) {}
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

/// Tab-separated rows of a file, skipping blank lines and lines starting with '#'.
std::vector<std::vector<std::string>> read_tsv(const std::filesystem::path& path);

std::vector<std::string> split_tabs(std::string_view line);

double parse_double(std::string_view s, const std::filesystem::path& where);
long long parse_int(std::string_view s, const std::filesystem::path& where);

/// Shortest decimal form that round-trips exactly.
std::string format_double(double v);

void write_text_file(const std::filesystem::path& path, const std::string& content);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace ctxkg
