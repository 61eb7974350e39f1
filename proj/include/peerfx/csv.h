#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace peerfx {

// Line reader over plain or gzip-compressed text (zlib reads both).
class LineReader {
 public:
  explicit LineReader(const std::filesystem::path& path);
  ~LineReader();
  LineReader(const LineReader&) = delete;
  LineReader& operator=(const LineReader&) = delete;

  // Next line without its terminator ("\n" or "\r\n"). False at EOF.
  bool next(std::string_view& line);
  std::size_t line_number() const noexcept { return line_number_; }
  const std::string& source() const noexcept { return source_; }

 private:
  void* handle_ = nullptr;
  std::string source_;
  std::string buffer_;
  std::size_t line_number_ = 0;
};

void split_fields(std::string_view line, std::vector<std::string_view>& fields);

// Strict field parsers; false on trailing garbage or overflow.
bool parse_u64(std::string_view text, std::uint64_t& out);
bool parse_i64(std::string_view text, std::int64_t& out);
bool parse_double(std::string_view text, double& out);

// Reads the header line and verifies it starts with the expected columns.
// Returns the full list of header fields.
std::vector<std::string> expect_header(LineReader& reader,
                                       const std::vector<std::string>& expected);

// Writes to `<path>.tmp` and renames onto `path` on commit(). An uncommitted
// file is removed on destruction, so a failed run never leaves a partial
// output at the final path.
class AtomicFile {
 public:
  explicit AtomicFile(std::filesystem::path path);
  ~AtomicFile();
  AtomicFile(const AtomicFile&) = delete;
  AtomicFile& operator=(const AtomicFile&) = delete;

  std::FILE* handle() noexcept { return file_; }
  void write(std::string_view text);
  void commit();

 private:
  std::filesystem::path path_;
  std::filesystem::path temp_;
  std::FILE* file_ = nullptr;
  bool committed_ = false;
};

void write_file_atomic(const std::filesystem::path& path, std::string_view content);

}  // namespace peerfx
