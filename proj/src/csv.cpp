#include "peerfx/csv.h"

#include <charconv>
#include <system_error>

#include <zlib.h>

#include "peerfx/error.h"

namespace peerfx {

LineReader::LineReader(const std::filesystem::path& path) : source_(path.string()) {
  gzFile file = gzopen(source_.c_str(), "rb");
  if (file == nullptr) throw IoError("cannot open " + source_);
  gzbuffer(file, 1 << 17);
  handle_ = file;
}

LineReader::~LineReader() {
  if (handle_ != nullptr) gzclose(static_cast<gzFile>(handle_));
}

bool LineReader::next(std::string_view& line) {
  auto* file = static_cast<gzFile>(handle_);
  buffer_.clear();
  char chunk[4096];
  bool any = false;
  while (gzgets(file, chunk, sizeof chunk) != nullptr) {
    any = true;
    buffer_ += chunk;
    if (!buffer_.empty() && buffer_.back() == '\n') break;
  }
  if (!any) {
    int err = Z_OK;
    const char* message = gzerror(file, &err);
    if (err != Z_OK && err != Z_STREAM_END) {
      throw IoError("read error in " + source_ + ": " + message);
    }
    return false;
  }
  ++line_number_;
  while (!buffer_.empty() && (buffer_.back() == '\n' || buffer_.back() == '\r')) buffer_.pop_back();
  line = buffer_;
  return true;
}

void split_fields(std::string_view line, std::vector<std::string_view>& fields) {
  fields.clear();
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

namespace {
std::string_view trim(std::string_view text) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t')) text.remove_suffix(1);
  return text;
}

template <typename T>
bool parse_number(std::string_view text, T& out) {
  text = trim(text);
  if (text.empty()) return false;
  if (text.front() == '+') text.remove_prefix(1);
  const auto result = std::from_chars(text.data(), text.data() + text.size(), out);
  return result.ec == std::errc{} && result.ptr == text.data() + text.size();
}
}  // namespace

bool parse_u64(std::string_view text, std::uint64_t& out) { return parse_number(text, out); }
bool parse_i64(std::string_view text, std::int64_t& out) { return parse_number(text, out); }
bool parse_double(std::string_view text, double& out) { return parse_number(text, out); }

std::vector<std::string> expect_header(LineReader& reader,
                                       const std::vector<std::string>& expected) {
  std::string_view line;
  if (!reader.next(line)) throw ParseError(reader.source(), 1, "missing header");
  std::vector<std::string_view> fields;
  split_fields(line, fields);
  std::vector<std::string> header;
  for (auto f : fields) header.emplace_back(trim(f));
  bool ok = header.size() >= expected.size();
  for (std::size_t i = 0; ok && i < expected.size(); ++i) ok = header[i] == expected[i];
  if (!ok) {
    std::string want;
    for (const auto& e : expected) want += (want.empty() ? "" : ",") + e;
    throw ParseError(reader.source(), 1, "expected header " + want);
  }
  return header;
}

AtomicFile::AtomicFile(std::filesystem::path path) : path_(std::move(path)) {
  temp_ = path_;
  temp_ += ".tmp";
  file_ = std::fopen(temp_.string().c_str(), "wb");
  if (file_ == nullptr) throw IoError("cannot write " + temp_.string());
  std::setvbuf(file_, nullptr, _IOFBF, 1 << 20);
}

AtomicFile::~AtomicFile() {
  if (file_ != nullptr) std::fclose(file_);
  if (!committed_) {
    std::error_code ec;
    std::filesystem::remove(temp_, ec);
  }
}

void AtomicFile::write(std::string_view text) {
  if (std::fwrite(text.data(), 1, text.size(), file_) != text.size()) {
    throw IoError("short write to " + temp_.string());
  }
}

void AtomicFile::commit() {
  if (std::fclose(file_) != 0) {
    file_ = nullptr;
    throw IoError("cannot close " + temp_.string());
  }
  file_ = nullptr;
  std::error_code ec;
  std::filesystem::rename(temp_, path_, ec);
  if (ec) throw IoError("cannot rename onto " + path_.string() + ": " + ec.message());
  committed_ = true;
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  AtomicFile file(path);
  file.write(content);
  file.commit();
}

}  // namespace peerfx
