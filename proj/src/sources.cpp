#include <algorithm>
#include <cctype>
#include <chrono>
#include <deque>
#include <filesystem>
#include <fstream>

#include "fluidlevel/errors.hpp"
#include "fluidlevel/ingest.hpp"
#include "fluidlevel/multipart.hpp"
#include "http_client.hpp"

namespace fluidlevel::ingest {

namespace fs = std::filesystem;

std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(Errc::io_error, "read_file: cannot open '" + path + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return bytes;
}

namespace {

// Shell-style match with '*' and '?'.
bool glob_match(const std::string& pattern, const std::string& name) {
  std::size_t p = 0, n = 0;
  std::size_t star = std::string::npos, star_n = 0;
  while (n < name.size()) {
    if (p < pattern.size() && (pattern[p] == '?' || pattern[p] == name[n])) {
      ++p;
      ++n;
    } else if (p < pattern.size() && pattern[p] == '*') {
      star = p++;
      star_n = n;
    } else if (star != std::string::npos) {
      p = star + 1;
      n = ++star_n;
    } else {
      return false;
    }
  }
  while (p < pattern.size() && pattern[p] == '*') ++p;
  return p == pattern.size();
}

class DirectorySource final : public FrameSource {
public:
  DirectorySource(const std::string& path, DirectorySourceOptions options)
      : options_(std::move(options)) {
    if (!fs::exists(path) || !fs::is_directory(path))
      raise(Errc::bad_config, "directory_source: '" + path + "' is not a directory");
    for (const auto& entry : fs::directory_iterator(path)) {
      if (!entry.is_regular_file()) continue;
      if (glob_match(options_.pattern, entry.path().filename().string()))
        files_.push_back(entry.path().string());
    }
    if (files_.empty())
      raise(Errc::no_matches,
            "directory_source: no files in '" + path + "' match '" + options_.pattern + "'");
    std::sort(files_.begin(), files_.end());
  }

  std::optional<Frame> next() override {
    while (index_ < files_.size()) {
      const std::string& path = files_[index_];
      const double stamp = static_cast<double>(index_) * options_.frame_interval_s;
      ++index_;
      try {
        Frame frame = decode_image(read_file(path));
        frame.timestamp = stamp;
        return frame;
      } catch (const Error& e) {
        if (options_.strict)
          raise(e.code(), path + ": " + e.what());
        if (options_.on_skip) options_.on_skip(path, e.what());
      }
    }
    return std::nullopt;
  }

private:
  DirectorySourceOptions options_;
  std::vector<std::string> files_;
  std::size_t index_ = 0;
};

class SingleFileSource final : public FrameSource {
public:
  explicit SingleFileSource(const std::string& path) : path_(path) {
    if (!fs::exists(path_)) raise(Errc::bad_config, "file source: '" + path_ + "' not found");
  }

  std::optional<Frame> next() override {
    if (done_) return std::nullopt;
    done_ = true;
    Frame frame = decode_image(read_file(path_));
    frame.timestamp = 0.0;
    return frame;
  }

private:
  std::string path_;
  bool done_ = false;
};

std::string content_type_of(const std::string& header_value) {
  const std::size_t semi = header_value.find(';');
  std::string type = header_value.substr(0, semi);
  std::transform(type.begin(), type.end(), type.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  const std::size_t b = type.find_first_not_of(" \t");
  const std::size_t e = type.find_last_not_of(" \t");
  return b == std::string::npos ? "" : type.substr(b, e - b + 1);
}

std::string boundary_of(const std::string& header_value) {
  std::size_t pos = header_value.find(';');
  while (pos != std::string::npos) {
    std::size_t start = pos + 1;
    pos = header_value.find(';', start);
    std::string param = header_value.substr(
        start, pos == std::string::npos ? std::string::npos : pos - start);
    const std::size_t eq = param.find('=');
    if (eq == std::string::npos) continue;
    std::string name = param.substr(0, eq);
    std::string value = param.substr(eq + 1);
    const auto trim = [](std::string s) {
      const std::size_t b = s.find_first_not_of(" \t");
      const std::size_t e = s.find_last_not_of(" \t");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    name = trim(name);
    std::transform(name.begin(), name.end(), name.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (name != "boundary") continue;
    value = trim(value);
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"')
      value = value.substr(1, value.size() - 2);
    return value;
  }
  return "";
}

class MjpegSource final : public FrameSource {
public:
  MjpegSource(const std::string& url, const MjpegOptions& options)
      : stream_(url, options.read_timeout_s),
        parser_([&] {
          const std::string content_type = stream_.header("content-type");
          if (content_type_of(content_type) != "multipart/x-mixed-replace")
            raise(Errc::not_multipart,
                  "mjpeg: content type '" + content_type_of(content_type) +
                      "' is not multipart/x-mixed-replace");
          const std::string boundary = boundary_of(content_type);
          if (boundary.empty())
            raise(Errc::protocol_error, "mjpeg: content type lacks a boundary parameter");
          return boundary;
        }()),
        start_(std::chrono::steady_clock::now()) {}

  std::optional<Frame> next() override {
    for (;;) {
      if (!queue_.empty()) {
        Frame frame = std::move(queue_.front());
        queue_.pop_front();
        return frame;
      }
      if (eof_) {
        parser_.finish();  // throws truncated_frame when a part was open
        return std::nullopt;
      }
      std::uint8_t buf[16384];
      const std::size_t n = stream_.read_body(buf, sizeof buf);
      if (n == 0) {
        eof_ = true;
        continue;
      }
      for (auto& part : parser_.feed(buf, n)) {
        const auto it = part.headers.find("content-type");
        if (it == part.headers.end() || content_type_of(it->second) != "image/jpeg")
          raise(Errc::protocol_error, "mjpeg: part is not image/jpeg");
        Frame frame = decode_image(part.payload, ImageFormat::jpeg);
        frame.timestamp =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        queue_.push_back(std::move(frame));
      }
    }
  }

private:
  HttpStream stream_;
  MultipartParser parser_;
  std::chrono::steady_clock::time_point start_;
  std::deque<Frame> queue_;
  bool eof_ = false;
};

}  // namespace

std::unique_ptr<FrameSource> directory_source(const std::string& path,
                                              const DirectorySourceOptions& options) {
  return std::make_unique<DirectorySource>(path, options);
}

std::unique_ptr<FrameSource> single_file_source(const std::string& path) {
  return std::make_unique<SingleFileSource>(path);
}

std::unique_ptr<FrameSource> mjpeg_source(const std::string& url, const MjpegOptions& options) {
  return std::make_unique<MjpegSource>(url, options);
}

std::unique_ptr<FrameSource> open_source(const std::string& spec,
                                         const DirectorySourceOptions& dir_options,
                                         const MjpegOptions& mjpeg_options) {
  if (spec.rfind("dir:", 0) == 0) return directory_source(spec.substr(4), dir_options);
  if (spec.rfind("file:", 0) == 0) return single_file_source(spec.substr(5));
  if (spec.rfind("http://", 0) == 0 || spec.rfind("https://", 0) == 0)
    return mjpeg_source(spec, mjpeg_options);
  raise(Errc::bad_config,
        "open_source: spec must be dir:<path>, file:<path> or an http(s) URL");
}

}  // namespace fluidlevel::ingest
