#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace fluidlevel::ingest {

struct ParsedUrl {
  std::string host;
  std::string port = "80";
  std::string path = "/";
};

ParsedUrl parse_http_url(const std::string& url);

/// Minimal blocking HTTP/1.1 GET over a TCP socket, exposing the response
/// body as a pull stream. Only identity transfer encoding is supported —
/// enough for camera multipart streams.
class HttpStream {
public:
  explicit HttpStream(const std::string& url, double read_timeout_s);
  ~HttpStream();

  HttpStream(const HttpStream&) = delete;
  HttpStream& operator=(const HttpStream&) = delete;

  int status() const { return status_; }
  /// Header values by lower-cased name; empty string when absent.
  std::string header(const std::string& name) const;

  /// Read more body bytes into buf; returns 0 at end of stream.
  std::size_t read_body(std::uint8_t* buf, std::size_t cap);

private:
  void read_response_head(double timeout_s);

  int fd_ = -1;
  int status_ = 0;
  std::map<std::string, std::string> headers_;
  std::vector<std::uint8_t> pending_;  // body bytes read together with the head
};

}  // namespace fluidlevel::ingest
