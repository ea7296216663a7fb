#include "http_client.hpp"

#include <netdb.h>
#include <sys/socket.h>
#include <sys/time.h>
#include <unistd.h>

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <cstring>

#include "fluidlevel/errors.hpp"

namespace fluidlevel::ingest {

namespace {

std::string to_lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

}  // namespace

ParsedUrl parse_http_url(const std::string& url) {
  const std::string lower = to_lower(url);
  if (lower.rfind("https://", 0) == 0)
    raise(Errc::connect_error, "http: TLS streams are not supported, use http://");
  if (lower.rfind("http://", 0) != 0)
    raise(Errc::connect_error, "http: URL must start with http://");

  ParsedUrl parsed;
  std::string rest = url.substr(7);
  const std::size_t slash = rest.find('/');
  std::string authority = slash == std::string::npos ? rest : rest.substr(0, slash);
  if (slash != std::string::npos) parsed.path = rest.substr(slash);
  const std::size_t colon = authority.rfind(':');
  if (colon != std::string::npos) {
    parsed.host = authority.substr(0, colon);
    parsed.port = authority.substr(colon + 1);
  } else {
    parsed.host = authority;
  }
  if (parsed.host.empty()) raise(Errc::connect_error, "http: empty host in URL");
  return parsed;
}

HttpStream::HttpStream(const std::string& url, double read_timeout_s) {
  const ParsedUrl parsed = parse_http_url(url);

  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* results = nullptr;
  const int rc = getaddrinfo(parsed.host.c_str(), parsed.port.c_str(), &hints, &results);
  if (rc != 0)
    raise(Errc::connect_error,
          "http: cannot resolve " + parsed.host + ": " + gai_strerror(rc));

  int last_errno = 0;
  for (addrinfo* ai = results; ai; ai = ai->ai_next) {
    fd_ = socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
    if (fd_ < 0) {
      last_errno = errno;
      continue;
    }
    if (connect(fd_, ai->ai_addr, ai->ai_addrlen) == 0) break;
    last_errno = errno;
    close(fd_);
    fd_ = -1;
  }
  freeaddrinfo(results);
  if (fd_ < 0)
    raise(Errc::connect_error, "http: cannot connect to " + parsed.host + ":" + parsed.port +
                                   ": " + std::strerror(last_errno));

  timeval tv{};
  tv.tv_sec = static_cast<long>(read_timeout_s);
  tv.tv_usec = static_cast<long>((read_timeout_s - tv.tv_sec) * 1e6);
  setsockopt(fd_, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof tv);

  const std::string request = "GET " + parsed.path + " HTTP/1.1\r\nHost: " + parsed.host +
                              "\r\nAccept: multipart/x-mixed-replace, */*\r\n"
                              "Connection: close\r\n\r\n";
  std::size_t sent = 0;
  while (sent < request.size()) {
    const ssize_t n = send(fd_, request.data() + sent, request.size() - sent, MSG_NOSIGNAL);
    if (n <= 0) {
      close(fd_);
      fd_ = -1;
      raise(Errc::connect_error, "http: request send failed");
    }
    sent += static_cast<std::size_t>(n);
  }

  read_response_head(read_timeout_s);
}

HttpStream::~HttpStream() {
  if (fd_ >= 0) close(fd_);
}

void HttpStream::read_response_head(double) {
  std::string head;
  for (;;) {
    const std::size_t mark = head.find("\r\n\r\n");
    if (mark != std::string::npos) {
      pending_.assign(head.begin() + static_cast<std::ptrdiff_t>(mark) + 4, head.end());
      head.resize(mark);
      break;
    }
    if (head.size() > 64 * 1024)
      raise(Errc::protocol_error, "http: response head exceeds 64 KiB");
    char buf[4096];
    const ssize_t n = recv(fd_, buf, sizeof buf, 0);
    if (n <= 0) raise(Errc::connect_error, "http: connection closed in response head");
    head.append(buf, static_cast<std::size_t>(n));
  }

  std::size_t pos = 0;
  const auto next_line = [&]() {
    const std::size_t end = head.find("\r\n", pos);
    std::string line = head.substr(pos, end == std::string::npos ? std::string::npos : end - pos);
    pos = end == std::string::npos ? head.size() : end + 2;
    return line;
  };

  const std::string status_line = next_line();
  // "HTTP/1.1 200 OK"
  const std::size_t sp1 = status_line.find(' ');
  if (status_line.rfind("HTTP/", 0) != 0 || sp1 == std::string::npos)
    raise(Errc::protocol_error, "http: malformed status line '" + status_line + "'");
  status_ = std::atoi(status_line.c_str() + sp1 + 1);
  if (status_ != 200)
    raise(Errc::connect_error, "http: server returned status " + std::to_string(status_));

  while (pos < head.size()) {
    const std::string line = next_line();
    if (line.empty()) break;
    const std::size_t colon = line.find(':');
    if (colon == std::string::npos)
      raise(Errc::protocol_error, "http: malformed header '" + line + "'");
    std::string name = to_lower(line.substr(0, colon));
    std::string value = line.substr(colon + 1);
    const std::size_t vb = value.find_first_not_of(" \t");
    value = vb == std::string::npos ? "" : value.substr(vb);
    headers_[name] = value;
  }

  if (to_lower(header("transfer-encoding")).find("chunked") != std::string::npos)
    raise(Errc::protocol_error, "http: chunked transfer encoding is not supported");
}

std::string HttpStream::header(const std::string& name) const {
  const auto it = headers_.find(to_lower(name));
  return it == headers_.end() ? std::string() : it->second;
}

std::size_t HttpStream::read_body(std::uint8_t* buf, std::size_t cap) {
  if (!pending_.empty()) {
    const std::size_t take = std::min(cap, pending_.size());
    std::memcpy(buf, pending_.data(), take);
    pending_.erase(pending_.begin(), pending_.begin() + static_cast<std::ptrdiff_t>(take));
    return take;
  }
  for (;;) {
    const ssize_t n = recv(fd_, buf, cap, 0);
    if (n > 0) return static_cast<std::size_t>(n);
    if (n == 0) return 0;
    if (errno == EINTR) continue;
    if (errno == EAGAIN || errno == EWOULDBLOCK)
      raise(Errc::connect_error, "http: read timeout on stream body");
    raise(Errc::connect_error, std::string("http: read failed: ") + std::strerror(errno));
  }
}

}  // namespace fluidlevel::ingest
