#include "fixture_server.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cstring>
#include <stdexcept>

namespace test_util {

FixtureServer::FixtureServer(std::vector<std::uint8_t> response, std::size_t chunk_size) {
  listen_fd_ = socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) throw std::runtime_error("fixture server: socket failed");
  const int one = 1;
  setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);

  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = 0;
  if (bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0)
    throw std::runtime_error("fixture server: bind failed");
  socklen_t len = sizeof addr;
  getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
  if (listen(listen_fd_, 1) != 0) throw std::runtime_error("fixture server: listen failed");

  thread_ = std::thread([fd = listen_fd_, bytes = std::move(response), chunk_size] {
    const int client = accept(fd, nullptr, nullptr);
    if (client < 0) return;
    // Drain the request head; the fixture serves one canned response anyway.
    char req[4096];
    std::size_t got = 0;
    while (got < sizeof req) {
      const ssize_t n = recv(client, req + got, sizeof req - got, 0);
      if (n <= 0) break;
      got += static_cast<std::size_t>(n);
      if (std::string(req, got).find("\r\n\r\n") != std::string::npos) break;
    }
    std::size_t sent = 0;
    while (sent < bytes.size()) {
      const std::size_t take = std::min(chunk_size, bytes.size() - sent);
      const ssize_t n = send(client, bytes.data() + sent, take, MSG_NOSIGNAL);
      if (n <= 0) break;
      sent += static_cast<std::size_t>(n);
    }
    shutdown(client, SHUT_RDWR);
    close(client);
  });
}

FixtureServer::~FixtureServer() {
  if (thread_.joinable()) thread_.join();
  if (listen_fd_ >= 0) close(listen_fd_);
}

std::string FixtureServer::url(const std::string& path) const {
  return "http://127.0.0.1:" + std::to_string(port_) + path;
}

std::vector<std::uint8_t> mjpeg_response_head(const std::string& boundary,
                                              const std::string& content_type) {
  std::string head = "HTTP/1.1 200 OK\r\n";
  head += "Server: fixture\r\n";
  head += "Content-Type: " + content_type;
  if (!boundary.empty()) head += "; boundary=" + boundary;
  head += "\r\nConnection: close\r\n\r\n";
  return {head.begin(), head.end()};
}

std::vector<std::uint8_t> mjpeg_body(const std::string& boundary,
                                     const std::vector<MjpegPartSpec>& parts, bool terminate) {
  std::vector<std::uint8_t> body;
  const auto append = [&body](const std::string& s) {
    body.insert(body.end(), s.begin(), s.end());
  };
  for (const auto& part : parts) {
    append("--" + boundary + "\r\n");
    append("Content-Type: image/jpeg\r\n");
    if (part.with_content_length)
      append("Content-Length: " + std::to_string(part.payload.size()) + "\r\n");
    append("\r\n");
    body.insert(body.end(), part.payload.begin(), part.payload.end());
    append("\r\n");
  }
  if (terminate) append("--" + boundary + "--\r\n");
  return body;
}

}  // namespace test_util
