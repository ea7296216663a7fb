#include "fluidlevel/multipart.hpp"

#include <algorithm>
#include <cctype>

#include "fluidlevel/errors.hpp"

namespace fluidlevel::ingest {

namespace {

constexpr std::size_t kMaxHeaderBlock = 64 * 1024;
constexpr std::size_t kMaxPartSize = 64 * 1024 * 1024;
constexpr std::size_t kMaxPreamble = 1024 * 1024;

std::string to_lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

}  // namespace

MultipartParser::MultipartParser(std::string boundary) : boundary_(std::move(boundary)) {
  if (boundary_.empty())
    raise(Errc::protocol_error, "multipart: empty boundary");
}

MultipartParser::LineKind MultipartParser::classify(const std::string& line) const {
  const std::string dashed = "--" + boundary_;
  for (const std::string& delim : {dashed, boundary_}) {
    if (line.size() < delim.size() || line.compare(0, delim.size(), delim) != 0) continue;
    const std::string rest = trim(line.substr(delim.size()));
    if (rest.empty()) return LineKind::delimiter;
    if (rest == "--") return LineKind::terminator;
  }
  return LineKind::data;
}

bool MultipartParser::take_line(std::string& line) {
  const std::size_t pos = buffer_.find('\n');
  if (pos == std::string::npos) return false;
  line = buffer_.substr(0, pos);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  buffer_.erase(0, pos + 1);
  return true;
}

void MultipartParser::parse_header_line(const std::string& line) {
  const std::size_t colon = line.find(':');
  if (colon == std::string::npos)
    raise(Errc::protocol_error, "multipart: malformed part header '" + line + "'");
  current_.headers[to_lower(trim(line.substr(0, colon)))] = trim(line.substr(colon + 1));
}

void MultipartParser::begin_body() {
  const auto it = current_.headers.find("content-length");
  if (it != current_.headers.end()) {
    const std::string& v = it->second;
    if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos)
      raise(Errc::protocol_error, "multipart: bad Content-Length '" + v + "'");
    sized_remaining_ = std::stoull(v);
    if (sized_remaining_ > kMaxPartSize)
      raise(Errc::protocol_error, "multipart: part exceeds size cap");
    state_ = State::body_sized;
  } else {
    state_ = State::body_unsized;
  }
}

void MultipartParser::complete_part(std::vector<Part>& out) {
  out.push_back(std::move(current_));
  current_ = Part{};
  part_open_ = false;
}

std::vector<MultipartParser::Part> MultipartParser::feed(const std::uint8_t* data,
                                                         std::size_t n) {
  buffer_.append(reinterpret_cast<const char*>(data), n);
  std::vector<Part> out;

  for (;;) {
    switch (state_) {
      case State::done:
        buffer_.clear();  // epilogue is ignored
        return out;

      case State::seek_first_boundary: {
        std::string line;
        if (!take_line(line)) {
          if (buffer_.size() > kMaxPreamble)
            raise(Errc::protocol_error, "multipart: no boundary in preamble");
          return out;
        }
        const LineKind kind = classify(line);
        if (kind == LineKind::terminator) state_ = State::done;
        else if (kind == LineKind::delimiter) {
          state_ = State::headers;
          part_open_ = true;
        }
        // anything else is preamble, dropped
        break;
      }

      case State::headers: {
        std::string line;
        if (!take_line(line)) {
          if (buffer_.size() > kMaxHeaderBlock)
            raise(Errc::protocol_error, "multipart: unterminated part headers");
          return out;
        }
        part_open_ = true;
        if (line.empty()) {
          begin_body();
        } else {
          parse_header_line(line);
        }
        break;
      }

      case State::body_sized: {
        const std::size_t take = std::min(sized_remaining_, buffer_.size());
        current_.payload.insert(current_.payload.end(), buffer_.begin(),
                                buffer_.begin() + static_cast<std::ptrdiff_t>(take));
        buffer_.erase(0, take);
        sized_remaining_ -= take;
        if (sized_remaining_ > 0) return out;
        complete_part(out);
        state_ = State::expect_boundary;
        break;
      }

      case State::body_unsized: {
        // Scan for a newline followed by a delimiter; the preceding CRLF (or
        // bare LF) belongs to the framing, not the payload.
        const std::string dashed = "--" + boundary_;
        std::size_t scan = 0;
        bool found = false;
        std::size_t payload_end = 0, line_start = 0;
        while (true) {
          const std::size_t nl = buffer_.find('\n', scan);
          if (nl == std::string::npos) break;
          const std::size_t after = nl + 1;
          const std::size_t room = buffer_.size() - after;
          const bool could_match = [&] {
            for (const std::string& delim : {dashed, boundary_}) {
              const std::size_t cmp = std::min(room, delim.size());
              if (buffer_.compare(after, cmp, delim, 0, cmp) == 0) return true;
            }
            return false;
          }();
          if (!could_match) {
            scan = after;
            continue;
          }
          // Possible delimiter: wait for the full line before deciding.
          const std::size_t line_end = buffer_.find('\n', after);
          if (line_end == std::string::npos) return out;  // need more input
          std::string line = buffer_.substr(after, line_end - after);
          if (!line.empty() && line.back() == '\r') line.pop_back();
          const LineKind kind = classify(line);
          if (kind == LineKind::data) {
            scan = after;
            continue;
          }
          payload_end = (nl > 0 && buffer_[nl - 1] == '\r') ? nl - 1 : nl;
          line_start = line_end + 1;
          current_.payload.insert(current_.payload.end(), buffer_.begin(),
                                  buffer_.begin() + static_cast<std::ptrdiff_t>(payload_end));
          buffer_.erase(0, line_start);
          complete_part(out);
          state_ = (kind == LineKind::terminator) ? State::done : State::headers;
          if (state_ == State::headers) part_open_ = true;
          found = true;
          break;
        }
        if (found) break;
        if (buffer_.size() > kMaxPartSize)
          raise(Errc::protocol_error, "multipart: part exceeds size cap");
        return out;
      }

      case State::expect_boundary: {
        std::string line;
        if (!take_line(line)) return out;
        if (line.empty()) break;  // CRLF that closed the sized payload
        const LineKind kind = classify(line);
        if (kind == LineKind::data)
          raise(Errc::protocol_error,
                "multipart: expected boundary after sized payload, got '" + line + "'");
        if (kind == LineKind::terminator) {
          state_ = State::done;
        } else {
          state_ = State::headers;
          part_open_ = true;
        }
        break;
      }
    }
  }
}

void MultipartParser::finish() {
  if (state_ == State::body_sized || state_ == State::body_unsized ||
      (state_ == State::headers && part_open_))
    raise(Errc::truncated_frame, "multipart: stream ended inside a part");
}

}  // namespace fluidlevel::ingest
