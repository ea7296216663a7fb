#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace fluidlevel::ingest {

/// Incremental parser for multipart/x-mixed-replace bodies. Feed it raw
/// chunks in arrival order; it emits each part's headers and exact payload
/// bytes. Boundary lines are matched as "--<boundary>" and, leniently, as
/// "<boundary>" (camera servers disagree on whether the parameter already
/// carries the dashes); an optional CRLF before each delimiter is absorbed.
class MultipartParser {
public:
  struct Part {
    std::map<std::string, std::string> headers;  // lower-case names, trimmed values
    std::vector<std::uint8_t> payload;
  };

  explicit MultipartParser(std::string boundary);

  /// Consume a chunk and return the parts it completed, in order.
  std::vector<Part> feed(const std::uint8_t* data, std::size_t n);

  /// Signal end of input. Throws Errc::truncated_frame when the stream
  /// stopped inside a part (headers or payload under way).
  void finish();

  /// True once the closing "--<boundary>--" delimiter has been seen.
  bool terminated() const { return state_ == State::done; }

private:
  enum class State { seek_first_boundary, headers, body_sized, body_unsized, expect_boundary, done };

  enum class LineKind { data, delimiter, terminator };
  LineKind classify(const std::string& line) const;
  bool take_line(std::string& line);
  void parse_header_line(const std::string& line);
  void begin_body();
  void complete_part(std::vector<Part>& out);

  std::string boundary_;
  std::string buffer_;
  State state_ = State::seek_first_boundary;
  Part current_;
  bool part_open_ = false;
  std::size_t sized_remaining_ = 0;
};

}  // namespace fluidlevel::ingest
