#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <sys/types.h>
#include <vector>

#include "zsdbench/geometry.hpp"

namespace zsd {

// Newline-delimited JSON spoken with an adapter child process over its
// standard input and output.
//
//   -> {"id":1,"image":"a.jpg","prompt":"...","box_threshold":0.35,"text_threshold":0.25,"seed":7}
//   <- {"id":0,"ready":true}                      (once, before any response)
//   <- {"id":1,"detections":[{"bbox":[x,y,w,h],"score":0.9,"phrase":"..."}]}
//   <- {"id":2,"detections":[],"error":"image not found"}
//
// Request ids start at 1; id 0 is reserved for the handshake.
struct AdapterRequest {
  std::int64_t id = 0;
  std::int64_t image_id = 0;  // not sent; names the image in timeout errors
  std::string image;
  std::string prompt;
  double box_threshold = 0.0;
  double text_threshold = 0.0;
  std::uint64_t seed = 0;
};

struct WireDetection {
  BoundingBox bbox;
  double score = 0.0;
  std::string phrase;
};

struct AdapterResponse {
  std::int64_t id = 0;
  std::vector<WireDetection> detections;
  std::optional<std::string> error;
};

// Single line, no trailing newline, keys in the documented order.
std::string encode_request(const AdapterRequest& req);
std::string encode_response(const AdapterResponse& resp);

// Throw AdapterProtocolError with the line number and, when it can be
// recovered from the text, the request id.
AdapterResponse decode_response(std::string_view line, std::size_t line_number);
void decode_handshake(std::string_view line, std::size_t line_number);

// Collects responses keyed by request id so the result does not depend on
// arrival order. Unknown, duplicate and malformed lines are protocol errors.
class ResponseAssembler {
 public:
  explicit ResponseAssembler(const std::vector<std::int64_t>& expected_ids);

  void accept_line(std::string_view line, std::size_t line_number);
  bool complete() const { return pending_.empty(); }
  const std::set<std::int64_t>& pending() const { return pending_; }
  const std::map<std::int64_t, AdapterResponse>& responses() const { return responses_; }

 private:
  std::set<std::int64_t> pending_;
  std::map<std::int64_t, AdapterResponse> responses_;
};

// A child process started through /bin/sh -c, with pipes on stdin/stdout.
// stderr is inherited. The destructor closes stdin, waits briefly, then kills.
class AdapterProcess {
 public:
  explicit AdapterProcess(const std::string& command);
  ~AdapterProcess();

  AdapterProcess(const AdapterProcess&) = delete;
  AdapterProcess& operator=(const AdapterProcess&) = delete;

  enum class ReadStatus { Line, Eof, Timeout };

  // Throws AdapterProtocolError when the child has stopped reading.
  void send_line(std::string_view line);
  ReadStatus read_line(std::string& out, std::chrono::milliseconds timeout);
  void close_stdin();
  // Exit status once the child has terminated (after EOF), if known.
  std::optional<int> wait_exit(std::chrono::milliseconds timeout);

 private:
  pid_t pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  std::string buffer_;
  bool eof_ = false;
  std::optional<int> exit_status_;
};

struct AdapterOptions {
  std::size_t max_in_flight = 4;
  std::chrono::milliseconds startup_timeout{120000};
  std::chrono::milliseconds request_timeout{60000};
};

// Sends every request to a freshly launched adapter with at most
// max_in_flight outstanding, and returns the responses keyed by id.
std::map<std::int64_t, AdapterResponse> run_adapter(
    const std::string& command, const std::vector<AdapterRequest>& requests,
    const AdapterOptions& opts);

}  // namespace zsd
