#include "zsdbench/adapter.hpp"

#include <cerrno>
#include <csignal>
#include <cstring>
#include <fcntl.h>
#include <mutex>
#include <poll.h>
#include <regex>
#include <spawn.h>
#include <sys/wait.h>
#include <thread>
#include <unistd.h>

#include <fmt/format.h>

#include "json.hpp"
#include "zsdbench/error.hpp"

extern char** environ;

namespace zsd {

namespace {

using Clock = std::chrono::steady_clock;
using ordered_json = nlohmann::ordered_json;

std::string id_hint(std::string_view line) {
  static const std::regex id_re(R"re("id"\s*:\s*(-?[0-9]+))re");
  std::match_results<std::string_view::const_iterator> m;
  if (std::regex_search(line.begin(), line.end(), m, id_re)) {
    return fmt::format(" (request id {})", m[1].str());
  }
  return {};
}

[[noreturn]] void protocol_error(std::size_t line_number, std::string_view reason,
                                 std::string_view line) {
  throw Error(ErrorCode::AdapterProtocolError,
              fmt::format("line {}: {}{}", line_number, reason, id_hint(line)));
}

void ignore_sigpipe() {
  static std::once_flag once;
  std::call_once(once, [] { std::signal(SIGPIPE, SIG_IGN); });
}

}  // namespace

std::string encode_request(const AdapterRequest& req) {
  ordered_json j;
  j["id"] = req.id;
  j["image"] = req.image;
  j["prompt"] = req.prompt;
  j["box_threshold"] = req.box_threshold;
  j["text_threshold"] = req.text_threshold;
  j["seed"] = req.seed;
  return j.dump();
}

std::string encode_response(const AdapterResponse& resp) {
  ordered_json j;
  j["id"] = resp.id;
  j["detections"] = ordered_json::array();
  for (const auto& d : resp.detections) {
    ordered_json e;
    e["bbox"] = {d.bbox.x, d.bbox.y, d.bbox.w, d.bbox.h};
    e["score"] = d.score;
    e["phrase"] = d.phrase;
    j["detections"].push_back(std::move(e));
  }
  if (resp.error) j["error"] = *resp.error;
  return j.dump();
}

AdapterResponse decode_response(std::string_view line, std::size_t line_number) {
  const auto j = nlohmann::json::parse(line, nullptr, false);
  if (j.is_discarded()) protocol_error(line_number, "not a complete JSON object", line);
  if (!j.is_object()) protocol_error(line_number, "response must be a JSON object", line);

  auto id = j.find("id");
  if (id == j.end() || !id->is_number_integer()) {
    protocol_error(line_number, "response lacks an integer \"id\"", line);
  }
  AdapterResponse resp;
  resp.id = id->get<std::int64_t>();

  if (auto err = j.find("error"); err != j.end() && !err->is_null()) {
    if (!err->is_string()) protocol_error(line_number, "\"error\" must be a string", line);
    resp.error = err->get<std::string>();
  }

  auto dets = j.find("detections");
  if (dets == j.end()) {
    if (resp.error) return resp;
    protocol_error(line_number, "response lacks \"detections\"", line);
  }
  if (!dets->is_array()) protocol_error(line_number, "\"detections\" must be an array", line);

  for (const auto& d : *dets) {
    if (!d.is_object()) protocol_error(line_number, "detection must be an object", line);
    auto bbox = d.find("bbox");
    if (bbox == d.end() || !bbox->is_array() || bbox->size() != 4) {
      protocol_error(line_number, "detection bbox must be [x,y,w,h]", line);
    }
    for (const auto& c : *bbox) {
      if (!c.is_number()) protocol_error(line_number, "detection bbox must be numeric", line);
    }
    WireDetection w;
    w.bbox = {(*bbox)[0].get<double>(), (*bbox)[1].get<double>(), (*bbox)[2].get<double>(),
              (*bbox)[3].get<double>()};
    const ValidationResult v = validate_box(w.bbox, std::numeric_limits<double>::infinity(),
                                            std::numeric_limits<double>::infinity());
    if (!v.accepted()) protocol_error(line_number, "detection bbox has non-positive extent", line);

    auto score = d.find("score");
    if (score == d.end() || !score->is_number()) {
      protocol_error(line_number, "detection lacks a numeric score", line);
    }
    w.score = score->get<double>();
    if (!(w.score >= 0.0 && w.score <= 1.0)) {
      protocol_error(line_number, fmt::format("score {} outside [0,1]", w.score), line);
    }
    if (auto phrase = d.find("phrase"); phrase != d.end() && !phrase->is_null()) {
      if (!phrase->is_string()) protocol_error(line_number, "phrase must be a string", line);
      w.phrase = phrase->get<std::string>();
    }
    resp.detections.push_back(std::move(w));
  }
  return resp;
}

void decode_handshake(std::string_view line, std::size_t line_number) {
  const auto j = nlohmann::json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    protocol_error(line_number, "expected ready handshake, got non-JSON output", line);
  }
  const auto id = j.find("id");
  const auto ready = j.find("ready");
  if (id == j.end() || !id->is_number_integer() || id->get<std::int64_t>() != 0 ||
      ready == j.end() || !ready->is_boolean() || !ready->get<bool>()) {
    protocol_error(line_number, "expected {\"id\":0,\"ready\":true} handshake", line);
  }
}

ResponseAssembler::ResponseAssembler(const std::vector<std::int64_t>& expected_ids) {
  for (auto id : expected_ids) {
    if (id == 0 || !pending_.insert(id).second) {
      throw Error(ErrorCode::InvalidArgument, fmt::format("request id {} reused or reserved", id));
    }
  }
}

void ResponseAssembler::accept_line(std::string_view line, std::size_t line_number) {
  AdapterResponse resp = decode_response(line, line_number);
  if (responses_.count(resp.id)) {
    protocol_error(line_number, fmt::format("duplicate response for id {}", resp.id), line);
  }
  if (!pending_.erase(resp.id)) {
    protocol_error(line_number, fmt::format("response for unknown id {}", resp.id), line);
  }
  const auto id = resp.id;
  responses_.emplace(id, std::move(resp));
}

AdapterProcess::AdapterProcess(const std::string& command) {
  ignore_sigpipe();
  int in_pipe[2];
  int out_pipe[2];
  if (::pipe2(in_pipe, O_CLOEXEC) != 0) {
    throw Error(ErrorCode::AdapterLaunchFailure, fmt::format("pipe: {}", std::strerror(errno)));
  }
  if (::pipe2(out_pipe, O_CLOEXEC) != 0) {
    ::close(in_pipe[0]);
    ::close(in_pipe[1]);
    throw Error(ErrorCode::AdapterLaunchFailure, fmt::format("pipe: {}", std::strerror(errno)));
  }

  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_adddup2(&actions, in_pipe[0], STDIN_FILENO);
  posix_spawn_file_actions_adddup2(&actions, out_pipe[1], STDOUT_FILENO);

  // Own process group, so that the shell and whatever it starts die together.
  posix_spawnattr_t attr;
  posix_spawnattr_init(&attr);
  posix_spawnattr_setflags(&attr, POSIX_SPAWN_SETPGROUP);
  posix_spawnattr_setpgroup(&attr, 0);

  const char* argv[] = {"/bin/sh", "-c", command.c_str(), nullptr};
  const int rc = ::posix_spawn(&pid_, "/bin/sh", &actions, &attr,
                               const_cast<char* const*>(argv), environ);
  posix_spawn_file_actions_destroy(&actions);
  posix_spawnattr_destroy(&attr);
  ::close(in_pipe[0]);
  ::close(out_pipe[1]);
  if (rc != 0) {
    ::close(in_pipe[1]);
    ::close(out_pipe[0]);
    throw Error(ErrorCode::AdapterLaunchFailure,
                fmt::format("cannot start \"{}\": {}", command, std::strerror(rc)));
  }
  to_child_ = in_pipe[1];
  from_child_ = out_pipe[0];
}

AdapterProcess::~AdapterProcess() {
  close_stdin();
  if (pid_ > 0 && !exit_status_) {
    if (!wait_exit(std::chrono::milliseconds(2000))) {
      ::kill(-pid_, SIGKILL);
      int status = 0;
      ::waitpid(pid_, &status, 0);
    }
  }
  if (from_child_ >= 0) ::close(from_child_);
}

void AdapterProcess::send_line(std::string_view line) {
  if (to_child_ < 0) throw Error(ErrorCode::AdapterProtocolError, "adapter input already closed");
  std::string data(line);
  data.push_back('\n');
  std::size_t off = 0;
  while (off < data.size()) {
    const ssize_t n = ::write(to_child_, data.data() + off, data.size() - off);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw Error(ErrorCode::AdapterProtocolError,
                  fmt::format("adapter stopped reading requests: {}", std::strerror(errno)));
    }
    off += static_cast<std::size_t>(n);
  }
}

AdapterProcess::ReadStatus AdapterProcess::read_line(std::string& out,
                                                     std::chrono::milliseconds timeout) {
  const auto deadline = Clock::now() + timeout;
  for (;;) {
    if (auto nl = buffer_.find('\n'); nl != std::string::npos) {
      out.assign(buffer_, 0, nl);
      buffer_.erase(0, nl + 1);
      return ReadStatus::Line;
    }
    if (eof_) {
      if (buffer_.empty()) return ReadStatus::Eof;
      out = std::move(buffer_);  // unterminated final line
      buffer_.clear();
      return ReadStatus::Line;
    }
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now());
    if (left.count() <= 0) return ReadStatus::Timeout;
    pollfd pfd{from_child_, POLLIN, 0};
    const int pr = ::poll(&pfd, 1, static_cast<int>(left.count()));
    if (pr < 0) {
      if (errno == EINTR) continue;
      throw Error(ErrorCode::AdapterProtocolError, fmt::format("poll: {}", std::strerror(errno)));
    }
    if (pr == 0) return ReadStatus::Timeout;
    char chunk[8192];
    const ssize_t n = ::read(from_child_, chunk, sizeof chunk);
    if (n < 0) {
      if (errno == EINTR || errno == EAGAIN) continue;
      throw Error(ErrorCode::AdapterProtocolError, fmt::format("read: {}", std::strerror(errno)));
    }
    if (n == 0) {
      eof_ = true;
    } else {
      buffer_.append(chunk, static_cast<std::size_t>(n));
    }
  }
}

void AdapterProcess::close_stdin() {
  if (to_child_ >= 0) {
    ::close(to_child_);
    to_child_ = -1;
  }
}

std::optional<int> AdapterProcess::wait_exit(std::chrono::milliseconds timeout) {
  if (exit_status_ || pid_ <= 0) return exit_status_;
  const auto deadline = Clock::now() + timeout;
  for (;;) {
    int status = 0;
    const pid_t r = ::waitpid(pid_, &status, WNOHANG);
    if (r == pid_) {
      exit_status_ = WIFEXITED(status) ? WEXITSTATUS(status) : 128 + WTERMSIG(status);
      return exit_status_;
    }
    if (r < 0 && errno != EINTR) return std::nullopt;
    if (Clock::now() >= deadline) return std::nullopt;
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
}

std::map<std::int64_t, AdapterResponse> run_adapter(const std::string& command,
                                                    const std::vector<AdapterRequest>& requests,
                                                    const AdapterOptions& opts) {
  if (opts.max_in_flight == 0) throw Error(ErrorCode::InvalidArgument, "max_in_flight must be >= 1");
  std::vector<std::int64_t> ids;
  std::map<std::int64_t, const AdapterRequest*> by_id;
  for (const auto& r : requests) {
    ids.push_back(r.id);
    by_id[r.id] = &r;
  }
  ResponseAssembler assembler(ids);

  AdapterProcess proc(command);
  std::string line;
  std::size_t line_number = 0;

  for (;;) {
    const auto status = proc.read_line(line, opts.startup_timeout);
    if (status == AdapterProcess::ReadStatus::Eof) {
      const auto code = proc.wait_exit(std::chrono::milliseconds(1000));
      throw Error(ErrorCode::AdapterLaunchFailure,
                  fmt::format("adapter exited before the ready handshake{}",
                              code ? fmt::format(" (exit status {})", *code) : ""));
    }
    if (status == AdapterProcess::ReadStatus::Timeout) {
      throw Error(ErrorCode::AdapterLaunchFailure,
                  fmt::format("no ready handshake within {} ms", opts.startup_timeout.count()));
    }
    ++line_number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    decode_handshake(line, line_number);
    break;
  }

  std::size_t next = 0;
  std::set<std::int64_t> sent;
  bool input_closed = false;  // child stopped reading; keep reading its output until EOF
  while (!assembler.complete()) {
    while (!input_closed && next < requests.size() &&
           sent.size() - assembler.responses().size() < opts.max_in_flight) {
      try {
        proc.send_line(encode_request(requests[next]));
      } catch (const Error&) {
        input_closed = true;
        break;
      }
      sent.insert(requests[next].id);
      ++next;
    }
    const auto status = proc.read_line(line, opts.request_timeout);
    if (status == AdapterProcess::ReadStatus::Timeout) {
      std::int64_t oldest = 0;
      for (const auto& r : requests) {
        if (sent.count(r.id) && assembler.pending().count(r.id)) {
          oldest = r.id;
          break;
        }
      }
      throw Error(ErrorCode::AdapterTimeout,
                  fmt::format("image_id {} (request id {}): no response within {} ms",
                              by_id.at(oldest)->image_id, oldest, opts.request_timeout.count()));
    }
    if (status == AdapterProcess::ReadStatus::Eof) {
      throw Error(ErrorCode::AdapterProtocolError,
                  fmt::format("adapter exited with {} request(s) unanswered (first: request id {})",
                              assembler.pending().size(), *assembler.pending().begin()));
    }
    ++line_number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const AdapterResponse probe = decode_response(line, line_number);
    if (!sent.count(probe.id) && assembler.pending().count(probe.id)) {
      protocol_error(line_number, fmt::format("response for id {} before it was sent", probe.id),
                     line);
    }
    assembler.accept_line(line, line_number);
  }

  // Anything the adapter prints after the last answer is a protocol violation.
  proc.close_stdin();
  const auto drain = std::min(opts.request_timeout, std::chrono::milliseconds(5000));
  for (;;) {
    const auto status = proc.read_line(line, drain);
    if (status != AdapterProcess::ReadStatus::Line) break;
    ++line_number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    assembler.accept_line(line, line_number);
  }
  return assembler.responses();
}

}  // namespace zsd
