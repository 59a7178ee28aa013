/* Copyright 2026 The growtrim Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "growtrim/evaluator.h"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <iostream>
#include <mutex>
#include <thread>
#include <unordered_map>
#include <unordered_set>

#include "growtrim/arch_json.h"
#include "growtrim/errors.h"
#include "growtrim/memory.h"
#include "growtrim/rng.h"

extern char** environ;

namespace growtrim {

using nlohmann::json;

double synthetic_accuracy(const NetworkArch& arch, std::uint64_t seed,
                          const SyntheticConfig& config) {
  const double p = static_cast<double>(cell_param_count(arch)) / 1e6;
  const OpCensus census = op_census(arch);
  const double pool_fraction =
      census.total_layers > 0
          ? static_cast<double>(census.pooling_or_identity) / census.total_layers
          : 0.0;
  double a = config.floor + (config.ceil - config.floor) *
                                (1.0 - std::exp(-config.alpha * p)) *
                                (1.0 - config.beta * pool_fraction);
  if (config.sigma > 0.0) {
    Rng rng(mix_seed(canonical_hash(arch), seed));
    a += config.sigma * rng.normal();
  }
  return std::clamp(a, 0.0, 1.0);
}

std::string_view eval_status_name(EvalStatus status) {
  switch (status) {
    case EvalStatus::kOk:
      return "ok";
    case EvalStatus::kTrainerError:
      return "trainer_error";
    case EvalStatus::kTimeout:
      return "timeout";
    case EvalStatus::kMalformedResponse:
      return "malformed_response";
    case EvalStatus::kTrainerUnreachable:
      return "trainer_unreachable";
  }
  return "unknown";
}

std::vector<EvalResult> SyntheticEvaluator::evaluate(
    const std::vector<EvalRequest>& requests) {
  std::vector<EvalResult> out;
  out.reserve(requests.size());
  for (const auto& r : requests) {
    out.push_back({r.id, EvalStatus::kOk, synthetic_accuracy(r.arch, r.seed, config_),
                   std::nullopt, ""});
  }
  return out;
}

std::vector<EvalResult> FunctionEvaluator::evaluate(
    const std::vector<EvalRequest>& requests) {
  std::vector<EvalResult> out;
  out.reserve(requests.size());
  for (const auto& r : requests) {
    out.push_back({r.id, EvalStatus::kOk, fn_(r), std::nullopt, ""});
  }
  return out;
}

std::vector<std::string> split_command(const std::string& command_line) {
  std::vector<std::string> out;
  std::string current;
  bool in_token = false;
  char quote = 0;
  for (std::size_t i = 0; i < command_line.size(); ++i) {
    const char ch = command_line[i];
    if (quote != 0) {
      if (ch == quote) {
        quote = 0;
      } else if (ch == '\\' && quote == '"' && i + 1 < command_line.size()) {
        current += command_line[++i];
      } else {
        current += ch;
      }
    } else if (ch == '"' || ch == '\'') {
      quote = ch;
      in_token = true;
    } else if (ch == '\\' && i + 1 < command_line.size()) {
      current += command_line[++i];
      in_token = true;
    } else if (std::isspace(static_cast<unsigned char>(ch))) {
      if (in_token) out.push_back(std::move(current));
      current.clear();
      in_token = false;
    } else {
      current += ch;
      in_token = true;
    }
  }
  if (quote != 0) throw InvalidArgument("unterminated quote in trainer command");
  if (in_token) out.push_back(std::move(current));
  return out;
}

json request_to_json(const EvalRequest& request) {
  return {{"id", request.id},
          {"arch", arch_to_json(request.arch)},
          {"seed", request.seed},
          {"epochs", request.budget}};
}

namespace {

using Clock = std::chrono::steady_clock;

std::mutex trace_mutex;

bool debug_enabled() {
  const char* v = std::getenv("MEMNAS_TRAINER_DEBUG");
  return v != nullptr && *v != '\0' && std::string_view(v) != "0";
}

void trace(bool enabled, pid_t pid, std::string_view tag, std::string_view text) {
  if (!enabled) return;
  std::lock_guard<std::mutex> lock(trace_mutex);
  std::cerr << "[trainer " << pid << "] " << tag << " " << text << "\n";
}

struct Child {
  pid_t pid = -1;
  int in = -1;   // our end of the trainer's stdin
  int out = -1;  // our end of the trainer's stdout
};

void close_fd(int& fd) {
  if (fd >= 0) ::close(fd);
  fd = -1;
}

bool spawn_trainer(const std::vector<std::string>& command, Child& child,
                   std::string& error) {
  static std::once_flag sigpipe_once;
  std::call_once(sigpipe_once, [] { ::signal(SIGPIPE, SIG_IGN); });

  int to_child[2];
  int from_child[2];
  if (::pipe2(to_child, O_CLOEXEC) != 0) {
    error = std::strerror(errno);
    return false;
  }
  if (::pipe2(from_child, O_CLOEXEC) != 0) {
    error = std::strerror(errno);
    ::close(to_child[0]);
    ::close(to_child[1]);
    return false;
  }
  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_adddup2(&actions, to_child[0], STDIN_FILENO);
  posix_spawn_file_actions_adddup2(&actions, from_child[1], STDOUT_FILENO);
  std::vector<char*> argv;
  for (const auto& arg : command) argv.push_back(const_cast<char*>(arg.c_str()));
  argv.push_back(nullptr);
  const int rc = ::posix_spawnp(&child.pid, argv[0], &actions, nullptr,
                                argv.data(), environ);
  posix_spawn_file_actions_destroy(&actions);
  ::close(to_child[0]);
  ::close(from_child[1]);
  if (rc != 0) {
    error = "cannot launch '" + command.front() + "': " + std::strerror(rc);
    ::close(to_child[1]);
    ::close(from_child[0]);
    child.pid = -1;
    return false;
  }
  child.in = to_child[1];
  child.out = from_child[0];
  ::fcntl(child.in, F_SETFL, ::fcntl(child.in, F_GETFL) | O_NONBLOCK);
  ::fcntl(child.out, F_SETFL, ::fcntl(child.out, F_GETFL) | O_NONBLOCK);
  return true;
}

void reap(Child& child, bool kill_now) {
  close_fd(child.in);
  close_fd(child.out);
  if (child.pid <= 0) return;
  if (kill_now) ::kill(child.pid, SIGKILL);
  const auto deadline = Clock::now() + std::chrono::seconds(2);
  int status = 0;
  while (::waitpid(child.pid, &status, WNOHANG) == 0) {
    if (Clock::now() >= deadline) {
      ::kill(child.pid, SIGKILL);
      ::waitpid(child.pid, &status, 0);
      break;
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
  child.pid = -1;
}

class Session {
 public:
  Session(const std::vector<EvalRequest>& requests, std::vector<EvalResult>& results,
          const TrainerSpec& spec, bool debug)
      : requests_(requests), results_(results), spec_(spec), debug_(debug) {}

  // Runs `todo` on one trainer process. Returns the requests that still need
  // a fresh process after a timeout.
  std::vector<std::size_t> run(const std::vector<std::size_t>& todo) {
    Child child;
    std::string error;
    if (!spawn_trainer(spec_.command, child, error)) {
      for (std::size_t i : todo) fail(i, EvalStatus::kTrainerUnreachable, error);
      return {};
    }
    outstanding_ = todo;
    std::string outbuf;
    for (std::size_t i : todo) {
      const std::string line = request_to_json(requests_[i]).dump();
      trace(debug_, child.pid, ">", line);
      outbuf += line;
      outbuf += '\n';
    }
    std::size_t written = 0;
    std::string inbuf;
    auto last_progress = Clock::now();
    const auto timeout = std::chrono::duration_cast<Clock::duration>(
        std::chrono::duration<double>(spec_.timeout_seconds));

    while (!outstanding_.empty()) {
      const auto remaining = last_progress + timeout - Clock::now();
      if (remaining <= Clock::duration::zero()) {
        const std::size_t oldest = outstanding_.front();
        outstanding_.erase(outstanding_.begin());
        fail(oldest, EvalStatus::kTimeout,
             "no response within " + std::to_string(spec_.timeout_seconds) + " s");
        trace(debug_, child.pid, "!", "timeout on id " + requests_[oldest].id);
        reap(child, true);
        return std::move(outstanding_);
      }
      pollfd fds[2];
      nfds_t nfds = 0;
      fds[nfds++] = {child.out, POLLIN, 0};
      if (child.in >= 0) fds[nfds++] = {child.in, POLLOUT, 0};
      const auto wait_ms = std::chrono::ceil<std::chrono::milliseconds>(remaining);
      const int ready = ::poll(fds, nfds, static_cast<int>(std::min<long long>(
                                              wait_ms.count(), 1000 * 60 * 60)));
      if (ready < 0) {
        if (errno == EINTR) continue;
        const std::string msg = std::string("poll failed: ") + std::strerror(errno);
        for (std::size_t i : outstanding_) fail(i, EvalStatus::kTrainerUnreachable, msg);
        outstanding_.clear();
        break;
      }
      if (nfds == 2 && (fds[1].revents & (POLLOUT | POLLERR | POLLHUP))) {
        const ssize_t n =
            ::write(child.in, outbuf.data() + written, outbuf.size() - written);
        if (n > 0) written += static_cast<std::size_t>(n);
        if ((n < 0 && errno != EAGAIN && errno != EINTR) || written == outbuf.size()) {
          close_fd(child.in);
        }
      }
      if (fds[0].revents & (POLLIN | POLLHUP | POLLERR)) {
        char chunk[65536];
        const ssize_t n = ::read(child.out, chunk, sizeof(chunk));
        if (n == 0) {
          trace(debug_, child.pid, "!", "trainer closed its output");
          for (std::size_t i : outstanding_) {
            fail(i, EvalStatus::kTrainerUnreachable,
                 "trainer exited before answering");
          }
          outstanding_.clear();
          break;
        }
        if (n > 0) {
          inbuf.append(chunk, static_cast<std::size_t>(n));
          std::size_t newline;
          while ((newline = inbuf.find('\n')) != std::string::npos) {
            const std::string line = inbuf.substr(0, newline);
            inbuf.erase(0, newline + 1);
            trace(debug_, child.pid, "<", line);
            if (handle_line(line)) last_progress = Clock::now();
          }
        }
      }
    }
    reap(child, !outstanding_.empty());
    return {};
  }

 private:
  void fail(std::size_t i, EvalStatus status, std::string message) {
    results_[i].status = status;
    results_[i].accuracy = 0.0;
    results_[i].message = std::move(message);
  }

  bool take(const std::string& id, std::size_t& index) {
    for (auto it = outstanding_.begin(); it != outstanding_.end(); ++it) {
      if (requests_[*it].id == id) {
        index = *it;
        outstanding_.erase(it);
        return true;
      }
    }
    return false;
  }

  // Returns true when the line resolved a request.
  bool handle_line(const std::string& raw) {
    const auto first = raw.find_first_not_of(" \t\r");
    if (first == std::string::npos) return false;
    json j;
    try {
      j = json::parse(raw);
    } catch (const json::parse_error&) {
      j = nullptr;
    }
    if (!j.is_object() || !j.contains("id") || !j["id"].is_string()) {
      // Unattributable; charge it to the request the trainer should be on.
      if (outstanding_.empty()) return false;
      const std::size_t oldest = outstanding_.front();
      outstanding_.erase(outstanding_.begin());
      fail(oldest, EvalStatus::kMalformedResponse, "unparseable response line");
      return true;
    }
    std::size_t index = 0;
    if (!take(j["id"].get<std::string>(), index)) return false;
    if (j.contains("error")) {
      const auto& e = j["error"];
      fail(index, EvalStatus::kTrainerError, e.is_string() ? e.get<std::string>() : e.dump());
      return true;
    }
    const auto acc = j.find("accuracy");
    if (acc == j.end() || !acc->is_number()) {
      fail(index, EvalStatus::kMalformedResponse, "missing numeric accuracy");
      return true;
    }
    const double value = acc->get<double>();
    if (!std::isfinite(value) || value < 0.0 || value > 1.0) {
      fail(index, EvalStatus::kMalformedResponse, "accuracy outside [0, 1]");
      return true;
    }
    EvalResult& r = results_[index];
    r.status = EvalStatus::kOk;
    r.accuracy = value;
    r.message.clear();
    const auto wall = j.find("wall_time");
    if (wall != j.end() && wall->is_number()) r.wall_time = wall->get<double>();
    return true;
  }

  const std::vector<EvalRequest>& requests_;
  std::vector<EvalResult>& results_;
  const TrainerSpec& spec_;
  bool debug_;
  std::vector<std::size_t> outstanding_;
};

}  // namespace

std::vector<EvalResult> external_evaluate(const std::vector<EvalRequest>& requests,
                                          const TrainerSpec& spec) {
  if (spec.command.empty()) throw InvalidArgument("trainer command is empty");
  if (!(spec.timeout_seconds > 0.0)) throw InvalidArgument("timeout must be positive");
  std::unordered_set<std::string> ids;
  for (const auto& r : requests) {
    if (!ids.insert(r.id).second) {
      throw InvalidArgument("duplicate request id '" + r.id + "'");
    }
  }
  std::vector<EvalResult> results(requests.size());
  for (std::size_t i = 0; i < requests.size(); ++i) {
    results[i].id = requests[i].id;
    results[i].status = EvalStatus::kTrainerUnreachable;
  }
  if (requests.empty()) return results;

  const bool debug = debug_enabled();
  const std::size_t workers = std::min<std::size_t>(
      requests.size(), static_cast<std::size_t>(std::max(1, spec.parallelism)));
  auto work = [&](std::size_t w) {
    std::vector<std::size_t> todo;
    for (std::size_t i = w; i < requests.size(); i += workers) todo.push_back(i);
    Session session(requests, results, spec, debug);
    while (!todo.empty()) todo = session.run(todo);
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::thread> threads;
    for (std::size_t w = 0; w < workers; ++w) threads.emplace_back(work, w);
    for (auto& t : threads) t.join();
  }
  return results;
}

}  // namespace growtrim
