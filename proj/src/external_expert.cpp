#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cstring>

#include "json.hpp"
#include "samtr/experts.hpp"

namespace samtr {

namespace {

using nlohmann::json;

// One child per expert instance, spawned lazily and reused across rounds.
// Every failure mode (spawn error, write error, timeout, crash, garbage
// output) degrades to uniform advice so a flaky helper can never stall the
// optimization loop.
class ExternalExpert final : public Expert {
 public:
  ExternalExpert(std::string command, int timeout_ms,
                 std::function<void(const std::string&)> warn)
      : command_(std::move(command)),
        timeout_ms_(timeout_ms),
        warn_(std::move(warn)) {}

  ~ExternalExpert() override { shutdown(); }

  std::string name() const override { return "external"; }

  ExpertAdvice advise(const ExpertContext& ctx) override {
    ExpertAdvice a;
    a.expert = name();
    a.e = Vector::Constant(ctx.problem->p,
                           double(ctx.b) / double(ctx.problem->p));
    if (dead_) return a;
    if (pid_ < 0 && !spawn()) {
      fail("failed to spawn external expert: " + command_);
      return a;
    }

    json req;
    req["round"] = ctx.round;
    req["p"] = ctx.problem->p;
    req["b"] = ctx.b;
    req["dim"] = ctx.problem->dim;
    req["incumbent"] = std::vector<double>(
        ctx.incumbent.data(), ctx.incumbent.data() + ctx.incumbent.size());
    req["trust_radius"] = ctx.trust_radius;
    json centers = json::array();
    for (const QuadraticModel& m : *ctx.models)
      centers.push_back(std::vector<double>(
          m.center.data(), m.center.data() + m.center.size()));
    req["centers"] = std::move(centers);
    req["mode"] = ctx.mode == AdviceMode::Ball ? "ball" : "twopoint";
    if (ctx.mode == AdviceMode::TwoPoint)
      req["trial_point"] = std::vector<double>(
          ctx.trial_point.data(),
          ctx.trial_point.data() + ctx.trial_point.size());
    json rewards = json::object();
    for (int j = 0; j < ctx.last_rewards.size(); ++j)
      if (std::isfinite(ctx.last_rewards[j]))
        rewards[std::to_string(j)] = ctx.last_rewards[j];
    req["last_rewards"] = std::move(rewards);

    if (!write_line(req.dump())) {
      fail("external expert pipe closed while writing");
      return a;
    }
    std::string line;
    if (!read_line(&line)) return a;  // read_line already reported

    try {
      const json resp = json::parse(line);
      const auto& arr = resp.at("array");
      std::vector<double> raw;
      for (const auto& v : arr) raw.push_back(v.get<double>());
      a.e = sanitize_external_advice(raw, ctx.problem->p, ctx.b);
      if (resp.contains("reasoning") && resp["reasoning"].is_string())
        a.note = resp["reasoning"].get<std::string>();
    } catch (const std::exception& ex) {
      if (warn_) warn_(std::string("malformed external advice: ") + ex.what());
    }
    return a;
  }

 private:
  bool spawn() {
    int to_child[2] = {-1, -1};
    int from_child[2] = {-1, -1};
    if (pipe(to_child) != 0) return false;
    if (pipe(from_child) != 0) {
      close(to_child[0]);
      close(to_child[1]);
      return false;
    }
    // Writes into a dead child must surface as EPIPE, not kill the process.
    struct sigaction sa{};
    if (sigaction(SIGPIPE, nullptr, &sa) == 0 && sa.sa_handler == SIG_DFL) {
      sa.sa_handler = SIG_IGN;
      sigaction(SIGPIPE, &sa, nullptr);
    }
    const pid_t pid = fork();
    if (pid < 0) {
      close(to_child[0]);
      close(to_child[1]);
      close(from_child[0]);
      close(from_child[1]);
      return false;
    }
    if (pid == 0) {
      dup2(to_child[0], STDIN_FILENO);
      dup2(from_child[1], STDOUT_FILENO);
      close(to_child[0]);
      close(to_child[1]);
      close(from_child[0]);
      close(from_child[1]);
      execl("/bin/sh", "sh", "-c", command_.c_str(), (char*)nullptr);
      _exit(127);
    }
    close(to_child[0]);
    close(from_child[1]);
    pid_ = pid;
    to_child_ = to_child[1];
    from_child_ = from_child[0];
    return true;
  }

  bool write_line(const std::string& payload) {
    std::string line = payload;
    line.push_back('\n');
    std::size_t off = 0;
    while (off < line.size()) {
      const ssize_t n = write(to_child_, line.data() + off, line.size() - off);
      if (n < 0) {
        if (errno == EINTR) continue;
        return false;
      }
      off += static_cast<std::size_t>(n);
    }
    return true;
  }

  bool read_line(std::string* out) {
    const auto deadline = std::chrono::steady_clock::now() +
                          std::chrono::milliseconds(timeout_ms_);
    while (true) {
      const auto pos = buffer_.find('\n');
      if (pos != std::string::npos) {
        *out = buffer_.substr(0, pos);
        buffer_.erase(0, pos + 1);
        return true;
      }
      const auto now = std::chrono::steady_clock::now();
      if (now >= deadline) {
        fail("external expert timed out after " +
             std::to_string(timeout_ms_) + " ms");
        return false;
      }
      struct pollfd pfd{from_child_, POLLIN, 0};
      const int remaining = static_cast<int>(
          std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now)
              .count());
      const int rv = poll(&pfd, 1, std::max(1, remaining));
      if (rv < 0 && errno == EINTR) continue;
      if (rv <= 0) continue;  // loop re-checks the deadline
      char chunk[4096];
      const ssize_t n = read(from_child_, chunk, sizeof chunk);
      if (n < 0) {
        if (errno == EINTR) continue;
        fail("external expert read error");
        return false;
      }
      if (n == 0) {
        fail("external expert closed its output");
        return false;
      }
      buffer_.append(chunk, static_cast<std::size_t>(n));
    }
  }

  void fail(const std::string& message) {
    if (warn_) warn_(message);
    shutdown();
    dead_ = true;
  }

  void shutdown() {
    if (pid_ > 0) {
      kill(pid_, SIGKILL);
      int status = 0;
      waitpid(pid_, &status, 0);
      pid_ = -1;
    }
    if (to_child_ >= 0) close(to_child_);
    if (from_child_ >= 0) close(from_child_);
    to_child_ = from_child_ = -1;
  }

  std::string command_;
  int timeout_ms_;
  std::function<void(const std::string&)> warn_;
  pid_t pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  std::string buffer_;
  bool dead_ = false;
};

}  // namespace

std::unique_ptr<Expert> make_external_expert(
    const std::string& command, int timeout_ms,
    std::function<void(const std::string&)> warn) {
  return std::make_unique<ExternalExpert>(command, timeout_ms, std::move(warn));
}

}  // namespace samtr
