#include "ira/protocol.hpp"

#include <poll.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <csignal>
#include <cerrno>
#include <cstring>

#include "ira/error.hpp"
#include "ira/tokens.hpp"

namespace ira::protocol {

namespace {

using Clock = std::chrono::steady_clock;

}  // namespace

nlohmann::json make_request(long long id, int kappa, const setcalc::Zonotope& current,
                            const setcalc::Zonotope& endpoint, const conformal::Substep& step) {
  if (current.dim() != endpoint.dim()) throw InvalidArgument("make_request: dimension mismatch");
  return {{"id", id},
          {"kappa", kappa},
          {"n", current.dim()},
          {"current", tokens::to_json(tokens::tokenize(current, step.tau_current, 1.0, kappa))},
          {"endpoint", tokens::to_json(tokens::tokenize(endpoint, step.tau_endpoint, 1.0, kappa))},
          {"j", step.j},
          {"Ns", step.Ns}};
}

CommandPredictor::CommandPredictor(Options opt) : opt_(std::move(opt)) {
  if (opt_.argv.empty()) throw PredictorError("predictor command is empty");
  int sv[2];
  if (::socketpair(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0, sv) != 0) {
    throw PredictorError(std::string("socketpair failed: ") + std::strerror(errno));
  }
  std::vector<char*> args;
  for (auto& a : opt_.argv) args.push_back(a.data());
  args.push_back(nullptr);

  const pid_t pid = ::fork();
  if (pid < 0) {
    ::close(sv[0]);
    ::close(sv[1]);
    throw PredictorError(std::string("fork failed: ") + std::strerror(errno));
  }
  if (pid == 0) {
    ::dup2(sv[1], STDIN_FILENO);
    ::dup2(sv[1], STDOUT_FILENO);
    ::execvp(args[0], args.data());
    ::_exit(127);
  }
  ::close(sv[1]);
  fd_ = sv[0];
  pid_ = pid;
  if (!healthy()) {
    stop();
    throw PredictorError("predictor '" + opt_.argv.front() + "' failed the echo handshake");
  }
}

CommandPredictor::~CommandPredictor() { stop(); }

void CommandPredictor::stop() {
  if (fd_ >= 0) {
    ::shutdown(fd_, SHUT_WR);
    ::close(fd_);
  }
  if (pid_ > 0) {
    int status = 0;
    // Give the child a moment to exit on EOF before forcing it.
    for (int i = 0; i < 50; ++i) {
      if (::waitpid(pid_, &status, WNOHANG) == pid_) {
        fd_ = -1;
        pid_ = -1;
        return;
      }
      ::usleep(10000);
    }
    ::kill(pid_, SIGKILL);
    ::waitpid(pid_, &status, 0);
  }
  fd_ = -1;
  pid_ = -1;
}

void CommandPredictor::send_line(const std::string& line) const {
  const std::string data = line + "\n";
  std::size_t sent = 0;
  while (sent < data.size()) {
    const ssize_t r = ::send(fd_, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
    if (r < 0) {
      if (errno == EINTR) continue;
      throw PredictorError(std::string("predictor write failed: ") + std::strerror(errno));
    }
    sent += static_cast<std::size_t>(r);
  }
}

std::string CommandPredictor::read_line() const {
  const auto deadline = Clock::now() + opt_.timeout;
  for (;;) {
    const auto pos = buffer_.find('\n');
    if (pos != std::string::npos) {
      std::string line = buffer_.substr(0, pos);
      buffer_.erase(0, pos + 1);
      return line;
    }
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now()).count();
    if (left <= 0) throw PredictorError("predictor timed out");
    pollfd pfd{fd_, POLLIN, 0};
    const int ready = ::poll(&pfd, 1, static_cast<int>(left));
    if (ready < 0 && errno == EINTR) continue;
    if (ready <= 0) throw PredictorError("predictor timed out");
    char chunk[65536];
    const ssize_t r = ::recv(fd_, chunk, sizeof chunk, 0);
    if (r < 0 && errno == EINTR) continue;
    if (r <= 0) throw PredictorError("predictor closed the connection");
    buffer_.append(chunk, static_cast<std::size_t>(r));
  }
}

nlohmann::json CommandPredictor::exchange(const nlohmann::json& request) const {
  send_line(request.dump());
  const std::string line = read_line();
  nlohmann::json reply;
  try {
    reply = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw PredictorError(std::string("malformed predictor response: ") + e.what());
  }
  if (!reply.is_object() || !reply.contains("id") || reply["id"] != request["id"]) {
    throw PredictorError("predictor response id does not match the request");
  }
  return reply;
}

bool CommandPredictor::healthy() const {
  std::lock_guard lock(mu_);
  try {
    const nlohmann::json req{{"id", next_id_++}, {"echo", "ping"}};
    const auto reply = exchange(req);
    return reply.value("echo", std::string()) == "ping";
  } catch (const PredictorError&) {
    return false;
  }
}

setcalc::Zonotope CommandPredictor::predict(const setcalc::Zonotope& current, const setcalc::Zonotope& endpoint,
                                            const conformal::Substep& step) const {
  std::lock_guard lock(mu_);
  const auto reply = exchange(make_request(next_id_++, opt_.kappa, current, endpoint, step));
  if (reply.contains("error")) throw PredictorError("predictor error: " + reply["error"].dump());
  if (!reply.contains("prediction")) throw PredictorError("predictor response lacks a prediction");
  try {
    return tokens::detokenize(tokens::grid_from_json(reply["prediction"], opt_.kappa, static_cast<int>(current.dim())));
  } catch (const InvalidArgument& e) {
    throw PredictorError(std::string("invalid prediction: ") + e.what());
  }
}

std::string CommandPredictor::name() const { return "command:" + opt_.argv.front(); }

}  // namespace ira::protocol
