#include "fragflow/external_oracle.hpp"

#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fcntl.h>
#include "json.hpp"

namespace fragflow {

using nlohmann::json;

OracleClient::OracleClient(const std::string& command, double timeout_seconds) : command_(command), timeout_(timeout_seconds) {
  // A dead child must surface as ChildExited, not kill us through SIGPIPE.
  ::signal(SIGPIPE, SIG_IGN);
  int in_pipe[2], out_pipe[2];
  if (::pipe2(in_pipe, O_CLOEXEC) != 0) throw OracleError(OracleError::Kind::SpawnFailed, "pipe: " + std::string(std::strerror(errno)));
  if (::pipe2(out_pipe, O_CLOEXEC) != 0) {
    ::close(in_pipe[0]);
    ::close(in_pipe[1]);
    throw OracleError(OracleError::Kind::SpawnFailed, "pipe: " + std::string(std::strerror(errno)));
  }
  const pid_t pid = ::fork();
  if (pid < 0) throw OracleError(OracleError::Kind::SpawnFailed, "fork: " + std::string(std::strerror(errno)));
  if (pid == 0) {
    ::dup2(in_pipe[0], STDIN_FILENO);
    ::dup2(out_pipe[1], STDOUT_FILENO);
    ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  pid_ = pid;
  ::close(in_pipe[0]);
  ::close(out_pipe[1]);
  to_child_ = in_pipe[1];
  from_child_ = out_pipe[0];
}

OracleClient::~OracleClient() { shutdown(false); }

void OracleClient::shutdown(bool force) {
  if (to_child_ >= 0) ::close(to_child_);
  to_child_ = -1;
  if (pid_ > 0) {
    if (force) ::kill(pid_, SIGKILL);
    int status = 0;
    // Give a well-behaved child a moment to exit after its input closes.
    for (int i = 0; i < 200; ++i) {
      if (::waitpid(pid_, &status, WNOHANG) == pid_) {
        pid_ = -1;
        break;
      }
      ::usleep(5000);
    }
    if (pid_ > 0) {
      ::kill(pid_, SIGKILL);
      ::waitpid(pid_, &status, 0);
      pid_ = -1;
    }
  }
  if (from_child_ >= 0) ::close(from_child_);
  from_child_ = -1;
}

std::string OracleClient::exit_description() {
  if (pid_ <= 0) return "scorer process is gone";
  int status = 0;
  for (int i = 0; i < 100; ++i) {
    if (::waitpid(pid_, &status, WNOHANG) == pid_) {
      pid_ = -1;
      if (WIFEXITED(status)) return "scorer exited with status " + std::to_string(WEXITSTATUS(status));
      if (WIFSIGNALED(status)) return "scorer killed by signal " + std::to_string(WTERMSIG(status));
      return "scorer exited";
    }
    ::usleep(2000);
  }
  return "scorer closed its output";
}

void OracleClient::write_all(const std::string& data) {
  std::size_t done = 0;
  while (done < data.size()) {
    const ssize_t n = ::write(to_child_, data.data() + done, data.size() - done);
    if (n < 0) {
      if (errno == EINTR) continue;
      broken_ = true;
      throw OracleError(OracleError::Kind::ChildExited, exit_description());
    }
    done += static_cast<std::size_t>(n);
  }
}

std::string OracleClient::read_line() {
  using clock = std::chrono::steady_clock;
  const auto deadline = clock::now() + std::chrono::duration<double>(timeout_);
  while (true) {
    const auto nl = buffer_.find('\n');
    if (nl != std::string::npos) {
      std::string line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      return line;
    }
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - clock::now()).count();
    if (left <= 0) {
      broken_ = true;
      std::string partial = buffer_;
      shutdown(true);
      throw OracleError(OracleError::Kind::Timeout, "no response within " + std::to_string(timeout_) + " s", partial);
    }
    pollfd pfd{from_child_, POLLIN, 0};
    const int ready = ::poll(&pfd, 1, static_cast<int>(std::min<long long>(left, 1000)));
    if (ready < 0 && errno != EINTR) throw OracleError(OracleError::Kind::ChildExited, "poll failed");
    if (ready <= 0) continue;
    char chunk[4096];
    const ssize_t n = ::read(from_child_, chunk, sizeof chunk);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) {
      broken_ = true;
      throw OracleError(OracleError::Kind::ChildExited, exit_description(), buffer_);
    }
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

std::vector<std::optional<double>> OracleClient::score(std::span<const std::string> smiles) {
  if (broken_ || to_child_ < 0) throw OracleError(OracleError::Kind::ChildExited, "scorer is no longer usable");
  if (smiles.empty()) return {};
  const long id = next_id_++;
  json request = {{"id", id}, {"smiles", json::array()}};
  for (const auto& s : smiles) request["smiles"].push_back(s);
  write_all(request.dump() + "\n");

  const std::string line = read_line();
  auto violation = [&](const std::string& why) {
    broken_ = true;
    return OracleError(OracleError::Kind::ProtocolViolation, why, line);
  };
  json response;
  try {
    response = json::parse(line);
  } catch (const json::parse_error&) {
    throw violation("response is not JSON");
  }
  if (!response.is_object()) throw violation("response is not an object");
  if (!response.contains("id") || !response["id"].is_number_integer() || response["id"].get<long>() != id)
    throw violation("response id does not match request " + std::to_string(id));
  if (response.contains("error") && !response["error"].is_null()) {
    if (!response["error"].is_string()) throw violation("error field must be a string or null");
    throw OracleError(OracleError::Kind::RemoteError, response["error"].get<std::string>(), line);
  }
  if (!response.contains("scores") || !response["scores"].is_array()) throw violation("response has no scores array");
  const auto& scores = response["scores"];
  if (scores.size() != smiles.size())
    throw violation("expected " + std::to_string(smiles.size()) + " scores, got " + std::to_string(scores.size()));
  std::vector<std::optional<double>> out;
  out.reserve(scores.size());
  for (const auto& s : scores) {
    if (s.is_null()) out.emplace_back();
    else if (s.is_number() && std::isfinite(s.get<double>())) out.emplace_back(s.get<double>());
    else throw violation("scores must be numbers or null");
  }
  return out;
}

std::vector<double> ExternalOracle::score(std::span<const std::string> smiles) {
  std::vector<double> out;
  for (const auto& s : client_.score(smiles)) out.push_back(s.value_or(0.0));
  return out;
}

std::vector<std::pair<double, double>> ExternalProperties::qed_sa(std::span<const std::string> smiles) {
  const auto q = qed_.score(smiles);
  const auto s = sa_.score(smiles);
  std::vector<std::pair<double, double>> out;
  // A molecule the scorer rejects can never meet the thresholds.
  for (std::size_t i = 0; i < smiles.size(); ++i) out.emplace_back(q[i].value_or(0.0), s[i].value_or(10.0));
  return out;
}

}  // namespace fragflow
