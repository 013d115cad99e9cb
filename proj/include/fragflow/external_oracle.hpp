#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fragflow/oracle.hpp"

namespace fragflow {

/// Client for a scorer child process speaking JSON lines:
///   request  {"id": k, "smiles": [...]}
///   response {"id": k, "scores": [number|null, ...], "error": null|"..."}
/// The child is started with `/bin/sh -c command`, inheriting the
/// environment. Requests are serial; ids start at 1 and increase by one.
class OracleClient {
 public:
  explicit OracleClient(const std::string& command, double timeout_seconds = 60.0);
  ~OracleClient();
  OracleClient(const OracleClient&) = delete;
  OracleClient& operator=(const OracleClient&) = delete;

  /// One request/response round trip. null marks a per-molecule failure.
  /// Throws OracleError: Timeout, ProtocolViolation, ChildExited, RemoteError.
  std::vector<std::optional<double>> score(std::span<const std::string> smiles);

  long requests_sent() const { return next_id_ - 1; }
  const std::string& command() const { return command_; }

 private:
  std::string read_line();
  void write_all(const std::string& data);
  void shutdown(bool force);
  std::string exit_description();

  std::string command_;
  double timeout_;
  int pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  std::string buffer_;
  long next_id_ = 1;
  bool broken_ = false;
};

/// Oracle backed by an OracleClient; null scores become 0.
class ExternalOracle : public Oracle {
 public:
  explicit ExternalOracle(const std::string& command, double timeout_seconds = 60.0)
      : client_(command, timeout_seconds) {}
  std::string name() const override { return "external:" + client_.command(); }
  std::vector<double> score(std::span<const std::string> smiles) override;

 private:
  OracleClient client_;
};

/// Oracle-side QED/SA via two external scorers (e.g. the reference sidecar
/// in qed and sa modes).
class ExternalProperties : public PropertyScorer {
 public:
  ExternalProperties(const std::string& qed_command, const std::string& sa_command, double timeout_seconds = 60.0)
      : qed_(qed_command, timeout_seconds), sa_(sa_command, timeout_seconds) {}
  std::string name() const override { return "external"; }
  std::vector<std::pair<double, double>> qed_sa(std::span<const std::string> smiles) override;

 private:
  OracleClient qed_, sa_;
};

}  // namespace fragflow
