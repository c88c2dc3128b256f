#pragma once

/**
 * @file protocol.hpp
 * @brief Client side of the newline-delimited JSON prediction protocol.
 *
 * The predictor runs as a child process speaking one JSON record per line on
 * its standard input and output.
 *
 *   health:   {"id": 0, "echo": "ping"}                 -> {"id": 0, "echo": "ping"}
 *   predict:  {"id", "kappa", "n", "current", "endpoint", "j", "Ns"}
 *                                                       -> {"id", "prediction"} or {"id", "error"}
 *
 * `current`, `endpoint` and `prediction` are token grids (see tokens.hpp).
 */

#include <chrono>
#include <mutex>
#include <string>
#include <vector>

#include <json.hpp>

#include "ira/predictor.hpp"

namespace ira::protocol {

nlohmann::json make_request(long long id, int kappa, const setcalc::Zonotope& current,
                            const setcalc::Zonotope& endpoint, const conformal::Substep& step);

class CommandPredictor final : public conformal::PredictorInterface {
 public:
  struct Options {
    std::vector<std::string> argv;
    int kappa = 20;
    std::chrono::milliseconds timeout{30000};
  };

  /// Starts the process and performs the echo handshake. Throws PredictorError on failure.
  explicit CommandPredictor(Options opt);
  ~CommandPredictor() override;

  CommandPredictor(const CommandPredictor&) = delete;
  CommandPredictor& operator=(const CommandPredictor&) = delete;

  /// Calls are serialized over the single connection.
  setcalc::Zonotope predict(const setcalc::Zonotope& current, const setcalc::Zonotope& endpoint,
                            const conformal::Substep& step) const override;
  std::string name() const override;

  /// Sends an echo record and checks the reply.
  bool healthy() const;

 private:
  nlohmann::json exchange(const nlohmann::json& request) const;
  void send_line(const std::string& line) const;
  std::string read_line() const;
  void stop();

  Options opt_;
  int fd_ = -1;
  int pid_ = -1;
  mutable std::mutex mu_;
  mutable std::string buffer_;
  mutable long long next_id_ = 1;
};

}  // namespace ira::protocol
