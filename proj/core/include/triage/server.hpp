#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <string_view>

#include <nlohmann/json_fwd.hpp>

#include "triage/pipeline.hpp"

namespace triage {

inline constexpr std::size_t kMaxRequestBytes = 1 << 20;

/// {"label": int, "scheme": "...", "scores": {"<label>": value, ...}}
nlohmann::json prediction_json(const TextClassifier& model, const Prediction& prediction);

struct HttpReply {
  int status = 200;
  std::string body;
};

/// The POST /v1/predict handler, independent of any socket: 200 with a
/// prediction, 400 for malformed JSON or a missing/empty "text", 413 when the
/// body exceeds kMaxRequestBytes.
HttpReply handle_predict(const TextClassifier& model, std::string_view body);

/// HTTP/1.1 service over one immutable model. Routes: GET /v1/health,
/// POST /v1/predict. Requests are handled concurrently.
class PredictServer {
 public:
  explicit PredictServer(std::shared_ptr<const TextClassifier> model);
  ~PredictServer();
  PredictServer(const PredictServer&) = delete;
  PredictServer& operator=(const PredictServer&) = delete;

  /// Binds and serves until stop(); returns false if binding fails.
  bool listen(const std::string& host, int port);
  /// Binds to a free port and returns it (or -1); serve with run().
  int bind_any(const std::string& host);
  bool run();
  void wait_until_ready() const;
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace triage
