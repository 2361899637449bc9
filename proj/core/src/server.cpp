#include "triage/server.hpp"

#include <httplib.h>

#include <nlohmann/json.hpp>

#include "triage/error.hpp"

namespace triage {
namespace {

using json = nlohmann::json;

HttpReply error_reply(int status, const std::string& message) {
  return {status, json{{"error", message}}.dump()};
}

}  // namespace

nlohmann::json prediction_json(const TextClassifier& model, const Prediction& prediction) {
  json scores = json::object();
  for (std::size_t i = 0; i < prediction.labels.size(); ++i) {
    scores[std::to_string(prediction.labels[i])] = prediction.scores[i];
  }
  return {{"label", prediction.label}, {"scheme", to_string(model.scheme)}, {"scores", std::move(scores)}};
}

HttpReply handle_predict(const TextClassifier& model, std::string_view body) {
  if (body.size() > kMaxRequestBytes) return error_reply(413, "request body exceeds 1 MiB");
  json request;
  try {
    request = json::parse(body);
  } catch (const json::parse_error&) {
    return error_reply(400, "request body is not valid JSON");
  }
  if (!request.is_object() || !request.contains("text")) return error_reply(400, "missing \"text\" field");
  if (!request["text"].is_string()) return error_reply(400, "\"text\" must be a string");
  const auto& text = request["text"].get_ref<const std::string&>();
  try {
    return {200, prediction_json(model, model.predict_text(text)).dump()};
  } catch (const ValidationError& e) {
    return error_reply(400, e.what());
  }
}

struct PredictServer::Impl {
  std::shared_ptr<const TextClassifier> model;
  httplib::Server server;
};

PredictServer::PredictServer(std::shared_ptr<const TextClassifier> model) : impl_(std::make_unique<Impl>()) {
  if (!model) throw ValidationError("server needs a model");
  impl_->model = std::move(model);
  auto& server = impl_->server;
  server.set_payload_max_length(kMaxRequestBytes);
  server.Get("/v1/health", [](const httplib::Request&, httplib::Response& res) {
    res.set_content("ok", "text/plain");
  });
  const auto* self = impl_.get();
  server.Post("/v1/predict", [self](const httplib::Request& req, httplib::Response& res) {
    const HttpReply reply = handle_predict(*self->model, req.body);
    res.status = reply.status;
    res.set_content(reply.body, "application/json");
  });
  // httplib answers oversized bodies with 413 before routing; give it a JSON body.
  server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (res.body.empty()) {
      const std::string message = res.status == 413 ? "request body exceeds 1 MiB" : httplib::status_message(res.status);
      res.set_content(json{{"error", message}}.dump(), "application/json");
    }
  });
}

PredictServer::~PredictServer() { stop(); }

bool PredictServer::listen(const std::string& host, int port) { return impl_->server.listen(host, port); }

int PredictServer::bind_any(const std::string& host) { return impl_->server.bind_to_any_port(host); }

bool PredictServer::run() { return impl_->server.listen_after_bind(); }

void PredictServer::wait_until_ready() const { impl_->server.wait_until_ready(); }

void PredictServer::stop() {
  if (impl_ && impl_->server.is_running()) impl_->server.stop();
}

}  // namespace triage
