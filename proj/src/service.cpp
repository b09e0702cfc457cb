#include "etongue/service.hpp"

#include <httplib.h>

#include "etongue/error.hpp"
#include "etongue/pipeline_io.hpp"
#include "etongue/recording_io.hpp"

namespace etongue {

using nlohmann::json;

namespace {

InferenceService::Response error_response(int status, const std::string& message) {
  return {status, json{{"error", message}}.dump()};
}

}  // namespace

std::shared_ptr<const ServedModel> make_served_model(TrainedPipeline pipeline) {
  auto model = std::make_shared<ServedModel>();
  model->checksum = bundle_checksum(pipeline);
  model->metadata = bundle_metadata(pipeline);
  model->pipeline = std::move(pipeline);
  return model;
}

InferenceService::InferenceService(std::shared_ptr<const ServedModel> model)
    : model_(std::move(model)) {}

InferenceService::~InferenceService() { stop(); }

std::shared_ptr<const ServedModel> InferenceService::current() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return model_;
}

void InferenceService::replace(std::shared_ptr<const ServedModel> model) {
  std::lock_guard<std::mutex> lock(mutex_);
  model_ = std::move(model);
}

InferenceService::Response InferenceService::predict(const std::string& body) const {
  const auto model = current();
  if (!model) return error_response(503, "no model bundle loaded");
  json doc;
  try {
    doc = json::parse(body);
  } catch (const json::parse_error& e) {
    return error_response(400, std::string("request body is not JSON: ") + e.what());
  }
  try {
    const TransientRecording rec = recording_from_json(doc);
    const Prediction p = predict_recording(model->pipeline, rec);
    json out = prediction_to_json(model->pipeline, p);
    out["bundle_checksum"] = model->checksum;
    return {200, out.dump()};
  } catch (const ValidationError& e) {
    return error_response(400, e.what());
  } catch (const RecordingError& e) {
    return error_response(400, e.what());
  } catch (const DataError& e) {
    return error_response(400, e.what());
  } catch (const Error& e) {
    return error_response(500, e.what());
  }
}

InferenceService::Response InferenceService::model_info() const {
  const auto model = current();
  if (!model) return error_response(503, "no model bundle loaded");
  return {200, model->metadata.dump()};
}

InferenceService::Response InferenceService::put_model(const std::string& body) {
  try {
    auto model = make_served_model(parse_bundle(body));
    json meta = model->metadata;
    replace(std::move(model));
    return {200, meta.dump()};
  } catch (const IncompatibleVersionError& e) {
    return error_response(409, e.what());
  } catch (const Error& e) {
    return error_response(400, e.what());
  }
}

int InferenceService::bind(const std::string& host, int port) {
  server_ = std::make_unique<httplib::Server>();
  auto reply = [](httplib::Response& res, const Response& r) {
    res.status = r.status;
    res.set_content(r.body, "application/json");
  };
  server_->Post("/predict", [this, reply](const httplib::Request& req, httplib::Response& res) {
    reply(res, predict(req.body));
  });
  server_->Get("/model", [this, reply](const httplib::Request&, httplib::Response& res) {
    reply(res, model_info());
  });
  server_->Put("/model", [this, reply](const httplib::Request& req, httplib::Response& res) {
    reply(res, put_model(req.body));
  });
  if (port == 0) return server_->bind_to_any_port(host);
  return server_->bind_to_port(host, port) ? port : -1;
}

bool InferenceService::listen() {
  if (!server_) throw StateError("bind() must be called before listen()");
  return server_->listen_after_bind();
}

void InferenceService::stop() {
  if (server_) server_->stop();
}

bool InferenceService::is_running() const { return server_ && server_->is_running(); }

std::pair<std::string, int> parse_bind_address(const std::string& text) {
  const auto colon = text.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == text.size()) {
    throw ArgumentError("bind address must look like host:port, got '" + text + "'");
  }
  const std::string port_text = text.substr(colon + 1);
  if (port_text.find_first_not_of("0123456789") != std::string::npos || port_text.size() > 5) {
    throw ArgumentError("invalid port in bind address '" + text + "'");
  }
  const int port = std::stoi(port_text);
  if (port > 65535) throw ArgumentError("port out of range in '" + text + "'");
  return {text.substr(0, colon), port};
}

}  // namespace etongue
