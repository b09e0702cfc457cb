#pragma once

#include <memory>
#include <mutex>
#include <string>

#include <json.hpp>

#include "etongue/pipeline.hpp"

namespace httplib {
class Server;
}

namespace etongue {

// A loaded bundle together with the values derived from it once.
struct ServedModel {
  TrainedPipeline pipeline;
  std::string checksum;
  nlohmann::json metadata;
};

std::shared_ptr<const ServedModel> make_served_model(TrainedPipeline pipeline);

// HTTP inference endpoint.
//
//   POST /predict  recording JSON -> {"label", "scores", "bundle_checksum"}
//   GET  /model    bundle metadata including the training fingerprint
//   PUT  /model    bundle JSON; replaces the served model
//
// Each request reads the current model pointer once, so a request that is in
// flight during PUT /model completes entirely on the model it started with.
class InferenceService {
 public:
  struct Response {
    int status = 200;
    std::string body;  // JSON
  };

  explicit InferenceService(std::shared_ptr<const ServedModel> model = nullptr);
  ~InferenceService();
  InferenceService(const InferenceService&) = delete;
  InferenceService& operator=(const InferenceService&) = delete;

  std::shared_ptr<const ServedModel> current() const;
  void replace(std::shared_ptr<const ServedModel> model);

  // Transport-independent handlers; the HTTP routes delegate to these.
  Response predict(const std::string& body) const;
  Response model_info() const;
  Response put_model(const std::string& body);

  // Binds to host:port (port 0 picks a free port) and returns the bound port,
  // or -1 on failure.
  int bind(const std::string& host, int port);
  // Blocks until stop() is called.
  bool listen();
  void stop();
  bool is_running() const;

 private:
  mutable std::mutex mutex_;
  std::shared_ptr<const ServedModel> model_;
  std::unique_ptr<httplib::Server> server_;
};

// "host:port" -> (host, port). Throws ArgumentError.
std::pair<std::string, int> parse_bind_address(const std::string& text);

}  // namespace etongue
