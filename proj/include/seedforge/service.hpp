/* HTTP front end for SessionStore.
 *
 *   GET  /healthz
 *   POST /sessions                       multipart: image, config, [truth]
 *   GET  /sessions/{id}
 *   POST /sessions/{id}/scribbles        {"label": "fg"|"bg", "voxels": [[x,y(,z)], ...]}
 *   POST /sessions/{id}/undo
 *   GET  /sessions/{id}/artifacts/{seed|strength|label|saliency}
 *
 * Errors are JSON {code, stage, message}.
 */
#pragma once

// Eigen must come before httplib: <resolv.h> defines a `_res` macro that
// collides with Eigen parameter names.
#include "seedforge/session.hpp"

#include <httplib.h>

#include <nlohmann/json.hpp>
#include <string>

namespace seedforge::service {

class SessionService {
 public:
  explicit SessionService(std::string snapshot_dir = {}, std::string static_dir = {})
      : store_(std::move(snapshot_dir)) {
    routes();
    if (!static_dir.empty()) server_.set_mount_point("/", static_dir);
  }

  SessionStore& store() { return store_; }
  httplib::Server& server() { return server_; }

  bool listen(const std::string& host, int port) { return server_.listen(host, port); }

  /// Binds an ephemeral port; pair with run() on another thread.
  int bind_any(const std::string& host = "127.0.0.1") { return server_.bind_to_any_port(host); }
  bool run() { return server_.listen_after_bind(); }
  void wait_until_ready() const { server_.wait_until_ready(); }
  void stop() { server_.stop(); }

 private:
  static void send_json(httplib::Response& res, int status, const nlohmann::json& j) {
    res.status = status;
    res.set_content(j.dump(), "application/json");
  }

  static void send_error(httplib::Response& res, int status, const std::string& stage,
                         const std::string& message) {
    send_json(res, status, {{"code", status}, {"stage", stage}, {"message", message}});
  }

  template <class F>
  static auto guarded(F f) {
    return [f](const httplib::Request& req, httplib::Response& res) {
      try {
        f(req, res);
      } catch (const ServiceError& e) {
        send_error(res, e.status, e.stage, e.what());
      } catch (const nlohmann::json::exception& e) {
        send_error(res, 400, "request", std::string("malformed JSON: ") + e.what());
      } catch (const Error& e) {
        send_error(res, 422, e.stage().empty() ? std::string(to_string(e.kind())) : e.stage(), e.what());
      } catch (const std::exception& e) {
        send_error(res, 500, "internal", e.what());
      }
    };
  }

  void routes() {
    server_.Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
      send_json(res, 200, {{"status", "ok"}});
    });

    server_.Post("/sessions", guarded([this](const httplib::Request& req, httplib::Response& res) {
      if (!req.is_multipart_form_data() || !req.has_file("image"))
        throw ServiceError(415, "ingestion", "expected multipart form data with an 'image' part");
      const auto image = req.get_file_value("image").content;
      const std::string config = req.has_file("config") ? req.get_file_value("config").content : "";
      std::optional<std::string> truth;
      if (req.has_file("truth")) truth = req.get_file_value("truth").content;
      auto session = store_.create(image, config, truth);
      std::lock_guard lock(session->mutex());
      send_json(res, 201, session->state_json());
    }));

    server_.Get(R"(/sessions/([0-9a-zA-Z_-]+))",
                guarded([this](const httplib::Request& req, httplib::Response& res) {
                  auto session = store_.get(req.matches[1]);
                  std::lock_guard lock(session->mutex());
                  send_json(res, 200, session->state_json());
                }));

    server_.Post(R"(/sessions/([0-9a-zA-Z_-]+)/scribbles)",
                 guarded([this](const httplib::Request& req, httplib::Response& res) {
                   auto session = store_.get(req.matches[1]);
                   const auto body = nlohmann::json::parse(req.body);
                   const auto label = body.at("label").get<std::string>();
                   Stroke stroke;
                   if (label == "fg")
                     stroke.label = Label::fg;
                   else if (label == "bg")
                     stroke.label = Label::bg;
                   else
                     throw ServiceError(400, "request", "label must be 'fg' or 'bg'");
                   std::lock_guard lock(session->mutex());
                   stroke.voxels = session->resolve_voxels(body.at("voxels"));
                   session->add_scribble(std::move(stroke));
                   store_.snapshot(*session);
                   send_json(res, 200, session->state_json(false));
                 }));

    server_.Post(R"(/sessions/([0-9a-zA-Z_-]+)/undo)",
                 guarded([this](const httplib::Request& req, httplib::Response& res) {
                   auto session = store_.get(req.matches[1]);
                   std::lock_guard lock(session->mutex());
                   session->undo();
                   store_.snapshot(*session);
                   send_json(res, 200, session->state_json(false));
                 }));

    server_.Get(R"(/sessions/([0-9a-zA-Z_-]+)/artifacts/([a-z]+))",
                guarded([this](const httplib::Request& req, httplib::Response& res) {
                  auto session = store_.get(req.matches[1]);
                  const std::string name = req.matches[2];
                  if (name != "seed" && name != "strength" && name != "label" && name != "saliency")
                    throw ServiceError(404, "request", "unknown artifact " + name);
                  std::lock_guard lock(session->mutex());
                  auto bytes = session->artifact(name);
                  if (!bytes) throw ServiceError(404, "request", "no " + name + " artifact for this session");
                  res.status = 200;
                  res.set_header("X-Revision", std::to_string(session->revision()));
                  res.set_content(std::move(*bytes), session->shape().rank() == 2
                                                         ? "image/x-portable-graymap"
                                                         : "application/octet-stream");
                }));
  }

  SessionStore store_;
  httplib::Server server_;
};

}  // namespace seedforge::service
