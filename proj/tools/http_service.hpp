#pragma once

// HTTP routes for the decoding assistant over a SessionStore.
//
//   POST   /sessions                create; body = session parameters
//   GET    /sessions/{id}           session view
//   POST   /sessions/{id}/feedback  body = {"guess": ..., "feedback": ...}
//   DELETE /sessions/{id}           204 on success
//   GET    /health                  {"status": "ok", "sessions": n}
//
// Errors answer {"error": {"reason": <machine-readable>, "message": <text>}}
// with 400 (bad parameters or payload), 404 (unknown session) or 409
// (feedback inconsistent with the list, or session already solved).

// Eigen must come before httplib: <resolv.h> defines a `_res` macro.
#include "seqroll/session.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>

#include <string>

namespace seqroll::service {

inline void send_json(httplib::Response& res, int status, const nlohmann::json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

inline void send_error(httplib::Response& res, int status, const std::string& reason, const std::string& message) {
  send_json(res, status, {{"error", {{"reason", reason}, {"message", message}}}});
}

template <class Handler>
void guarded(httplib::Response& res, Handler handler) {
  try {
    handler();
  } catch (const SessionError& e) {
    send_error(res, e.status(), e.reason(), e.what());
  } catch (const nlohmann::json::exception& e) {
    send_error(res, 400, "malformed_json", e.what());
  } catch (const std::exception& e) {
    send_error(res, 500, "internal_error", e.what());
  }
}

inline nlohmann::json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return nlohmann::json::object();
  return nlohmann::json::parse(req.body);
}

/// Registers the session endpoints; serves `static_dir` at / when nonempty.
inline void install_routes(httplib::Server& server, SessionStore& store, const std::string& static_dir = {}) {
  server.Get("/health", [&store](const httplib::Request&, httplib::Response& res) {
    send_json(res, 200, {{"status", "ok"}, {"sessions", store.size()}});
  });
  server.Post("/sessions", [&store](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { send_json(res, 201, store.create(parse_body(req))); });
  });
  server.Get(R"(/sessions/([0-9a-f]+))", [&store](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { send_json(res, 200, store.get(req.matches[1])); });
  });
  server.Post(R"(/sessions/([0-9a-f]+)/feedback)", [&store](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { send_json(res, 200, store.post_feedback(req.matches[1], parse_body(req))); });
  });
  server.Delete(R"(/sessions/([0-9a-f]+))", [&store](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      store.remove(req.matches[1]);
      res.status = 204;
    });
  });
  if (!static_dir.empty() && !server.set_mount_point("/", static_dir))
    throw Error("static directory '" + static_dir + "' does not exist");
}

}  // namespace seqroll::service
