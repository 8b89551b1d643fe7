#include "brainstorm/server.hpp"

#include <condition_variable>
#include <thread>

#include <httplib.h>

namespace brainstorm {

int http_status_for(ErrorCode code) {
  if (is_validation_error(code)) return 400;
  switch (code) {
    case ErrorCode::MalformedEnvelope: return 400;
    case ErrorCode::UnknownSession:
    case ErrorCode::MountNotFound:
    case ErrorCode::UnknownTask: return 404;
    case ErrorCode::AlreadyComplete:
    case ErrorCode::SessionComplete:
    case ErrorCode::SessionAlreadyRunning:
    case ErrorCode::RemountInProgress: return 409;
    case ErrorCode::StorageUnavailable: return 503;
    default: return 500;
  }
}

json board_json(const Transcript& t) {
  json notes = json::array();
  for (const auto& e : t.entries) {
    notes.push_back({{"note", e.note},
                     {"persona", e.action.persona},
                     {"idea_text", e.action.idea_text},
                     {"phase_index", e.action.phase_index},
                     {"turn_number", e.action.turn_number}});
  }
  return {{"session_id", t.session.session_id},
          {"status", t.session.status},
          {"phases", t.session.phases},
          {"notes", notes}};
}

struct Server::Http {
  httplib::Server svr;
  std::thread thread;
  int port = 0;
  std::mutex mu;
  std::condition_variable cv;
  bool stopped = false;
};

struct Server::Events {
  explicit Events(EventHub& hub) : sockets(hub) {}
  EventSocketServer sockets;
  int port = 0;
};

namespace {

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, const Error& e) {
  send_json(res, http_status_for(e.code()), e.to_json());
}

json parse_body(const httplib::Request& req) {
  try {
    return json::parse(req.body.empty() ? std::string("{}") : req.body);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::MalformedEnvelope, "request body is not JSON", json{{"reason", e.what()}});
  }
}

// Runs a handler, mapping engine and JSON errors onto HTTP statuses.
template <typename F>
httplib::Server::Handler guarded(F&& f) {
  return [f = std::forward<F>(f)](const httplib::Request& req, httplib::Response& res) {
    try {
      f(req, res);
    } catch (const Error& e) {
      send_error(res, e);
    } catch (const json::exception& e) {
      send_json(res, 400, {{"error", "MalformedEnvelope"}, {"message", e.what()}, {"detail", nullptr}});
    } catch (const std::exception& e) {
      send_json(res, 500, {{"error", "Internal"}, {"message", e.what()}, {"detail", nullptr}});
    }
  };
}

}  // namespace

Server::Server(Runtime& runtime, ServerOptions options)
    : runtime_(runtime),
      options_(std::move(options)),
      http_(std::make_unique<Http>()),
      events_(std::make_unique<Events>(runtime.hub())) {
  auto& svr = http_->svr;
  Runtime& rt = runtime_;

  svr.Post("/api/sessions", guarded([&rt](const httplib::Request& req, httplib::Response& res) {
             const SessionConfig config = parse_body(req).get<SessionConfig>();
             send_json(res, 201, rt.engine().create_session(config));
           }));
  svr.Get("/api/sessions", guarded([&rt](const httplib::Request&, httplib::Response& res) {
            send_json(res, 200, rt.storage().list_sessions());
          }));
  svr.Get(R"(/api/sessions/([^/]+))", guarded([&rt](const httplib::Request& req, httplib::Response& res) {
            send_json(res, 200, rt.storage().load_session(req.matches[1]));
          }));
  svr.Post(R"(/api/sessions/([^/]+)/start)",
           guarded([&rt](const httplib::Request& req, httplib::Response& res) {
             const std::string id = req.matches[1];
             rt.start(id);
             send_json(res, 202, {{"session_id", id}, {"running", true}});
           }));
  svr.Post(R"(/api/sessions/([^/]+)/cancel)",
           guarded([&rt](const httplib::Request& req, httplib::Response& res) {
             const std::string id = req.matches[1];
             rt.storage().load_session(id);
             rt.cancel(id);
             send_json(res, 202, {{"session_id", id}, {"cancel_requested", true}});
           }));
  svr.Get(R"(/api/sessions/([^/]+)/transcript)",
          guarded([&rt](const httplib::Request& req, httplib::Response& res) {
            send_json(res, 200, rt.storage().load_transcript(req.matches[1]));
          }));
  svr.Get(R"(/api/sessions/([^/]+)/board)",
          guarded([&rt](const httplib::Request& req, httplib::Response& res) {
            send_json(res, 200, board_json(rt.storage().load_transcript(req.matches[1])));
          }));

  svr.Get("/api/personas", guarded([&rt](const httplib::Request&, httplib::Response& res) {
            json out = json::array();
            for (const auto& p : rt.registry().all()) {
              out.push_back({{"id", p.id},
                             {"display_name", p.display_name},
                             {"system_prompt", p.system_prompt},
                             {"base_color", p.base_color},
                             {"model", rt.storage().get_model_config(p.id)}});
            }
            send_json(res, 200, out);
          }));
  svr.Get("/api/personas/similarity.csv", guarded([&rt](const httplib::Request&, httplib::Response& res) {
            res.set_content(rt.registry().similarity_matrix().to_csv(), "text/csv");
          }));
  svr.Get("/api/models", guarded([&rt](const httplib::Request&, httplib::Response& res) {
            send_json(res, 200, rt.host().mounts());
          }));
  svr.Post("/api/models/remount", guarded([&rt](const httplib::Request& req, httplib::Response& res) {
             const json body = parse_body(req);
             const ModelConfig model = body.at("model").get<ModelConfig>();
             std::optional<PersonaId> only;
             if (body.contains("persona") && !body["persona"].is_null()) {
               only = parse_persona(body["persona"].get<std::string>());
             }
             send_json(res, 200, rt.host().remount_all(model, only));
           }));

  svr.Post(R"(/agents/([^/]+))", [&rt](const httplib::Request& req, httplib::Response& res) {
    const auto reply = rt.host().handle(req.path, req.body);
    res.status = reply.status;
    if (!reply.body.empty()) res.set_content(reply.body, "application/json");
  });
  svr.Get(R"(/agents/([^/]+)/\.well-known/agent\.json)",
          [&rt](const httplib::Request& req, httplib::Response& res) {
            const std::string path = "/agents/" + std::string(req.matches[1]);
            if (auto card = rt.host().agent_card(path)) {
              send_json(res, 200, *card);
            } else {
              send_json(res, 404, {{"error", "MountNotFound"}, {"message", "no agent at " + path}, {"detail", nullptr}});
            }
          });
}

Server::~Server() { stop(); }

void Server::start() {
  auto& svr = http_->svr;
  http_->port = options_.http_port == 0 ? svr.bind_to_any_port(options_.host)
                                        : (svr.bind_to_port(options_.host, options_.http_port)
                                               ? options_.http_port
                                               : -1);
  if (http_->port < 0) {
    throw std::runtime_error("cannot bind HTTP port " + std::to_string(options_.http_port));
  }
  events_->port = events_->sockets.listen(options_.host, options_.ws_port);
  http_->thread = std::thread([this] { http_->svr.listen_after_bind(); });
  http_->svr.wait_until_ready();
}

void Server::stop() {
  if (http_ && http_->thread.joinable()) {
    http_->svr.stop();
    http_->thread.join();
  }
  if (events_) events_->sockets.stop();
  if (http_) {
    {
      std::lock_guard lock(http_->mu);
      http_->stopped = true;
    }
    http_->cv.notify_all();
  }
}

void Server::wait() {
  std::unique_lock lock(http_->mu);
  http_->cv.wait(lock, [&] { return http_->stopped; });
}

int Server::http_port() const { return http_->port; }
int Server::ws_port() const { return events_->port; }

}  // namespace brainstorm
