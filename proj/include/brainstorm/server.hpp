#pragma once

#include <memory>
#include <string>

#include "brainstorm/error.hpp"
#include "brainstorm/runtime.hpp"

namespace brainstorm {

struct ServerOptions {
  std::string host = "127.0.0.1";
  int http_port = 8080;  // 0 picks a free port
  int ws_port = 8081;    // 0 picks a free port
};

// HTTP status used for an engine error on the REST surface.
int http_status_for(ErrorCode code);

// Board view of a session: status plus every note joined with its action.
json board_json(const Transcript& t);

// REST control surface and agent endpoints over HTTP, and the per-session
// event stream over WebSocket:
//
//   POST /api/sessions                      SessionConfig -> Session (201)
//   GET  /api/sessions                      -> [session_id]
//   GET  /api/sessions/{id}                 -> Session
//   POST /api/sessions/{id}/start           -> 202
//   POST /api/sessions/{id}/cancel          -> 202
//   GET  /api/sessions/{id}/transcript      -> Transcript
//   GET  /api/sessions/{id}/board           -> board_json
//   GET  /api/personas                      -> personas with model configs
//   GET  /api/personas/similarity.csv       -> similarity matrix CSV
//   GET  /api/models                        -> mounts
//   POST /api/models/remount                {model, persona?} -> RemountReport
//   POST /agents/{slug}                     JSON-RPC
//   GET  /agents/{slug}/.well-known/agent.json
//   ws://host:ws_port/ws/sessions/{id}      SessionEvent frames
class Server {
 public:
  Server(Runtime& runtime, ServerOptions options = {});
  ~Server();

  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  // Binds both listeners and serves on background threads.
  void start();
  void stop();
  // Blocks until stop() is called from another thread.
  void wait();

  int http_port() const;
  int ws_port() const;

 private:
  struct Http;
  struct Events;
  Runtime& runtime_;
  ServerOptions options_;
  std::unique_ptr<Http> http_;
  std::unique_ptr<Events> events_;
};

// WebSocket event stream on its own listener.
class EventSocketServer {
 public:
  explicit EventSocketServer(EventHub& hub);
  ~EventSocketServer();

  // Returns the bound port.
  int listen(const std::string& host, int port);
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace brainstorm
