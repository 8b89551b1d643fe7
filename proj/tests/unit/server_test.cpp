#include <doctest.h>

#include <boost/asio/connect.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

#include "brainstorm/server.hpp"
#include "../support.hpp"

#include <httplib.h>  // after Eigen-dependent headers

using namespace brainstorm;
using namespace std::chrono_literals;
namespace beast = boost::beast;
namespace asio = boost::asio;

namespace {

struct Fixture {
  Fixture() : runtime(testsupport::scripted_options(0)), server(runtime, {"127.0.0.1", 0, 0}) {}

  json post(const std::string& path, const json& body, int& status) {
    auto r = client.Post(path.c_str(), body.dump(), "application/json");
    REQUIRE(r);
    status = r->status;
    return r->body.empty() ? json() : json::parse(r->body);
  }

  json get(const std::string& path, int& status) {
    auto r = client.Get(path.c_str());
    REQUIRE(r);
    status = r->status;
    return json::parse(r->body);
  }

  std::string create(IdeationSystem sys = IdeationSystem::Separate, int sep = 4, int tog = 4) {
    int status = 0;
    const auto s = post("/api/sessions", testsupport::make_config(sys, PersonaId::Doctor, PersonaId::VREngineer, sep, tog), status);
    REQUIRE(status == 201);
    return s["session_id"].get<std::string>();
  }

  Runtime runtime;
  Server server;
  bool started = (server.start(), true);
  httplib::Client client{"127.0.0.1", server.http_port()};
};

class WsClient {
 public:
  WsClient(int port, const std::string& target) : ws_(io_) {
    asio::ip::tcp::resolver resolver(io_);
    asio::connect(ws_.next_layer(), resolver.resolve("127.0.0.1", std::to_string(port)));
    ws_.handshake("127.0.0.1", target);
  }
  json read() {
    beast::flat_buffer buf;
    ws_.read(buf);
    return json::parse(beast::buffers_to_string(buf.data()));
  }
  ~WsClient() {
    beast::error_code ec;
    ws_.close(beast::websocket::close_code::normal, ec);
  }

 private:
  asio::io_context io_;
  beast::websocket::stream<asio::ip::tcp::socket> ws_;
};

}  // namespace

TEST_SUITE("server") {
  TEST_CASE("error codes map onto HTTP statuses") {
    CHECK(http_status_for(ErrorCode::OddTurnBudget) == 400);
    CHECK(http_status_for(ErrorCode::MalformedEnvelope) == 400);
    CHECK(http_status_for(ErrorCode::UnknownSession) == 404);
    CHECK(http_status_for(ErrorCode::AlreadyComplete) == 409);
    CHECK(http_status_for(ErrorCode::RemountInProgress) == 409);
    CHECK(http_status_for(ErrorCode::StorageUnavailable) == 503);
  }

  TEST_CASE("session lifecycle over REST") {
    Fixture f;
    const std::string id = f.create();
    int status = 0;
    CHECK(f.get("/api/sessions", status) == json::array({id}));
    CHECK(f.get("/api/sessions/" + id, status)["status"] == "created");

    f.post("/api/sessions/" + id + "/start", json::object(), status);
    CHECK(status == 202);
    REQUIRE(testsupport::eventually([&] {
      int st = 0;
      return f.get("/api/sessions/" + id, st)["status"] == "complete";
    }));
    f.runtime.wait(id);
    const auto t = f.get("/api/sessions/" + id + "/transcript", status);
    CHECK(status == 200);
    CHECK(t["entries"].size() == 4);
    const auto board = f.get("/api/sessions/" + id + "/board", status);
    CHECK(board["status"] == "complete");
    REQUIRE(board["notes"].size() == 4);
    CHECK(board["notes"][0]["persona"] == "doctor");
    CHECK(board["notes"][0].contains("note"));

    const auto again = f.post("/api/sessions/" + id + "/start", json::object(), status);
    CHECK(status == 409);
    CHECK(again["error"] == "AlreadyComplete");
  }

  TEST_CASE("bad requests return 400 and unknown sessions 404") {
    Fixture f;
    int status = 0;
    auto cfg = json(testsupport::make_config(IdeationSystem::Separate));
    cfg["separate_turns"] = 3;
    CHECK(f.post("/api/sessions", cfg, status)["error"] == "OddTurnBudget");
    CHECK(status == 400);
    cfg["separate_turns"] = 4;
    cfg["persona_b"] = "doctor";
    f.post("/api/sessions", cfg, status);
    CHECK(status == 400);
    auto r = f.client.Post("/api/sessions", "{not json", "application/json");
    REQUIRE(r);
    CHECK(r->status == 400);
    CHECK(f.get("/api/sessions/nope", status)["error"] == "UnknownSession");
    CHECK(status == 404);
    f.get("/api/sessions/nope/transcript", status);
    CHECK(status == 404);
    f.post("/api/sessions/nope/cancel", json::object(), status);
    CHECK(status == 404);
  }

  TEST_CASE("personas, similarity CSV and mounts") {
    Fixture f;
    int status = 0;
    const auto personas = f.get("/api/personas", status);
    CHECK(personas.size() == kPersonaCount);
    CHECK(personas[0]["base_color"]["hex"].is_string());
    auto r = f.client.Get("/api/personas/similarity.csv");
    REQUIRE(r);
    CHECK(r->get_header_value("Content-Type").rfind("text/csv", 0) == 0);
    int lines = 0;
    for (char ch : r->body) lines += ch == '\n';
    CHECK(lines == kPersonaCount + 1);
    const auto mounts = f.get("/api/models", status);
    CHECK(mounts.size() == kPersonaCount);
    CHECK(mounts[0]["status"] == "mounted");
  }

  TEST_CASE("remount swaps the model for one persona") {
    Fixture f;
    int status = 0;
    json model = default_model_config();
    model["temperature"] = 0.2;
    const auto report = f.post("/api/models/remount", {{"model", model}, {"persona", "nurse"}}, status);
    CHECK(status == 200);
    REQUIRE(report["outcomes"].size() == kPersonaCount);
    for (const auto& o : report["outcomes"]) {
      CHECK(o["remounted"] == true);
      CHECK((o["model"]["temperature"] == 0.2) == (o["persona"] == "nurse"));
    }
    model["temperature"] = -1.0;
    f.post("/api/models/remount", {{"model", model}}, status);
    CHECK(status == 400);
    f.post("/api/models/remount", {{"model", default_model_config()}, {"persona", "pilot"}}, status);
    CHECK(status == 400);
  }

  TEST_CASE("agent endpoints serve JSON-RPC and cards") {
    Fixture f;
    int status = 0;
    const auto card = f.get("/agents/doctor/.well-known/agent.json", status);
    CHECK(status == 200);
    CHECK(card["name"] == "Doctor");
    CHECK(card["url"] == "/agents/doctor");
    f.get("/agents/pilot/.well-known/agent.json", status);
    CHECK(status == 404);
    auto r = f.client.Post("/agents/doctor", "{", "application/json");
    REQUIRE(r);
    CHECK(json::parse(r->body)["error"]["code"] == a2a::rpc::kParseError);
  }

  TEST_CASE("websocket streams ordered events for one session") {
    Fixture f;
    const std::string id = f.create(IdeationSystem::SeparateThenTogether, 2, 2);
    WsClient ws(f.server.ws_port(), "/ws/sessions/" + id);
    REQUIRE(testsupport::eventually([&] { return f.runtime.hub().subscriber_count(id) == 1; }));
    int status = 0;
    f.post("/api/sessions/" + id + "/start", json::object(), status);
    std::vector<json> frames;
    while (frames.empty() || frames.back()["event_kind"] != "session_complete") frames.push_back(ws.read());
    REQUIRE(frames.size() == 6);
    for (std::size_t i = 0; i < frames.size(); ++i) {
      CHECK(frames[i]["sequence"] == i + 1);
      CHECK(frames[i]["session_id"] == id);
    }
    CHECK(frames[2]["event_kind"] == "phase_transition");
    CHECK(frames[2]["payload"]["to_phase_index"] == 1);
    CHECK(frames[0]["payload"]["action"]["persona"] == "doctor");
    CHECK(frames[5]["payload"]["total_actions"] == 4);
    f.runtime.wait(id);
  }

  TEST_CASE("websocket rejects paths outside the session stream") {
    Fixture f;
    CHECK_THROWS(WsClient(f.server.ws_port(), "/ws/other"));
    CHECK_THROWS(WsClient(f.server.ws_port(), "/ws/sessions/a/b"));
  }
}
