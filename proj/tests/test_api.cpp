#include <doctest.h>

#include <fstream>
#include <random>
#include <sstream>

#include <httplib.h>
#include <json.hpp>

#include "fixtures.hpp"
#include "micoach/api/http_server.hpp"
#include "micoach/api/service.hpp"
#include "micoach/curriculum/curriculum.hpp"
#include "micoach/engine/engine.hpp"
#include "micoach/store/event_json.hpp"

using namespace micoach;
using nlohmann::json;

namespace {

constexpr const char* kToken = "s3cret";

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const engine::Program& sample() {
  static const engine::Program p = engine::Program::from_source(read_file(testing::kCurriculumDir / "sample.miscript"));
  return p;
}

// A service over a temp data dir. Every response body is remembered so the
// schema test can sweep all of them.
struct Fixture {
  testing::TempDir dir;
  std::int64_t clock_ms = 1'700'000'000'000;
  std::vector<std::string> bodies;
  std::unique_ptr<api::Service> service;

  explicit Fixture(bool use_sample = false) {
    api::ServiceConfig cfg;
    cfg.data_dir = dir.path();
    cfg.curriculum_dir = testing::kCurriculumDir;
    if (use_sample) cfg.program = sample();
    cfg.admin_token = kToken;
    cfg.clock = [this] { return clock_ms += 250; };
    cfg.store_options.sync = false;
    service = std::make_unique<api::Service>(std::move(cfg));
  }

  api::Response call(std::string method, std::string path, std::string body = {},
                     std::map<std::string, std::string> query = {}, std::map<std::string, std::string> headers = {}) {
    api::Request req{std::move(method), std::move(path), std::move(query), std::move(headers), std::move(body), {}};
    auto res = service->handle(req);
    bodies.push_back(res.body);
    return res;
  }

  json call_json(std::string method, std::string path, const json& body, int expected_status) {
    auto res = call(std::move(method), std::move(path), body.is_null() ? std::string{} : body.dump());
    CHECK_MESSAGE(res.status == expected_status, res.body);
    return json::parse(res.body);
  }

  json create(const json& body) { return call_json("POST", "/api/sessions", body, 201); }
  json turn(const std::string& id) { return call_json("GET", "/api/sessions/" + id + "/turn", nullptr, 200); }
  json choose(const std::string& id, const std::string& option, int status = 200) {
    return call_json("POST", "/api/sessions/" + id + "/choice", {{"option_id", option}}, status);
  }
};

}  // namespace

TEST_CASE("healthz") {
  Fixture f;
  const auto res = f.call("GET", "/healthz");
  CHECK(res.status == 200);
  CHECK(json::parse(res.body) == json{{"status", "ok"}});
}

TEST_CASE("creating sessions") {
  Fixture f;
  REQUIRE(f.service->ready());

  SUBCASE("roleplay greets the trainee by name") {
    const auto j = f.create({{"mode", "roleplay"}, {"bindings", {{"user.first_name", "Ana"}}}});
    CHECK(j["session_id"].get<std::string>().size() == 32);
    CHECK(j["status"] == "awaiting_choice");
    const auto& first = j["events"][0];
    CHECK(first["kind"] == "AgentUtterance");
    CHECK(first["text"].get<std::string>().find("Ana") != std::string::npos);
    CHECK_FALSE(j["options"].empty());
  }
  SUBCASE("video plays to completion") {
    const auto j = f.create({{"mode", "video"}});
    CHECK(j["status"] == "completed");
    CHECK(j["events"].back()["kind"] == "SessionCompleted");
    CHECK(j["options"].empty());
    const auto progress = f.call_json("GET", "/api/sessions/" + j["session_id"].get<std::string>() + "/progress",
                                      nullptr, 200);
    CHECK(progress["skills_completed"] == 6);
    CHECK(progress["skills_total"] == 6);
  }
  SUBCASE("bad modes and bindings") {
    CHECK(f.call_json("POST", "/api/sessions", {{"mode", "flying"}}, 400)["code"] == "INVALID_MODE");
    CHECK(f.call_json("POST", "/api/sessions", json::object(), 400)["code"] == "INVALID_MODE");
    CHECK(f.call_json("POST", "/api/sessions", {{"mode", "roleplay"}, {"bindings", {{"user.first_name", 3}}}},
                      400)["code"] == "INVALID_BINDINGS");
    CHECK(f.call("POST", "/api/sessions", "not json").status == 400);
  }
  SUBCASE("a stored user's profile fills missing bindings") {
    f.create({{"mode", "roleplay"}, {"user_id", "ana"}, {"bindings", {{"user.first_name", "Ana"}}}});
    const auto again = f.create({{"mode", "roleplay"}, {"user_id", "ana"}});
    CHECK(again["events"][0]["text"].get<std::string>().find("Ana") != std::string::npos);
  }
}

TEST_CASE("an unloadable curriculum makes session creation answer 422") {
  testing::TempDir data;
  testing::TempDir bad;
  std::ofstream(bad.path() / "manifest.json") << R"({"script": "missing.miscript", "skills": []})";
  api::ServiceConfig cfg;
  cfg.data_dir = data.path();
  cfg.curriculum_dir = bad.path();
  api::Service service(std::move(cfg));
  CHECK_FALSE(service.ready());
  const auto res = service.handle({"POST", "/api/sessions", {}, {}, R"({"mode":"roleplay"})", {}});
  CHECK(res.status == 422);
  CHECK(service.handle({"GET", "/healthz", {}, {}, {}, {}}).status == 200);
}

TEST_CASE("turn polling") {
  Fixture f(true);
  const auto created = f.create({{"mode", "roleplay"}});
  const auto id = created["session_id"].get<std::string>();

  const auto t = f.turn(id);
  CHECK(t["status"] == "awaiting_choice");
  CHECK(t["events"] == created["events"]);
  CHECK(t["options"].size() == 1);
  CHECK(t["last_seq"] == 2);

  f.choose(id, "1");
  const auto t5 = f.call_json("GET", "/api/sessions/" + id + "/turn", nullptr, 200);
  REQUIRE(t5["last_seq"] == 5);
  const auto after5 = f.call("GET", "/api/sessions/" + id + "/turn", {}, {{"after", "5"}});
  CHECK(json::parse(after5.body)["events"].empty());
  const auto after3 = json::parse(f.call("GET", "/api/sessions/" + id + "/turn", {}, {{"after", "3"}}).body);
  REQUIRE(after3["events"].size() == 2);
  CHECK(after3["events"][0]["seq"] == 4);
  CHECK(f.call("GET", "/api/sessions/" + id + "/turn", {}, {{"after", "x"}}).status == 400);

  const auto missing = f.call("GET", "/api/sessions/deadbeef/turn");
  CHECK(missing.status == 404);
  CHECK(json::parse(missing.body)["code"] == "UNKNOWN_SESSION");
}

TEST_CASE("options are present exactly when a choice is awaited") {
  Fixture f;
  for (const char* mode : {"roleplay", "didactic", "video"}) {
    const auto id = f.create({{"mode", mode}})["session_id"].get<std::string>();
    const auto t = f.turn(id);
    CHECK((t["status"] == "awaiting_choice") == !t["options"].empty());
  }
}

TEST_CASE("choices") {
  Fixture f(true);
  const auto id = f.create({{"mode", "roleplay"}, {"bindings", {{"user.first_name", "Ana"}}}})["session_id"]
                      .get<std::string>();
  f.choose(id, "1");  // into the role-play

  SUBCASE("adherent reply") {
    const auto j = f.choose(id, "2");
    CHECK(j["events"].back()["kind"] == "MenuShown");
    CHECK(j["events"][0]["kind"] == "ChoiceMade");
  }
  SUBCASE("nonadherent reply fails the role-play and offers a retry") {
    const auto j = f.choose(id, "1");
    std::vector<std::string> kinds;
    for (const auto& e : j["events"]) kinds.push_back(e["kind"]);
    CHECK(kinds == std::vector<std::string>{"ChoiceMade", "FailureUtterance", "SegmentFailed", "AgentUtterance",
                                            "MenuShown"});
    CHECK(j["options"][0]["label"] == "Try again.");
    const auto progress = f.call_json("GET", "/api/sessions/" + id + "/progress", nullptr, 200);
    CHECK(progress["mistakes"] == 1);
  }
  SUBCASE("unknown option and completed session") {
    CHECK(f.choose(id, "7", 400)["code"] == "UNKNOWN_OPTION");
    f.choose(id, "2");
    f.choose(id, "1");
    const auto done = f.turn(id);
    CHECK(done["status"] == "completed");
    CHECK(f.choose(id, "1", 409)["code"] == "ENGINE_HALTED");
  }
  SUBCASE("malformed bodies") {
    CHECK(f.call_json("POST", "/api/sessions/" + id + "/choice", json::object(), 400)["code"] == "BAD_REQUEST");
  }
  CHECK(f.choose("nope", "1", 404)["code"] == "UNKNOWN_SESSION");
}

TEST_CASE("a retried choice is idempotent") {
  Fixture f(true);
  const auto id = f.create({{"mode", "roleplay"}})["session_id"].get<std::string>();
  const json body{{"option_id", "1"}, {"seq", 2}};
  const auto first = f.call_json("POST", "/api/sessions/" + id + "/choice", body, 200);
  const auto second = f.call_json("POST", "/api/sessions/" + id + "/choice", body, 200);
  CHECK(first["events"] == second["events"]);

  store::Store store(f.dir.path());
  const auto log = store.read_log(id);
  CHECK(std::count_if(log.records.begin(), log.records.end(), [](const auto& r) {
          return r.event.kind == engine::EventKind::ChoiceMade;
        }) == 1);

  // A retry that names a different option than was recorded is refused.
  const auto conflicting = f.call_json("POST", "/api/sessions/" + id + "/choice", {{"option_id", "2"}, {"seq", 2}}, 409);
  CHECK(conflicting["code"] == "STALE_SEQ");
  // The current seq advances normally.
  const auto next = f.call_json("POST", "/api/sessions/" + id + "/choice",
                                {{"option_id", "2"}, {"seq", first["events"].back()["seq"]}}, 200);
  CHECK(next["events"][0]["kind"] == "ChoiceMade");
}

TEST_CASE("sessions survive a service restart") {
  testing::TempDir dir;
  std::string id;
  auto make = [&] {
    api::ServiceConfig cfg;
    cfg.data_dir = dir.path();
    cfg.program = sample();
    return std::make_unique<api::Service>(std::move(cfg));
  };
  json before;
  {
    auto s = make();
    id = json::parse(s->handle({"POST", "/api/sessions", {}, {}, R"({"mode":"roleplay"})", {}}).body)["session_id"];
    s->handle({"POST", "/api/sessions/" + id + "/choice", {}, {}, R"({"option_id":"1"})", {}});
    before = json::parse(s->handle({"GET", "/api/sessions/" + id + "/turn", {}, {}, {}, {}}).body);
  }
  auto s = make();
  const auto after = json::parse(s->handle({"GET", "/api/sessions/" + id + "/turn", {}, {}, {}, {}}).body);
  CHECK(after == before);
  CHECK(s->handle({"POST", "/api/sessions/" + id + "/choice", {}, {}, R"({"option_id":"2"})", {}}).status == 200);
}

TEST_CASE("exports") {
  Fixture f(true);
  const auto id = f.create({{"mode", "roleplay"}})["session_id"].get<std::string>();
  f.choose(id, "1");
  f.choose(id, "1");
  const std::map<std::string, std::string> auth{{"authorization", std::string("Bearer ") + kToken}};
  store::Store store(f.dir.path());

  const auto jsonl = f.call("GET", "/api/sessions/" + id + "/export", {}, {{"format", "jsonl"}}, auth);
  CHECK(jsonl.status == 200);
  CHECK(jsonl.content_type == "application/x-ndjson");
  CHECK(jsonl.body == store.export_events(id, store::ExportFormat::jsonl));

  const auto csv = f.call("GET", "/api/sessions/" + id + "/export", {}, {{"format", "csv"}}, auth);
  CHECK(csv.content_type == "text/csv");
  CHECK(csv.body == store.export_events(id, store::ExportFormat::csv));

  CHECK(f.call("GET", "/api/sessions/" + id + "/export", {}, {{"format", "jsonl"}}).status == 401);
  CHECK(f.call("GET", "/api/sessions/" + id + "/export", {}, {{"format", "jsonl"}},
                {{"authorization", "Bearer wrong"}})
            .status == 401);
  CHECK(f.call("GET", "/api/sessions/" + id + "/export", {}, {{"format", "xml"}}, auth).status == 400);
  CHECK(f.call("GET", "/api/sessions/nope/export", {}, {{"format", "csv"}}, auth).status == 404);
  f.bodies.clear();  // researcher exports legitimately carry adherence
}

TEST_CASE("script uploads") {
  Fixture f;
  const std::map<std::string, std::string> auth{{"authorization", std::string("Bearer ") + kToken}};
  const std::string three_options = R"(script "t" version 1 entry lesson
segment lesson (kind=pedagogy, agent=clara) {
  state a { call rp onfail a
    end }
}
segment rp (kind=roleplay, agent=mary) {
  state s {
    say "Hi."
    menu {
      option adherent "A" -> done
      option nonadherent "B" -> !fail
      option nonadherent "C" -> !fail
    }
  }
  state done { end }
  failure { say "Bye." }
}
)";
  api::Request req{"POST", "/api/scripts", {}, auth, {}, {{"script", three_options}}};
  auto res = f.service->handle(req);
  CHECK(res.status == 422);
  const auto j = json::parse(res.body);
  CHECK(j["code"] == "VALIDATION_FAILED");
  bool has_limit = false;
  for (const auto& d : j["report"]["errors"]) has_limit |= d["code"] == "OPTION_LIMIT";
  CHECK(has_limit);

  req.files = {{"script", read_file(testing::kCurriculumDir / "sample.miscript")}};
  res = f.service->handle(req);
  CHECK(res.status == 200);
  CHECK(json::parse(res.body)["errors"].empty());

  req.files.clear();
  req.body = "script \"x\" version 1 entry a\nsegment a (kind=pedagogy agent=c) {}";
  res = f.service->handle(req);
  CHECK(res.status == 422);
  CHECK(json::parse(res.body)["code"] == "PARSE_ERROR");
  CHECK(json::parse(res.body).contains("location"));

  req.headers.clear();
  CHECK(f.service->handle(req).status == 401);
}

TEST_CASE("routing errors") {
  Fixture f;
  CHECK(f.call("GET", "/api/nothing").status == 404);
  CHECK(f.call("DELETE", "/api/sessions").status == 405);
  CHECK(f.call("GET", "/api/sessions/x/choice").status == 405);
}

TEST_CASE("property: API streams equal engine streams under the trainee projection") {
  Fixture f;
  const auto program = curriculum::load_curriculum(testing::kCurriculumDir).program;
  std::mt19937_64 rng(77);
  for (int run = 0; run < 20; ++run) {
    const auto mode = run % 3 == 0 ? engine::Mode::didactic : engine::Mode::roleplay;
    const auto created = f.create({{"mode", std::string(engine::to_string(mode))},
                                   {"bindings", {{"user.first_name", "Ana"}, {"place", "the pharmacy"}}}});
    const auto id = created["session_id"].get<std::string>();
    auto step = engine::start_session(program, mode, testing::default_bindings(), {id});

    auto project = [](const std::vector<engine::TurnEvent>& events) {
      json arr = json::array();
      for (const auto& e : events) arr.push_back(store::event_to_json(e, store::Audience::trainee));
      return arr;
    };
    CHECK(created["events"] == project(step.events));
    for (int i = 0; i < 40 && step.state.status == engine::Status::awaiting_choice; ++i) {
      const auto opts = engine::pending_options(program, step.state);
      const auto& pick = opts[rng() % opts.size()].id;
      const auto api = f.choose(id, pick);
      step = engine::advance(program, step.state, pick);
      REQUIRE(api["events"] == project(step.events));
    }
  }
}

TEST_CASE("schema: no trainee-facing body mentions adherence") {
  Fixture f(true);
  const auto id = f.create({{"mode", "roleplay"}})["session_id"].get<std::string>();
  f.turn(id);
  for (const char* pick : {"1", "1", "1", "2", "2", "1"}) f.choose(id, pick, 200);
  f.call("GET", "/api/sessions/" + id + "/progress");
  f.call("GET", "/api/sessions/" + id + "/turn");
  f.create({{"mode", "video"}});
  f.create({{"mode", "didactic"}});
  REQUIRE(f.bodies.size() > 10);
  for (const auto& body : f.bodies) {
    CHECK(body.find("adheren") == std::string::npos);
  }
}

TEST_CASE("http smoke test") {
  Fixture f(true);
  api::HttpServer server(*f.service);
  const int port = server.start();
  REQUIRE(port > 0);
  httplib::Client client("127.0.0.1", port);

  auto health = client.Get("/healthz");
  REQUIRE(health);
  CHECK(health->status == 200);

  auto created = client.Post("/api/sessions", R"({"mode":"roleplay","bindings":{"user.first_name":"Ana"}})",
                             "application/json");
  REQUIRE(created);
  CHECK(created->status == 201);
  const auto id = json::parse(created->body)["session_id"].get<std::string>();

  auto turn = client.Get("/api/sessions/" + id + "/turn?after=1");
  REQUIRE(turn);
  CHECK(json::parse(turn->body)["events"].size() == 1);

  auto choice = client.Post("/api/sessions/" + id + "/choice", R"({"option_id":"1"})", "application/json");
  REQUIRE(choice);
  CHECK(choice->status == 200);

  httplib::Headers auth{{"Authorization", std::string("Bearer ") + kToken}};
  auto exported = client.Get("/api/sessions/" + id + "/export?format=csv", auth);
  REQUIRE(exported);
  CHECK(exported->status == 200);
  CHECK(exported->body.starts_with("ts,seq,kind,segment,adherence\r\n"));

  httplib::MultipartFormDataItems items{
      {"script", read_file(testing::kCurriculumDir / "sample.miscript"), "sample.miscript", "text/plain"}};
  auto uploaded = client.Post("/api/scripts", auth, items);
  REQUIRE(uploaded);
  CHECK(uploaded->status == 200);
  server.stop();
}
