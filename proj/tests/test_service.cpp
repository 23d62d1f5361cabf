#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <thread>

#include <unistd.h>

#include <httplib.h>

#include "bpcheck/errors.hpp"
#include "bpcheck/serialization.hpp"
#include "bpcheck/service.hpp"
#include "support/synthetic.hpp"

using namespace bpcheck;
namespace fs = std::filesystem;

namespace {

// Fails for inputs containing "FAIL", otherwise defers to the reference rules.
class FlakyBackend final : public Backend {
 public:
  std::vector<Candidate> analyze_raw(std::string_view input, const DecodeConfig& cfg) const override {
    if (input.find("FAIL") != std::string_view::npos) throw TransportError("flaky", "timed out");
    return ref_.analyze_raw(input, cfg);
  }
  std::string identity() const override { return "flaky"; }

 private:
  ReferenceBackend ref_;
};

fs::path temp_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("bpcheck_svc_" + std::to_string(::getpid())) / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write(const fs::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary | std::ios::trunc) << text;
}

AnalysisService make_service(std::shared_ptr<const Backend> backend, ConfigSources sources = {}) {
  return AnalysisService(std::make_shared<ConfigStore>(std::move(sources)), std::move(backend));
}

const std::string kGoFile = synth::add_go_example();

}  // namespace

TEST_CASE("analyze the Go example") {
  const auto service = make_service(std::make_shared<ReferenceBackend>());
  const auto res = service.handle_analyze({{{"addition/add.go", "go", kGoFile}}, std::nullopt, std::nullopt});
  REQUIRE(res.comments.size() == 1);
  CHECK(res.comments[0].url == synth::kFuncUrl);
  CHECK(res.comments[0].start.line == 5);
  CHECK(res.errors.empty());
  CHECK(res.stats.posted == 1);

  const auto beam_res = service.handle_analyze({{{"addition/add.go", "go", kGoFile}}, std::nullopt, Strategy::beam});
  CHECK(beam_res.comments.size() == 1);
  CHECK(beam_res.stats.candidates == 3);
  CHECK(beam_res.stats.below_threshold == 2);
}

TEST_CASE("empty request and request-level errors") {
  const auto service = make_service(std::make_shared<ReferenceBackend>());
  const auto empty = service.handle_analyze({});
  CHECK(empty.comments.empty());
  CHECK(empty.errors.empty());

  auto status_of = [&](const AnalyzeRequest& req) {
    try {
      service.handle_analyze(req);
    } catch (const RequestError& e) {
      return e.status();
    }
    return 200;
  };
  CHECK(status_of({{{"x.rb", "ruby", "puts 1\n"}}, std::nullopt, std::nullopt}) == 400);
  CHECK(status_of({{{"a.go", "go", kGoFile}, {"a.go", "go", kGoFile}}, std::nullopt, std::nullopt}) == 400);
  CHECK(status_of({{{"a.go", "go", kGoFile}}, std::string("@@ -1 +x @@\n"), std::nullopt}) == 400);

  try {
    service.handle_analyze({{{"x.rb", "ruby", ""}}, std::nullopt, std::nullopt});
  } catch (const RequestError& e) {
    CHECK(std::string(e.what()).find("ruby") != std::string::npos);
  }
}

TEST_CASE("partial backend failure is reported per file") {
  const auto service = make_service(std::make_shared<FlakyBackend>());
  const auto res = service.handle_analyze(
      {{{"addition/add.go", "go", kGoFile}, {"bad.go", "go", "package FAIL\n"}}, std::nullopt, std::nullopt});
  CHECK(res.comments.size() == 1);
  REQUIRE(res.errors.size() == 1);
  CHECK(res.errors[0].path == "bad.go");
  CHECK(res.errors[0].kind == "backend");

  try {
    service.handle_analyze({{{"bad.go", "go", "package FAIL\n"}}, std::nullopt, std::nullopt});
    FAIL("expected a 502");
  } catch (const RequestError& e) {
    CHECK(e.status() == 502);
  }
}

TEST_CASE("identical requests give identical responses apart from elapsed time") {
  const auto service = make_service(std::make_shared<ReferenceBackend>());
  const AnalyzeRequest req{{{"addition/add.go", "go", kGoFile}, {"b.go", "go", kGoFile}}, std::nullopt, Strategy::beam};
  auto strip = [](std::string body) {
    auto j = json::parse(body);
    j.erase("elapsed_ms");
    return j.dump();
  };
  CHECK(strip(analyze_response_json(service.handle_analyze(req))) ==
        strip(analyze_response_json(service.handle_analyze(req))));
}

TEST_CASE("config store loads, fails fast and reloads on rules edits") {
  const auto dir = temp_dir("store");
  write(dir / "thresholds.cfg", "default 0.5\n");
  write(dir / "rules.jsonl", "");
  ConfigSources sources;
  sources.fill_from_directory(dir);
  CHECK(sources.thresholds.has_value());
  CHECK_FALSE(sources.prompts.has_value());

  ConfigStore store(sources);
  CHECK(store.current()->thresholds.default_t == 0.5);
  const auto first_print = store.fingerprint();
  CHECK(first_print.size() == 16);
  CHECK_FALSE(store.reload_if_rules_changed());

  write(dir / "rules.jsonl", R"({"url_pattern":"https://go.dev/","reason":"go docs muted"})" "\n");
  CHECK(store.reload_if_rules_changed());
  CHECK(store.current()->rules.size() == 1);
  CHECK(store.fingerprint() != first_print);

  // A malformed edit keeps the previous snapshot.
  write(dir / "rules.jsonl", "{broken\n");
  CHECK_FALSE(store.reload_if_rules_changed());
  CHECK(store.current()->rules.size() == 1);
  CHECK_THROWS_AS(store.reload(), ConfigError);
  CHECK(store.current()->rules.size() == 1);

  write(dir / "thresholds.cfg", "default 7\n");
  CHECK_THROWS_AS(ConfigStore{sources}, ConfigError);
}

TEST_CASE("HTTP routes") {
  const auto dir = temp_dir("http");
  write(dir / "rules.jsonl", "");
  ConfigSources sources;
  sources.fill_from_directory(dir);
  auto store = std::make_shared<ConfigStore>(sources);
  auto feedback = std::make_shared<FeedbackLog>(dir / "feedback.jsonl");
  AnalysisService service(store, std::make_shared<FlakyBackend>(), feedback);

  httplib::Server server;
  install_routes(server, service);
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread worker([&] { server.listen_after_bind(); });
  server.wait_until_ready();
  httplib::Client client("127.0.0.1", port);

  const json go_request = {{"files", {{{"path", "addition/add.go"}, {"language", "go"}, {"content", kGoFile}}}}};

  auto health = client.Get("/v1/health");
  REQUIRE(health);
  CHECK(health->status == 200);
  const auto h = json::parse(health->body);
  CHECK(h.at("backend") == "flaky");
  CHECK(h.at("config_fingerprint") == store->fingerprint());

  auto analyzed = client.Post("/v1/analyze", go_request.dump(), "application/json");
  REQUIRE(analyzed);
  CHECK(analyzed->status == 200);
  auto body = json::parse(analyzed->body);
  REQUIRE(body.at("comments").size() == 1);
  CHECK(body["comments"][0].at("url") == synth::kFuncUrl);
  CHECK(body.at("stats").at("posted") == 1);

  auto bad = client.Post("/v1/analyze", "{nope", "application/json");
  REQUIRE(bad);
  CHECK(bad->status == 400);
  const json ruby = {{"files", {{{"path", "a.rb"}, {"language", "ruby"}, {"content", ""}}}}};
  CHECK(client.Post("/v1/analyze", ruby.dump(), "application/json")->status == 400);
  const json failing = {{"files", {{{"path", "a.go"}, {"language", "go"}, {"content", "FAIL"}}}}};
  CHECK(client.Post("/v1/analyze", failing.dump(), "application/json")->status == 502);

  // Rules edits apply to the next request.
  write(dir / "rules.jsonl", std::string(R"({"url_pattern":")") + synth::kFuncUrl + R"(","reason":"muted"})" "\n");
  analyzed = client.Post("/v1/analyze", go_request.dump(), "application/json");
  body = json::parse(analyzed->body);
  CHECK(body.at("comments").empty());
  REQUIRE(body.at("suppressed").size() == 1);
  CHECK(body["suppressed"][0].at("reason") == "muted");

  auto reload = client.Post("/v1/reload", "", "application/json");
  REQUIRE(reload);
  CHECK(reload->status == 200);

  const json event = {{"event_id", "e1"}, {"comment_id", "c1"}, {"kind", "thumbs_up"}, {"surface", "ide"}, {"created_at", 5}};
  auto fb = client.Post("/v1/feedback", event.dump(), "application/json");
  REQUIRE(fb);
  CHECK(fb->status == 200);
  CHECK(json::parse(fb->body).at("sequence") == 1);
  json bad_event = event;
  bad_event["kind"] = "meh";
  CHECK(client.Post("/v1/feedback", bad_event.dump(), "application/json")->status == 400);
  bad_event = event;
  bad_event["comment_id"] = "";
  CHECK(client.Post("/v1/feedback", bad_event.dump(), "application/json")->status == 400);
  CHECK(feedback->read_all().size() == 1);

  server.stop();
  worker.join();
}
