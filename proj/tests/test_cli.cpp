#include <doctest.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <sys/wait.h>
#include <unistd.h>

#include "bpcheck/serialization.hpp"
#include "support/synthetic.hpp"

using namespace bpcheck;
namespace fs = std::filesystem;

namespace {

struct Run {
  int status = -1;
  std::string out;
  std::string err;
};

fs::path work_dir() {
  static const auto dir = [] {
    const auto d = fs::temp_directory_path() / ("bpcheck_cli_" + std::to_string(::getpid()));
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write(const fs::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary | std::ios::trunc) << text;
}

Run run(const std::string& args) {
  const auto err_path = work_dir() / "stderr.txt";
  const std::string cmd = std::string(BPCHECK_CLI) + " " + args + " 2>" + err_path.string();
  Run r;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::array<char, 4096> buf{};
  std::size_t n = 0;
  while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), n);
  const int raw = ::pclose(pipe);
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  r.err = slurp(err_path);
  return r;
}

}  // namespace

TEST_CASE("analyze prints the Go example comment") {
  const auto dir = work_dir() / "addition";
  fs::create_directories(dir);
  write(dir / "add.go", synth::add_go_example());
  write(work_dir() / "t.cfg", "default 0.98\n");

  const auto r = run("--thresholds " + (work_dir() / "t.cfg").string() + " --strategy greedy analyze --file " +
                     (dir / "add.go").string());
  CHECK(r.status == 0);
  CHECK(r.out.find(":5:1: https://go.dev/doc/comment#func (0.99)") != std::string::npos);
  CHECK(std::count(r.out.begin(), r.out.end(), '\n') == 1);

  const auto j = run("--strategy greedy analyze --json --file " + (dir / "add.go").string());
  CHECK(j.status == 0);
  const auto body = json::parse(j.out);
  REQUIRE(body.at("comments").size() == 1);
  CHECK(body["comments"][0].at("offset") == 67);
}

TEST_CASE("calibrate with no cases fails with a message") {
  write(work_dir() / "empty.jsonl", "");
  const auto r = run("calibrate --cases " + (work_dir() / "empty.jsonl").string());
  CHECK(r.status != 0);
  CHECK(r.err.find("no evaluation cases") != std::string::npos);
}

TEST_CASE("calibrate writes a threshold table") {
  std::string cases;
  for (int i = 0; i < 10; ++i) {
    const json c = {{"example_id", "e" + std::to_string(i)},
                    {"expected", i < 9 ? json::array({{{"offset", i}, {"url", "https://u"}}}) : json::array()},
                    {"predicted", {{{"offset", i}, {"url", "https://u"}, {"score", i < 9 ? 0.9 : 0.6}}}}};
    cases += c.dump() + "\n";
  }
  write(work_dir() / "cases.jsonl", cases);
  const auto table = work_dir() / "fitted.cfg";
  const auto r = run("--out " + table.string() + " calibrate --target-precision 0.95 --cases " +
                     (work_dir() / "cases.jsonl").string());
  CHECK(r.status == 0);
  const auto text = slurp(table);
  CHECK(text.find("https://u 0.6") != std::string::npos);
}

TEST_CASE("replay over the synthetic corpus matches the recount") {
  const auto corpus = synth::replay_corpus(99, 200);
  std::string lines;
  for (const auto& cf : corpus) lines += json(cf.file).dump() + "\n";
  write(work_dir() / "corpus.jsonl", lines);
  write(work_dir() / "t80.cfg", "default 0.8\n");
  const auto report_path = work_dir() / "report.json";

  const auto r = run("--thresholds " + (work_dir() / "t80.cfg").string() + " --out " + report_path.string() +
                     " replay --corpus " + (work_dir() / "corpus.jsonl").string());
  REQUIRE(r.status == 0);
  const auto report = json::parse(slurp(report_path));

  std::size_t changed = 0, with_comments = 0, total = 0;
  for (const auto& cf : corpus) {
    if (!cf.counted_as_changed) continue;
    ++changed;
    const auto exp = synth::expected_comments(cf.file.snapshot.path, cf.planted, 4, 0.8, cf.changed_lines);
    with_comments += exp.empty() ? 0 : 1;
    total += exp.size();
  }
  CHECK(report.at("files_total") == 200);
  CHECK(report.at("files_changed") == changed);
  CHECK(report.at("files_with_comments") == with_comments);
  CHECK(report.at("comments_total") == total);
}

TEST_CASE("curate, split and report run end to end") {
  FileSnapshot snap;
  snap.review_id = "r1";
  snap.snapshot_id = 1;
  snap.path = "addition/add.go";
  snap.language = Language::go;
  snap.content = synth::add_go_example();
  ReviewComment c;
  c.comment_id = "c1";
  c.review_id = "r1";
  c.snapshot_id = 1;
  c.path = snap.path;
  c.start_offset = 67;
  c.end_offset = 67;
  c.text = "Doc comments start with the name, see https://go.dev/doc/comment#func";
  c.created_at = 100;
  write(work_dir() / "archive.jsonl", json(snap).dump() + "\n" + json(c).dump() + "\n");
  write(work_dir() / "allow.txt", "https://go.dev/\n");

  const auto examples = work_dir() / "examples.jsonl";
  auto r = run("--out " + examples.string() + " curate --archive " + (work_dir() / "archive.jsonl").string() +
               " --allowlist " + (work_dir() / "allow.txt").string());
  REQUIRE(r.status == 0);
  const auto ex = json::parse(slurp(examples));
  CHECK(ex.at("target") == "INSERT 67 COMMENT https://go.dev/doc/comment#func");

  const auto split_dir = work_dir() / "split";
  r = run("split --examples " + examples.string() + " --cut1 50 --cut2 150 --out-dir " + split_dir.string());
  CHECK(r.status == 0);
  CHECK(slurp(split_dir / "train.jsonl").empty());
  CHECK(!slurp(split_dir / "validation.jsonl").empty());

  write(work_dir() / "fb.jsonl",
        R"({"event_id":"1","comment_id":"a","kind":"thumbs_up","surface":"ide","created_at":1})" "\n"
        R"({"event_id":"2","comment_id":"b","kind":"thumbs_down","surface":"review","created_at":2})" "\n");
  r = run("report --feedback-log " + (work_dir() / "fb.jsonl").string());
  CHECK(r.status == 0);
  CHECK((r.out + r.err).find("0.5") != std::string::npos);
}

TEST_CASE("usage errors exit nonzero") {
  auto r = run("frobnicate");
  CHECK(r.status != 0);
  CHECK(r.err.find("Usage") != std::string::npos);
  r = run("analyze --bogus-flag");
  CHECK(r.status != 0);
  r = run("analyze --file /nonexistent/x.go");
  CHECK(r.status != 0);
  CHECK_FALSE(r.err.empty());
}
