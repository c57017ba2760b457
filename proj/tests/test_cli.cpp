#include <doctest.h>

#include "cli.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result call(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = hybridfuse::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t count_lines_with(const std::string& text, const std::string& needle) {
  std::istringstream in(text);
  std::size_t n = 0;
  for (std::string l; std::getline(in, l);) n += l.find(needle) != std::string::npos ? 1 : 0;
  return n;
}

}  // namespace

TEST_CASE("usage errors exit with 2") {
  CHECK(call({"classify", "--session", "x", "--model", "y", "--threshold", "1.01"}).code == 2);
  CHECK(call({"simulate"}).code == 2);
  CHECK(call({"no-such-command"}).code == 2);
  CHECK(call({"analyze", "wobble", "--session", "x"}).code == 2);
  CHECK(call({"--help"}).code == 0);
}

TEST_CASE("domain errors exit with 1") {
  const auto r = call({"classify", "--session", "/nonexistent/hf", "--model", "/nonexistent/m.json"});
  CHECK(r.code == 1);
  CHECK_FALSE(r.err.empty());
}

TEST_CASE("simulate, train and classify are reproducible") {
  const fs::path root = fs::temp_directory_path() / "hf_cli";
  fs::remove_all(root);
  const std::string calib = (root / "calib").string();
  const std::string online = (root / "online").string();
  const std::string models = (root / "models").string();

  REQUIRE(call({"simulate", "--out", calib, "--subjects", "2", "--trials", "4", "--feature-dim", "24", "--seed", "3"})
              .code == 0);
  REQUIRE(call({"simulate", "--out", online, "--subjects", "2", "--trials", "5", "--feature-dim", "24", "--seed", "4",
                "--unlabeled"})
              .code == 0);
  const auto t = call({"train", "--session", calib, "--out", models});
  REQUIRE(t.code == 0);
  CHECK(fs::is_regular_file(root / "models" / "subject_01.json"));
  CHECK(fs::is_regular_file(root / "models" / "subject_02.json"));

  const auto first = call({"classify", "--session", online, "--model", models, "--out", (root / "r1").string()});
  REQUIRE(first.code == 0);
  CHECK(count_lines_with(first.out, "fused ") == 3);  // one per subject plus the overall line
  CHECK(count_lines_with(first.out, "overall:") == 1);
  const auto second = call({"classify", "--session", online, "--model", models, "--out", (root / "r2").string()});
  REQUIRE(second.code == 0);
  for (const char* s : {"subject_01", "subject_02"}) {
    const auto a = slurp(root / "r1" / s / "decisions.csv");
    CHECK_FALSE(a.empty());
    CHECK(a == slurp(root / "r2" / s / "decisions.csv"));
  }

  const auto report = call({"report", "--session", (root / "online" / "subject_01").string(), "--model", models,
                            "--out", (root / "rep").string(), "--fallback", "reject"});
  CHECK(report.code == 0);
  CHECK(fs::is_regular_file(root / "rep" / "overlay.svg"));

  for (const char* kind : {"gaze", "ellipse", "pupil", "heatmap"}) {
    const auto a = call({"analyze", kind, "--session", (root / "online" / "subject_01").string()});
    CHECK(a.code == 0);
    CHECK_FALSE(a.out.empty());
  }
  fs::remove_all(root);
}
