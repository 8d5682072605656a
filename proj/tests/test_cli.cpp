#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

struct Outcome {
  int status = -1;
  std::string out;
};

Outcome cli(const std::string& args) {
  const std::string cmd = std::string(UNROLL_CLI_PATH) + " " + args + " 2>&1";
  Outcome o;
  FILE* p = popen(cmd.c_str(), "r");
  REQUIRE(p != nullptr);
  std::array<char, 4096> buf{};
  std::size_t n;
  while ((n = std::fread(buf.data(), 1, buf.size(), p)) > 0) o.out.append(buf.data(), n);
  const int raw = pclose(p);
  o.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return o;
}

fs::path scratch(const std::string& name) {
  const auto d = fs::temp_directory_path() / ("unroll_test_cli_" + name);
  fs::remove_all(d);
  return d;
}

}  // namespace

TEST_CASE("verify succeeds on a small preset") {
  const auto r = cli("verify --preset gemmt-RP-S --sparsity 0.5 --bits 4 --trials 20");
  CAPTURE(r.out);
  CHECK(r.status == 0);
  CHECK(r.out.find("PASS") != std::string::npos);
}

TEST_CASE("estimate prints a cost report") {
  const auto r = cli("estimate --preset conv2d-PW-S --arch K6");
  CAPTURE(r.out);
  REQUIRE(r.status == 0);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j.at("arch") == "K6");
  CHECK(j.at("lb_count").get<int>() > 0);
  CHECK(j.at("logic_area_um2").get<double>() > 0.0);
}

TEST_CASE("usage errors exit with status 2") {
  CHECK(cli("sweep --config /nonexistent/missing.json").status == 2);
  CHECK(cli("sweep").status == 2);
  CHECK(cli("verify --preset not-a-preset").status == 2);
  CHECK(cli("verify --preset gemmt-RP-S --bogus-flag").status == 2);
  CHECK(cli("verify --preset gemmt-RP-S --sparsity 1.5").status == 2);
  CHECK(cli("estimate --preset gemmt-RP-S --arch K9").status == 2);
  CHECK(cli("").status == 2);
  CHECK(cli("frobnicate").status == 2);
}

TEST_CASE("generate writes a design directory") {
  const auto dir = scratch("generate");
  const auto r = cli("generate --preset gemmt-FU-S --bits 2 --sparsity 0.5 --out " + dir.string());
  CAPTURE(r.out);
  REQUIRE(r.status == 0);
  for (const char* f : {"kernel_top.sv", "kernel_top_tb.sv", "weights.txt", "inputs.txt", "graph.txt"}) {
    CAPTURE(f);
    CHECK(fs::exists(dir / f));
  }
  const auto again = scratch("generate2");
  REQUIRE(cli("generate --preset gemmt-FU-S --bits 2 --sparsity 0.5 --out " + again.string()).status == 0);
  auto slurp = [](const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(f), {});
  };
  CHECK(slurp(dir / "kernel_top.sv") == slurp(again / "kernel_top.sv"));
  CHECK(slurp(dir / "kernel_top_tb.sv") == slurp(again / "kernel_top_tb.sv"));

  const auto flow = scratch("flow");
  const auto f = cli("emit-flow --designs " + dir.parent_path().string() + " --preset gemmt-RP-S --target vtr_like --out " +
                     flow.string());
  CAPTURE(f.out);
  CHECK(f.status == 0);
  CHECK(fs::exists(flow / "flow_manifest.txt"));
  fs::remove_all(dir);
  fs::remove_all(again);
  fs::remove_all(flow);
}

TEST_CASE("simulate replays stored tensors and writes a trace") {
  const auto dir = scratch("simulate");
  REQUIRE(cli("generate --preset conv1d-FU-S --bits 2 --out " + dir.string()).status == 0);
  const auto trace = dir / "trace.csv";
  const auto r = cli("simulate --preset conv1d-FU-S --bits 2 --weights " + (dir / "weights.txt").string() +
                     " --inputs " + (dir / "inputs.txt").string() + " --trace " + trace.string());
  CAPTURE(r.out);
  CHECK(r.status == 0);
  CHECK(fs::exists(trace));
  fs::remove_all(dir);
}

TEST_CASE("sweep runs from a config file") {
  const auto dir = scratch("sweep");
  fs::create_directories(dir);
  const auto cfg = dir / "sweep.json";
  std::ofstream(cfg) << R"({"kernels": [{"name": "t", "preset": "gemmt-RP-S", "n": 4, "p": 3}],
                            "sparsities": [0, 0.5, 0.9], "precisions": [2], "seeds": 1})";
  const auto r = cli("sweep --config " + cfg.string() + " --out " + (dir / "out").string());
  CAPTURE(r.out);
  CHECK(r.status == 0);
  CHECK(fs::exists(dir / "out" / "results.csv"));
  CHECK(fs::exists(dir / "out" / "adp.csv"));
  fs::remove_all(dir);
}
