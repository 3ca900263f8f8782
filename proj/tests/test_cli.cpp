#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

const std::string kBin = GRADLAT_BIN;

struct RunResult {
  int exit_code = -1;
  std::string out, err;
};

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

RunResult run(const std::string& args, const fs::path& dir) {
  const fs::path so = dir / "stdout.txt", se = dir / "stderr.txt";
  const std::string cmd =
      kBin + " " + args + " >" + so.string() + " 2>" + se.string();
  const int status = std::system(cmd.c_str());
  RunResult r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(so);
  r.err = slurp(se);
  return r;
}

fs::path fresh_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("gradlat_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

void write_config(const fs::path& p, const std::string& body) {
  std::ofstream os(p);
  os << body;
}

}  // namespace

TEST_CASE("stable-check emits matching transforms and exits 0") {
  const fs::path dir = fresh_dir("stable");
  const fs::path cfg = dir / "run.cfg";
  write_config(cfg, "stable.alphas=0.5\nstable.lambdas=10\n");
  const RunResult r = run("--experiment stable-check --config " + cfg.string() +
                              " --out " + dir.string(),
                          dir);
  CHECK(r.exit_code == 0);
  std::ifstream csv(dir / "stable_check.csv");
  std::string line;
  std::getline(csv, line);
  CHECK(line == "alpha,lambda,transform,target,rel_error");
  int rows = 0;
  while (std::getline(csv, line)) {
    std::stringstream ss(line);
    std::string tok;
    std::vector<double> f;
    while (std::getline(ss, tok, ',')) f.push_back(std::stod(tok));
    REQUIRE(f.size() == 5);
    CHECK(f[3] == doctest::Approx(std::exp(-std::sqrt(f[1]))).epsilon(1e-14));
    CHECK(f[4] < 1e-6);
    ++rows;
  }
  CHECK(rows == 10);
  CHECK(slurp(dir / "manifest.json").find("\"config_hash\"") !=
        std::string::npos);
}

TEST_CASE("identical config and seed reproduce byte-identical artifacts") {
  const fs::path dir = fresh_dir("determinism");
  const fs::path cfg = dir / "run.cfg";
  write_config(cfg,
               "model.alpha=0.3\nmodel.epsilon=0.5\nmodel.d=1\nmodel.N=4\n"
               "chain.burn=50\nchain.keep=200\n");
  const std::string base = "--experiment sample --config " + cfg.string() +
                           " --seed 42 --out ";
  const fs::path a = dir / "a", b = dir / "b";
  CHECK(run(base + a.string(), dir).exit_code == 0);
  CHECK(run(base + b.string(), dir).exit_code == 0);
  CHECK(slurp(a / "trace.csv") == slurp(b / "trace.csv"));
  CHECK(slurp(a / "summary.csv") == slurp(b / "summary.csv"));
  CHECK(slurp(a / "chain.ckpt") == slurp(b / "chain.ckpt"));
  CHECK(!slurp(a / "trace.csv").empty());
}

TEST_CASE("resume: split run equals one continuous run bit-exactly") {
  const fs::path dir = fresh_dir("resume");
  const fs::path cfg = dir / "run.cfg";
  write_config(cfg,
               "model.alpha=0.3\nmodel.epsilon=0.5\nmodel.d=1\nmodel.N=4\n"
               "chain.burn=50\nchain.keep=500\n");
  const std::string base =
      "--config " + cfg.string() + " --experiment sample --seed 7 ";
  const fs::path full = dir / "full", head = dir / "head", tail = dir / "tail";
  CHECK(run(base + "--out " + full.string(), dir).exit_code == 0);
  CHECK(run(base + "--out " + head.string() + " --sweeps 300", dir).exit_code ==
        0);
  CHECK(run("--experiment sample --resume " + (head / "chain.ckpt").string() +
                " --sweeps 200 --out " + tail.string(),
            dir)
            .exit_code == 0);
  CHECK(slurp(tail / "chain.ckpt") == slurp(full / "chain.ckpt"));
  // resumed trace rows are exactly the tail of the continuous trace
  std::stringstream fs_(slurp(full / "trace.csv")), ts(slurp(tail / "trace.csv"));
  std::vector<std::string> fl, tl;
  std::string line;
  while (std::getline(fs_, line)) fl.push_back(line);
  while (std::getline(ts, line)) tl.push_back(line);
  REQUIRE(fl.size() == 501);  // header + 500
  REQUIRE(tl.size() == 201);
  CHECK(tl[0] == fl[0]);
  for (size_t i = 1; i < tl.size(); ++i) CHECK(tl[i] == fl[300 + i]);

  // resume with zero extra sweeps is a no-op on the chain state
  const fs::path noop = dir / "noop";
  CHECK(run("--experiment sample --resume " + (tail / "chain.ckpt").string() +
                " --sweeps 0 --out " + noop.string(),
            dir)
            .exit_code == 0);
  CHECK(slurp(noop / "chain.ckpt") == slurp(tail / "chain.ckpt"));
}

TEST_CASE("corrupted or mismatched checkpoints are refused cleanly") {
  const fs::path dir = fresh_dir("badckpt");
  const fs::path bad = dir / "bad.ckpt";
  write_config(bad, "GARBAGE_HEADER_BYTES");
  const fs::path out = dir / "out";
  RunResult r = run("--experiment sample --resume " + bad.string() + " --out " +
                        out.string(),
                    dir);
  CHECK(r.exit_code == 1);
  CHECK(r.err.find("bad magic") != std::string::npos);
  CHECK(!fs::exists(out / "trace.csv"));
  CHECK(!fs::exists(out / "chain.ckpt"));

  // right magic, unsupported version: refusal carries a migration hint
  const fs::path wrongver = dir / "wrongver.ckpt";
  {
    std::ofstream os(wrongver, std::ios::binary);
    os.write("GRADLAT1", 8);
    const std::uint32_t v = 999;
    os.write(reinterpret_cast<const char*>(&v), sizeof v);
  }
  r = run("--experiment sample --resume " + wrongver.string() + " --out " +
              out.string(),
          dir);
  CHECK(r.exit_code == 1);
  CHECK(r.err.find("version") != std::string::npos);
  CHECK(r.err.find("re-run") != std::string::npos);
}

TEST_CASE("validation lists every violated field") {
  const fs::path dir = fresh_dir("validate");
  const fs::path cfg = dir / "run.cfg";
  write_config(cfg, "model.alpha=0.7\nmodel.beta=-2\nmodel.N=2\n");
  const RunResult r = run("--experiment sample --config " + cfg.string() +
                              " --out " + (dir / "out").string(),
                          dir);
  CHECK(r.exit_code == 1);
  CHECK(r.err.find("model.alpha") != std::string::npos);
  CHECK(r.err.find("log-concave") != std::string::npos);
  CHECK(r.err.find("model.beta") != std::string::npos);
  CHECK(r.err.find("model.N") != std::string::npos);
  CHECK(!fs::exists(dir / "out" / "manifest.json"));
}

TEST_CASE("exit codes: 1 on a failed check, 0 on pass") {
  const fs::path dir = fresh_dir("exitcodes");
  const fs::path cfg = dir / "run.cfg";
  // impossible tolerance forces the stable-check verdict to fail
  write_config(cfg, "stable.alphas=0.3\nstable.lambdas=5\nstable.tolerance=1e-30\n");
  RunResult r = run("--experiment stable-check --config " + cfg.string() +
                        " --out " + (dir / "f").string(),
                    dir);
  CHECK(r.exit_code == 1);
  write_config(cfg, "stable.alphas=0.3\nstable.lambdas=5\n");
  r = run("--experiment stable-check --config " + cfg.string() + " --out " +
              (dir / "p").string(),
          dir);
  CHECK(r.exit_code == 0);
  CHECK(slurp(dir / "p" / "manifest.json").find("\"exit_status\": 0") !=
        std::string::npos);
}
