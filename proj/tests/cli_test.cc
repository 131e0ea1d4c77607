#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"

namespace {

namespace fs = std::filesystem;

const fs::path kWork = fs::temp_directory_path() / "airtnn_cli_test";

std::string Slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Run {
  int status = -1;
  std::string out;
  std::string err;
};

Run Cli(const std::string& args) {
  fs::create_directories(kWork);
  const fs::path out = kWork / "stdout.txt", err = kWork / "stderr.txt";
  const std::string cmd = std::string(AIRTNN_CLI) + " " + args + " >" + out.string() +
                          " 2>" + err.string();
  const int raw = std::system(cmd.c_str());
  Run r;
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  r.out = Slurp(out);
  r.err = Slurp(err);
  return r;
}

const char* kSmall =
    " --set n_nodes=16 --set n_communities=4 --set p_inter=0.08"
    " --set n_train=24 --set n_val=6 --set n_test=8 --set spikes=2"
    " --set n_classes=5 --set hidden=3 --set readout_hidden=6 --epochs 2"
    " --eval-realizations 2";

TEST_CASE("unknown flags and subcommands fail with usage") {
  Run r = Cli("train --no-such-flag 3");
  CHECK(r.status != 0);
  CHECK(!r.err.empty());
  CHECK(Cli("frobnicate").status != 0);
  CHECK(Cli("").status != 0);
}

TEST_CASE("missing config file is an error on stderr") {
  Run r = Cli("sweep --config " + (kWork / "absent.cfg").string());
  CHECK(r.status != 0);
  CHECK(r.err.find("absent.cfg") != std::string::npos);
  CHECK(r.out.empty());
}

TEST_CASE("bad override values are reported") {
  Run r = Cli("train --set taps=many");
  CHECK(r.status == 1);
  CHECK(r.err.find("airtnn: error:") == 0);
  CHECK(Cli("train --set novalue").status == 1);
}

TEST_CASE("train twice with the same seed writes identical checkpoints") {
  const fs::path a = kWork / "train_a", b = kWork / "train_b";
  fs::remove_all(a);
  fs::remove_all(b);
  const std::string common =
      std::string("train --arch airtnn --delta 1 --snr-db 20 --seed 7") + kSmall;
  Run ra = Cli(common + " --out " + a.string());
  Run rb = Cli(common + " --out " + b.string());
  REQUIRE(ra.status == 0);
  REQUIRE(rb.status == 0);
  CHECK(Slurp(a / "checkpoint.txt") == Slurp(b / "checkpoint.txt"));
  CHECK(Slurp(a / "history.csv").rfind("epoch,split,loss,accuracy\n", 0) == 0);
}

TEST_CASE("gen-data, train and eval chain through files") {
  const fs::path dir = kWork / "chain";
  fs::remove_all(dir);
  REQUIRE(Cli(std::string("gen-data --seed 3 --out ") + dir.string() + kSmall).status == 0);
  CHECK(fs::exists(dir / "dataset.txt"));
  CHECK(Slurp(dir / "complex.txt").rfind("airtnn-complex 1\n", 0) == 0);
  const std::string data = " --data " + (dir / "dataset.txt").string();
  REQUIRE(Cli("train --arch gnn --out " + dir.string() + data + kSmall).status == 0);
  Run r = Cli("eval --checkpoint " + (dir / "checkpoint.txt").string() + data + kSmall);
  REQUIRE(r.status == 0);
  CHECK(r.out.rfind("accuracy ", 0) == 0);
  CHECK(r.out.find(" std ") != std::string::npos);
  CHECK(Cli("eval" + data).status != 0);  // no checkpoint
}

TEST_CASE("sweep from a config file writes the named results file") {
  const fs::path dir = kWork / "sweep";
  fs::remove_all(dir);
  fs::create_directories(dir);
  std::ofstream(dir / "exp.cfg") << "results_file = fig.csv\ngrid = 1\nmodels = airgnn, gnn\n"
                                 << "epochs = 1\n";
  Run r = Cli("sweep --config " + (dir / "exp.cfg").string() + " --out " +
              dir.string() + kSmall);
  REQUIRE(r.status == 0);
  const std::string csv = Slurp(dir / "fig.csv");
  CHECK(csv.rfind("model,regime,sweep_axis,sweep_value,accuracy_mean,accuracy_std,seed\n", 0) == 0);
  CHECK(Slurp(dir / "manifest.txt").find("results_file = fig.csv") != std::string::npos);
}

TEST_CASE("verify exits cleanly") {
  Run r = Cli("verify");
  CHECK(r.status == 0);
  CHECK(r.out.find("FAIL") == std::string::npos);
}

}  // namespace
