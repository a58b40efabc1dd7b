#include "doctest.h"

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;

namespace {

struct CliFixture {
    fs::path dir;

    CliFixture() {
        dir = fs::temp_directory_path() /
              ("logiguide_cli_" + std::to_string(::getpid()));
        fs::create_directories(dir);
        std::ofstream model(dir / "model.json");
        model << R"({
  "model": {
    "kind": "categorical",
    "groups": [
      {"name": "digit", "values": ["0", "1", "2"]},
      {"name": "color", "values": ["red", "green", "blue"]}
    ]
  },
  "testbed": {
    "continuous": {"block_dims": [2, 2]},
    "discrete": {"steps": 5, "flip_rate": 0.15}
  }
})";
    }

    ~CliFixture() {
        std::error_code ec;
        fs::remove_all(dir, ec);
    }

    int run(const std::string& args, const std::string& log_name = "out.txt") const {
        const std::string cmd = std::string(LOGIGUIDE_BIN_PATH) + " " + args + " > " +
                                (dir / log_name).string() + " 2>&1";
        const int status = std::system(cmd.c_str());
        return WEXITSTATUS(status);
    }

    std::string log(const std::string& log_name = "out.txt") const {
        std::ifstream in(dir / log_name);
        std::stringstream ss;
        ss << in.rdbuf();
        return ss.str();
    }

    std::string model() const { return (dir / "model.json").string(); }

    std::string taxonomy_model() const {
        const fs::path p = dir / "taxonomy.json";
        if (!fs::exists(p)) {
            std::ofstream model(p);
            model << R"({
  "model": {
    "kind": "taxonomy",
    "nodes": [
      {"name": "root", "parent": null},
      {"name": "mammal", "parent": "root"},
      {"name": "dog", "parent": "mammal"},
      {"name": "cat", "parent": "mammal"},
      {"name": "bird", "parent": "root"}
    ]
  },
  "testbed": {"discrete": {"steps": 4, "flip_rate": 0.2}}
})";
        }
        return p.string();
    }
};

}  // namespace

TEST_CASE("cli: compile emits the circuit and verdicts") {
    CliFixture fx;
    const int rc = fx.run("compile --model " + fx.model() +
                          " --query \"(digit.1 & color.blue) | (digit.2 & color.red)\" --out " +
                          (fx.dir / "c.sexp").string());
    CHECK(rc == 0);
    const std::string out = fx.log();
    CHECK(out.find("(orME (andCI digit.1 color.blue) (andCI digit.2 color.red))") !=
          std::string::npos);
    CHECK(out.find("equivalent: true") != std::string::npos);
    CHECK(out.find("valid: true") != std::string::npos);
    CHECK(fs::exists(fx.dir / "c.sexp"));
}

TEST_CASE("cli: errors are single-line and machine parsable") {
    CliFixture fx;
    CHECK(fx.run("compile --model " + fx.model() + " --query \"digit.9\"") == 1);
    const std::string out = fx.log();
    CHECK(out.substr(0, 7) == "error: ");
    CHECK(out.find("lookup") != std::string::npos);
    CHECK(std::count(out.begin(), out.end(), '\n') == 1);

    CHECK(fx.run("compile --model " + fx.model() + " --query \"false\"") == 1);
    CHECK(fx.run("eval --model /nope/missing.json --query \"digit.1\"") == 1);
}

TEST_CASE("cli: verify campaigns pass on both testbeds") {
    CliFixture fx;
    CHECK(fx.run("verify --model " + fx.model() + " --n-formulas 10 --probes 10 --seed 3") == 0);
    CHECK(fx.log().find("ok: true") != std::string::npos);
    CHECK(fx.run("verify --model " + fx.model() + " --discrete --n-formulas 10 --seed 3") == 0);
    CHECK(fx.log().find("ok: true") != std::string::npos);
}

TEST_CASE("cli: LOGIGUIDE_THREADS caps the campaign and keeps results stable") {
    CliFixture fx;
    const std::string cmd =
        "verify --model " + fx.model() + " --n-formulas 8 --probes 8 --seed 3";
    const std::string quoted = std::string(LOGIGUIDE_BIN_PATH) + " " + cmd;
    const int rc = std::system(("LOGIGUIDE_THREADS=1 " + quoted + " > " +
                                (fx.dir / "serial.txt").string() + " 2>&1")
                                   .c_str());
    CHECK(WEXITSTATUS(rc) == 0);
    CHECK(fx.run(cmd, "parallel.txt") == 0);
    CHECK(fx.log("serial.txt") == fx.log("parallel.txt"));
}

TEST_CASE("cli: taxonomy models run end to end on the discrete testbed") {
    CliFixture fx;
    CHECK(fx.run("compile --model " + fx.taxonomy_model() + " --query \"mammal | bird\"") == 0);
    CHECK(fx.log().find("equivalent: true") != std::string::npos);
    CHECK(fx.run("verify --model " + fx.taxonomy_model() +
                 " --discrete --n-formulas 10 --seed 4") == 0);
    CHECK(fx.run("sample --model " + fx.taxonomy_model() +
                 " --query \"~dog\" --discrete --n 100 --seed 4 --exact-mode --out-dir " +
                 (fx.dir / "tax").string()) == 0);
    CHECK(fx.log().find("conformity: 1") != std::string::npos);
    // continuous sampling has no taxonomy testbed
    CHECK(fx.run("sample --model " + fx.taxonomy_model() + " --query \"~dog\" --n 10") == 1);
    CHECK(fx.log().find("--discrete") != std::string::npos);
}

TEST_CASE("cli: argument errors are single-line too") {
    CliFixture fx;
    CHECK(fx.run("compile --query \"digit.1\"") == 1);  // --model missing
    const std::string out = fx.log();
    CHECK(out.substr(0, 7) == "error: ");
    CHECK(std::count(out.begin(), out.end(), '\n') == 1);
}

TEST_CASE("cli: eval consumes circuits and probe files") {
    CliFixture fx;
    REQUIRE(fx.run("compile --model " + fx.model() + " --query \"color.red | digit.1\" --out " +
                   (fx.dir / "c.sexp").string()) == 0);
    {
        std::ofstream probes(fx.dir / "probes.json");
        probes << R"([{"t": 0.5, "x": [0.1, -0.2, 0.3, 0.0]}])";
    }
    const int rc = fx.run("eval --model " + fx.model() + " --circuit " +
                          (fx.dir / "c.sexp").string() + " --probes " +
                          (fx.dir / "probes.json").string() + " --out " +
                          (fx.dir / "eval.json").string());
    CHECK(rc == 0);
    const std::string out = [&] {
        std::ifstream in(fx.dir / "eval.json");
        std::stringstream ss;
        ss << in.rdbuf();
        return ss.str();
    }();
    CHECK(out.find("\"posterior\"") != std::string::npos);
    CHECK(out.find("\"coefficients\"") != std::string::npos);
    CHECK(out.find("\"score\"") != std::string::npos);
}

TEST_CASE("cli: sampling runs are reproducible bit for bit") {
    CliFixture fx;
    const std::string base = "sample --model " + fx.model() +
                             " --query \"color.red\" --n 40 --steps 60 --seed 11 --out-dir ";
    REQUIRE(fx.run(base + (fx.dir / "a").string()) == 0);
    REQUIRE(fx.run(base + (fx.dir / "b").string()) == 0);

    auto slurp = [](const fs::path& p) {
        std::ifstream in(p);
        std::stringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };
    CHECK(slurp(fx.dir / "a" / "samples.csv") == slurp(fx.dir / "b" / "samples.csv"));
    CHECK(slurp(fx.dir / "a" / "manifest.json") == slurp(fx.dir / "b" / "manifest.json"));
    CHECK(slurp(fx.dir / "a" / "manifest.json").find("config_hash") != std::string::npos);
}

TEST_CASE("cli: report reruns from the manifest and writes the sweep curve") {
    CliFixture fx;
    REQUIRE(fx.run("sample --model " + fx.model() +
                   " --query \"digit.1\" --discrete --n 200 --seed 5 --out-dir " +
                   (fx.dir / "run").string()) == 0);
    const int rc = fx.run("report --manifest " + (fx.dir / "run" / "manifest.json").string() +
                          " --sweep \"0.0,1.0\"");
    CHECK(rc == 0);
    CHECK(fs::exists(fx.dir / "run" / "conformity_vs_weight.csv"));
    const std::string out = fx.log();
    CHECK(out.find("conformity") != std::string::npos);
}
