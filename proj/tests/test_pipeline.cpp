#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "gridreduce/artifact_io.hpp"

// End-to-end runs of the CLI binary: stage chaining, idempotence, artifact
// hash checks, exit codes.

namespace fs = std::filesystem;
using gridreduce::read_text_file;

namespace {

std::string data_path(const std::string& name) {
    return std::string(GRIDREDUCE_TEST_DATA) + "/" + name;
}

struct TempDir {
    fs::path dir;
    TempDir() {
        dir = fs::temp_directory_path() / ("gridreduce_test_" + std::to_string(::getpid()));
        fs::create_directories(dir);
    }
    ~TempDir() { fs::remove_all(dir); }
    std::string operator/(const std::string& name) const { return (dir / name).string(); }
};

int run(const std::string& args) {
    std::string cmd = std::string(GRIDREDUCE_CLI_BIN) + " " + args + " >/dev/null 2>&1";
    int rc = std::system(cmd.c_str());
    return WEXITSTATUS(rc);
}

} // namespace

TEST_CASE("pipeline: reduce, gen, dataset, train, eval") {
    TempDir t;
    std::string case6 = data_path("case6.m");
    std::string zones6 = data_path("zones6.json");

    CHECK(run("reduce --case " + case6 + " --zones " + zones6 + " -o " + (t / "bundle.json")) == 0);
    CHECK(run("gen --case " + case6 + " --count 300 --sigma 0.15 --seed 11 --split 250,50 -o " +
              (t / "scen.csv")) == 0);
    CHECK(run("dataset --case " + case6 + " --zones " + zones6 + " --scenarios " +
              (t / "scen.csv") + " -o " + (t / "data.csv")) == 0);
    CHECK(run("train --dataset " + (t / "data.csv") + " --method lbfgs --full-batch -o " +
              (t / "ckpt.json")) == 0);
    CHECK(run("eval --dataset " + (t / "data.csv") + " --checkpoint " + (t / "ckpt.json") +
              " --subset test -o " + (t / "metrics.json") + " --plots " + (t / "plots")) == 0);

    for (const char* f : {"bundle.json", "scen.csv", "scen.csv.json", "data.csv", "data.csv.json",
                          "ckpt.json", "metrics.json", "plots_mae.csv", "plots_error_cdf.csv"})
        CHECK(fs::exists(t / f));

    // trained beats the untrained baseline on the same test set
    auto bundle = read_text_file(t / "bundle.json");
    CHECK(bundle.find("init_params") != std::string::npos);
}

TEST_CASE("idempotence: reruns produce byte-identical artifacts") {
    TempDir t;
    std::string case6 = data_path("case6.m");
    std::string zones6 = data_path("zones6.json");

    REQUIRE(run("gen --case " + case6 + " --count 100 --sigma 0.15 --seed 5 -o " +
                (t / "a.csv")) == 0);
    REQUIRE(run("gen --case " + case6 + " --count 100 --sigma 0.15 --seed 5 -o " +
                (t / "b.csv")) == 0);
    CHECK(read_text_file(t / "a.csv") == read_text_file(t / "b.csv"));
    CHECK(read_text_file(t / "a.csv.json") == read_text_file(t / "b.csv.json"));

    REQUIRE(run("dataset --case " + case6 + " --zones " + zones6 + " --scenarios " + (t / "a.csv") +
                " -o " + (t / "d1.csv")) == 0);
    REQUIRE(run("dataset --case " + case6 + " --zones " + zones6 + " --scenarios " + (t / "a.csv") +
                " -o " + (t / "d2.csv")) == 0);
    CHECK(read_text_file(t / "d1.csv") == read_text_file(t / "d2.csv"));

    REQUIRE(run("train --dataset " + (t / "d1.csv") + " --method bfgs --full-batch -o " +
                (t / "c1.json")) == 0);
    REQUIRE(run("train --dataset " + (t / "d1.csv") + " --method bfgs --full-batch -o " +
                (t / "c2.json")) == 0);
    CHECK(read_text_file(t / "c1.json") == read_text_file(t / "c2.json"));
}

TEST_CASE("sigma 0 generates identical nominal rows") {
    TempDir t;
    REQUIRE(run("gen --case " + data_path("case6.m") + " --count 3 --sigma 0 --seed 1 -o " +
                (t / "s.csv")) == 0);
    std::ifstream in(t / "s.csv");
    std::string header, r0, r1, r2;
    std::getline(in, header);
    std::getline(in, r0);
    std::getline(in, r1);
    std::getline(in, r2);
    CHECK(r0.substr(r0.find(',', 2)) == r1.substr(r1.find(',', 2)));
    CHECK(r1.substr(r1.find(',', 2)) == r2.substr(r2.find(',', 2)));
}

TEST_CASE("mismatched artifacts are refused") {
    TempDir t;
    std::string case6 = data_path("case6.m");
    std::string zones6 = data_path("zones6.json");

    REQUIRE(run("gen --case " + case6 + " --count 50 --sigma 0.1 --seed 2 -o " +
                (t / "scen.csv")) == 0);
    REQUIRE(run("dataset --case " + case6 + " --zones " + zones6 + " --scenarios " +
                (t / "scen.csv") + " -o " + (t / "dz.csv")) == 0);
    // dataset built with singleton zones instead
    REQUIRE(run("dataset --case " + case6 + " --scenarios " + (t / "scen.csv") + " -o " +
                (t / "ds.csv")) == 0);
    REQUIRE(run("train --dataset " + (t / "dz.csv") + " --method lbfgs --full-batch -o " +
                (t / "ck.json")) == 0);

    // checkpoint from the 4-zone reduction against the singleton dataset
    CHECK(run("eval --dataset " + (t / "ds.csv") + " --checkpoint " + (t / "ck.json") + " -o " +
              (t / "m.json")) == 2);
}

TEST_CASE("scenario files from a different case are refused") {
    TempDir t;
    REQUIRE(run("gen --case " + data_path("case6.m") + " --count 10 --sigma 0.1 --seed 1 -o " +
                (t / "s.csv")) == 0);
    CHECK(run("dataset --case " + data_path("case118.m") + " --zones " +
              data_path("zones118.json") + " --scenarios " + (t / "s.csv") + " -o " +
              (t / "d.csv")) == 2);
}

TEST_CASE("input errors exit with code 2") {
    TempDir t;
    std::ofstream(t / "garbage.m") << "not a case file";
    CHECK(run("inspect " + (t / "garbage.m")) == 2);
    CHECK(run("reduce --case " + (t / "garbage.m") + " -o " + (t / "b.json")) == 2);
    CHECK(run("inspect " + (t / "missing.m")) == 2);
}

TEST_CASE("config file supplies defaults, flags override") {
    TempDir t;
    std::ofstream(t / "gr.ini") << "[gen]\nsigma=0.25\ncount=40\nseed=7\n";
    std::string pre = std::string(GRIDREDUCE_CLI_BIN) + " --config " + (t / "gr.ini");

    REQUIRE(std::system((pre + " gen --case " + data_path("case6.m") + " -o " + (t / "a.csv") +
                         " >/dev/null 2>&1").c_str()) == 0);
    std::string meta = read_text_file(t / "a.csv.json");
    CHECK(meta.find("\"sigma\": 0.25") != std::string::npos);

    REQUIRE(std::system((pre + " gen --case " + data_path("case6.m") + " --sigma 0.05 -o " +
                         (t / "b.csv") + " >/dev/null 2>&1").c_str()) == 0);
    CHECK(read_text_file(t / "b.csv.json").find("\"sigma\": 0.05") != std::string::npos);
}

TEST_CASE("inspect emits the canonical JSON dump") {
    TempDir t;
    CHECK(run("inspect " + data_path("case6.m") + " -o " + (t / "net.json")) == 0);
    std::string
        j = read_text_file(t / "net.json");
    CHECK(j.find("\"buses\"") != std::string::npos);
    CHECK(j.find("\"case_hash\"") != std::string::npos);
}
