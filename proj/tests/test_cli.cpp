#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

using nlohmann::json;

namespace {

struct RunResult {
    int exit_code = -1;
    std::string out;
};

// Runs the CLI from the build directory (the ctest working directory).
RunResult run(const std::string& args) {
    std::string cmd = "./macdmt " + args + " 2>/dev/null";
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    RunResult res;
    char buf[4096];
    while (size_t n = fread(buf, 1, sizeof buf, pipe)) res.out.append(buf, n);
    int status = pclose(pipe);
    res.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return res;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string config_path() { return std::string(SOURCE_DIR) + "/examples/k2m1n2.json"; }

}  // namespace

TEST_CASE("curve subcommand emits exact breakpoints") {
    RunResult r = run("curve -M 2 -N 2 --kind fc_p2p --csv /dev/null");
    REQUIRE(r.exit_code == 0);
    json j = json::parse(r.out);
    CHECK(j["breakpoints"] == json::parse("[[0,1,4,1],[1,1,1,1],[2,1,0,1]]"));
}

TEST_CASE("curve csv of a pivot line matches 4 - 4r") {
    RunResult r = run("curve -M 2 -N 2 --kind ic_line --dims 1 --grid-step 1/4 --csv /tmp/macdmt_cli_line.csv");
    REQUIRE(r.exit_code == 0);
    std::istringstream csv(slurp("/tmp/macdmt_cli_line.csv"));
    std::string line;
    std::getline(csv, line);
    CHECK(line == "r,d");
    int rows = 0;
    while (std::getline(csv, line)) {
        double rr, dd;
        REQUIRE(std::sscanf(line.c_str(), "%lf,%lf", &rr, &dd) == 2);
        CHECK(dd == doctest::Approx(4 - 4 * rr).epsilon(1e-9));
        ++rows;
    }
    CHECK(rows == 5);
}

TEST_CASE("curve middle segment of the intermediate bound is 7 - 4r") {
    RunResult r = run("curve -K 2 -M 2 -N 4 --kind ic_mac --grid-step 1/8 --csv /tmp/macdmt_cli_mid.csv");
    REQUIRE(r.exit_code == 0);
    json j = json::parse(r.out);
    CHECK(j["regime"] == "intermediate");
    std::istringstream csv(slurp("/tmp/macdmt_cli_mid.csv"));
    std::string line;
    std::getline(csv, line);
    int middle_rows = 0;
    while (std::getline(csv, line)) {
        double rr, dd;
        REQUIRE(std::sscanf(line.c_str(), "%lf,%lf", &rr, &dd) == 2);
        if (rr >= 1.0 && rr <= 1.5) {
            CHECK(dd == doctest::Approx(7 - 4 * rr).epsilon(1e-9));
            ++middle_rows;
        }
    }
    CHECK(middle_rows == 5);
}

TEST_CASE("curve usage errors exit with code 2") {
    CHECK(run("curve -M 2 -N 2 --kind bogus").exit_code == 2);
    CHECK(run("curve -M 2 -N 2 --kind ic_line").exit_code == 2);  // missing --dims
    CHECK(run("curve --kind fc_p2p").exit_code == 2);             // missing -M/-N
    CHECK(run("frobnicate").exit_code == 2);
    CHECK(run("curve -M 2 -N 2 --kind fc_p2p --no-such-flag").exit_code == 2);
}

TEST_CASE("optimize reads a JSON rate tuple") {
    {
        std::ofstream out("/tmp/macdmt_cli_opt.json");
        out << R"({"K":2,"M":1,"N":1,"rates":[[1,4],[1,4]]})";
    }
    RunResult r = run("optimize --input /tmp/macdmt_cli_opt.json");
    REQUIRE(r.exit_code == 0);
    json j = json::parse(r.out);
    // Heavily loaded bound MN - KMr = 1 - 1/2 at the symmetric optimum.
    CHECK(j["value"] == json::parse("[1,2]"));
    CHECK(j["method"] == "closed_form");
    CHECK(j["grid_disagreement"] == false);

    std::ofstream("/tmp/macdmt_cli_opt.json") << "{oops";
    CHECK(run("optimize --input /tmp/macdmt_cli_opt.json").exit_code == 2);
}

TEST_CASE("witness subcommand reports gaps and their absence") {
    RunResult r = run("witness -K 2 -M 3 -N 6 --r0 13/6 --epsilon 1/24");
    REQUIRE(r.exit_code == 0);
    json j = json::parse(r.out);
    CHECK(j["found"] == true);
    CHECK(j["fc_value"] == json::parse("[3,1]"));
    CHECK(j["rates"] == json::parse("[[53,24],[17,8]]"));

    json none = json::parse(run("witness -K 1 -M 2 -N 2").out);
    CHECK(none["found"] == false);
    json none2 = json::parse(run("witness -K 2 -M 2 -N 5").out);
    CHECK(none2["found"] == false);
}

TEST_CASE("scheme subcommand prints blocks of the stacked pattern") {
    RunResult r = run("scheme -M 2 -N 5 -l 0 --users 2");
    REQUIRE(r.exit_code == 0);
    // JSON is the last line after the human-readable grid.
    std::string last = r.out.substr(r.out.find_last_of('{'));
    json j = json::parse(last);
    CHECK(j["T"] == 6);
    CHECK(j["symbols"] == 20);
    CHECK(j["blocks"] == json::parse("[[1,2,3,4],[1,2,3,4],[1,2,3,4],[1,2,3,4],[1,3],[2,4]]"));
    CHECK(run("scheme -M 3 -N 2").exit_code == 2);
}

TEST_CASE("simulate is byte-identical across repeats and thread counts") {
    std::string cfg = config_path();
    RunResult a = run("simulate --config " + cfg + " --out /tmp/macdmt_cli_a.csv --threads 1");
    RunResult b = run("simulate --config " + cfg + " --out /tmp/macdmt_cli_b.csv --threads 4");
    REQUIRE(a.exit_code == 0);
    REQUIRE(b.exit_code == 0);
    CHECK(a.out == b.out);
    CHECK(slurp("/tmp/macdmt_cli_a.csv") == slurp("/tmp/macdmt_cli_b.csv"));
    json j = json::parse(a.out);
    CHECK(j["slope"].get<double>() > 1.5);
    CHECK(j["slope"].get<double>() < 2.5);
}

TEST_CASE("simulate rejects bad configs with the right exit codes") {
    {
        std::ofstream out("/tmp/macdmt_cli_two.json");
        out << R"({"K":2,"M":1,"N":2,"l":0,"rates":[[0,1],[0,1]],
                   "snr_grid_db":[10,20],"trials_per_snr":10,"seed":1})";
    }
    CHECK(run("simulate --config /tmp/macdmt_cli_two.json").exit_code == 1);
    std::ofstream("/tmp/macdmt_cli_two.json") << "{oops";
    CHECK(run("simulate --config /tmp/macdmt_cli_two.json").exit_code == 2);
    CHECK(run("simulate --config /no/such/file.json").exit_code == 2);
}

TEST_CASE("environment seed overrides the config seed") {
    std::string cfg = config_path();
    RunResult a = run("simulate --config " + cfg + " --out /dev/null");
    std::string cmd = "MACDMT_SEED=999 ./macdmt simulate --config " + cfg + " --out /dev/null 2>/dev/null";
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    std::string out;
    char buf[4096];
    while (size_t n = fread(buf, 1, sizeof buf, pipe)) out.append(buf, n);
    pclose(pipe);
    CHECK(out != a.out);
}

TEST_CASE("verify runs selections and honors fault injection") {
    CHECK(run("verify --select lemma10").exit_code == 0);
    CHECK(run("verify --select lemma10 --perturb lemma10").exit_code == 1);
    CHECK(run("verify --select no_such_check").exit_code == 2);
}
