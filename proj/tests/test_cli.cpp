#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace {

struct RunResult {
    int exit_code;
    std::string out;
};

RunResult run(const std::string& args) {
    std::string cmd = std::string(ABRIESZ_CLI_PATH) + " " + args + " 2>/dev/null";
    std::array<char, 4096> buf{};
    std::string out;
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    while (fgets(buf.data(), buf.size(), pipe)) out += buf.data();
    int status = pclose(pipe);
    return {WEXITSTATUS(status), out};
}

}  // namespace

TEST_CASE("eval: free case agreement and exit 0") {
    auto r = run("--summary cli_sum.json eval --alpha 0 --delta 0.5 --lambda 2 "
                 "--x 1.0,0.3 --y 0.7,2.0 --method both");
    CHECK(r.exit_code == 0);
    // last CSV row, abs_diff column (index 15)
    std::istringstream ss(r.out);
    std::string header, row;
    std::getline(ss, header);
    std::getline(ss, row);
    CHECK(header.substr(0, 9) == "r1,theta1");
    std::vector<std::string> cols;
    std::istringstream rs(row);
    std::string tok;
    while (std::getline(rs, tok, ',')) cols.push_back(tok);
    REQUIRE(cols.size() >= 17);
    CHECK(std::stod(cols[15]) <= 1e-7);
    // summary document exists and parses
    std::ifstream sum("cli_sum.json");
    REQUIRE(sum.good());
    nlohmann::json j;
    sum >> j;
    CHECK(j["command"] == "eval");
    CHECK(j["exit"] == 0);
    std::remove("cli_sum.json");
}

TEST_CASE("eval: fractional flux closed vs series within 1e-6") {
    auto r = run("eval --alpha 0.5 --delta 0.25 --lambda 3 --x 1.3,5.1 --y 0.4,0.9 "
                 "--method both");
    CHECK(r.exit_code == 0);
    std::istringstream ss(r.out);
    std::string header, row;
    std::getline(ss, header);
    std::getline(ss, row);
    std::vector<std::string> cols;
    std::istringstream rs(row);
    std::string tok;
    while (std::getline(rs, tok, ',')) cols.push_back(tok);
    REQUIRE(cols.size() >= 17);
    CHECK(std::stod(cols[15]) <= 1e-6);
}

TEST_CASE("determinism: identical invocations give byte-identical records") {
    std::string args = "scaling --piece G --p 8 --delta 0 --j-range 3:4 --trials 2";
    auto a = run(args);
    auto b = run(args);
    CHECK(a.out == b.out);
    CHECK(a.exit_code == b.exit_code);
}

TEST_CASE("exit code 2 on config errors") {
    CHECK(run("eval --method nonsense").exit_code == 2);
    CHECK(run("bogus-subcommand").exit_code == 2);
    CHECK(run("converge --grid 64x100").exit_code == 2);  // n_theta not a power of two
}

TEST_CASE("exit code 4 on resolution errors") {
    auto r = run("converge --p 2 --delta 0 --function gaussian --lambda-list 16 "
                 "--grid 16x32 --R 2");
    CHECK(r.exit_code == 4);
}

TEST_CASE("exit code 3 on computational domain errors") {
    // lambda * r beyond the specfun box in the series oracle
    auto r = run("eval --alpha 0.5 --lambda 16 --x 4.0,0.0 --y 4.0,1.0 --method series");
    CHECK(r.exit_code == 3);
}

TEST_CASE("verify det suite passes") {
    auto r = run("verify --suite det");
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("det,") != std::string::npos);
}

TEST_CASE("verify d-bound with integer flux: all ratios zero") {
    auto r = run("verify --suite d-bound --alpha-list 1.0 --delta-list 0.25 --j-range 2:3");
    CHECK(r.exit_code == 0);
    std::istringstream ss(r.out);
    std::string line;
    std::getline(ss, line);  // header
    int rows = 0;
    while (std::getline(ss, line)) {
        std::vector<std::string> cols;
        std::istringstream rs(line);
        std::string tok;
        while (std::getline(rs, tok, ',')) cols.push_back(tok);
        REQUIRE(cols.size() == 10);
        CHECK(std::stod(cols[5]) == 0.0);
        CHECK(cols[9] == "1");
        ++rows;
    }
    CHECK(rows == 4);  // 2 ells x 2 js
}

TEST_CASE("scaling: integer-flux D piece trivially passes") {
    auto r = run("scaling --piece D1 --p 2 --delta 0.25 --alpha 1 --j-range 2:3");
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("scaling-D1") != std::string::npos);
}

TEST_CASE("converge: Plancherel case decreases") {
    auto r = run("converge --p 2 --delta 0 --function gaussian --lambda-list 1,2,3 "
                 "--grid 48x256 --R 2 --alpha 0");
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("decreasing") != std::string::npos);
}
