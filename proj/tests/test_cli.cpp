#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include <doctest.h>

#include "approx.hpp"
#include <json.hpp>

#ifndef MMRISK_CLI_BIN
#error "MMRISK_CLI_BIN must point at the command line binary"
#endif
#ifndef MMRISK_EXAMPLES_DIR
#error "MMRISK_EXAMPLES_DIR must point at the examples directory"
#endif

namespace {

struct CliResult {
    int code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

CliResult run_cli(const std::string& args, const std::string& env = "") {
    static int counter = 0;
    std::filesystem::create_directories("cli_tmp");
    const std::string tag = std::to_string(counter++);
    const std::string out_path = "cli_tmp/stdout_" + tag + ".txt";
    const std::string err_path = "cli_tmp/stderr_" + tag + ".txt";
    std::string cmd;
    if (!env.empty()) cmd += env + " ";
    cmd += std::string(MMRISK_CLI_BIN) + " " + args + " > " + out_path + " 2> " + err_path;
    const int status = std::system(cmd.c_str());
    CliResult r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out_path);
    r.err = slurp(err_path);
    return r;
}

std::string example(const std::string& name) {
    return std::string(MMRISK_EXAMPLES_DIR) + "/" + name;
}

std::vector<std::string> data_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line))
        if (!line.empty() && line[0] != '#') lines.push_back(line);
    return lines;
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> fields;
    std::istringstream in(line);
    std::string f;
    while (std::getline(in, f, ',')) fields.push_back(f);
    return fields;
}

std::string write_temp(const std::string& name, const std::string& content) {
    std::filesystem::create_directories("cli_tmp");
    const std::string path = "cli_tmp/" + name;
    std::ofstream out(path);
    out << content;
    return path;
}

const char* kPositiveDrift = R"({
  "states": 1,
  "Q": [[0]],
  "laws": [{"pos_rate": 1.0, "pos_law": [{"w": 1.0, "n": 2, "delta": 1.0}],
            "neg_rate": 0.1, "c": 1.0}]
})";

} // namespace

TEST_CASE("validate summarizes a good model") {
    auto r = run_cli("validate " + example("two_state.json"));
    CHECK(r.code == 0);
    CHECK(r.out.find("states,2") != std::string::npos);
    CHECK(r.out.find("drift,-1") != std::string::npos);
    CHECK(r.out.find("stationary_1,0.5") != std::string::npos);
    CHECK(r.out.find("valid,1") != std::string::npos);
}

TEST_CASE("input problems exit with 2, validation problems with 3") {
    SUBCASE("missing file") {
        auto r = run_cli("validate cli_tmp/not_there.json");
        CHECK(r.code == 2);
        CHECK(r.err.find("cannot open") != std::string::npos);
    }
    SUBCASE("malformed JSON") {
        auto path = write_temp("broken.json", "{\"states\": 1,");
        CHECK(run_cli("validate " + path).code == 2);
    }
    SUBCASE("schema violation") {
        auto path = write_temp("unknown_key.json",
                               R"({"states":1,"Q":[[0]],"laws":[{"pos_rate":0,
                                   "neg_rate":1,"c":1}],"bogus":true})");
        CHECK(run_cli("validate " + path).code == 2);
    }
    SUBCASE("generator rows that do not sum to zero") {
        auto path = write_temp("bad_generator.json",
                               R"({"states":1,"Q":[[0.5]],"laws":[{"pos_rate":0.5,
                                   "pos_law":[{"w":1,"n":1,"delta":1}],
                                   "neg_rate":1,"c":1}]})");
        auto r = run_cli("validate " + path);
        CHECK(r.code == 3);
        CHECK(r.err.find("error:") != std::string::npos);
    }
}

TEST_CASE("analyze writes the CSV pair and the JSON sidecar") {
    auto r = run_cli("analyze " + example("two_state.json") +
                     " --u-grid 0:5:1 --z-grid 0:2:0.5 --out cli_tmp/an.csv");
    REQUIRE(r.code == 0);
    CHECK(r.out.find("wrote,cli_tmp/an.csv") != std::string::npos);
    CHECK(r.out.find("wrote,cli_tmp/an.overshoot.csv") != std::string::npos);
    CHECK(r.out.find("wrote,cli_tmp/an.sidecar.json") != std::string::npos);

    auto lines = data_lines(slurp("cli_tmp/an.csv"));
    REQUIRE(lines.size() == 7); // header plus six grid points
    CHECK(lines[0] == "u,ruin_1,ruin_2,bound_lo_1,bound_lo_2,bound_hi_1,bound_hi_2");
    {
        auto f = split(lines[1]);
        REQUIRE(f.size() == 7);
        CHECK(std::stod(f[0]) == 0.0);
        CHECK(std::stod(f[1]) == testsupport::Within(0.791684, 1e-4));
        CHECK(std::stod(f[2]) == testsupport::Within(0.819404, 1e-4));
    }
    for (size_t k = 1; k < lines.size(); ++k) {
        auto f = split(lines[k]);
        for (int i = 0; i < 2; ++i) {
            const double ruin = std::stod(f[1 + static_cast<size_t>(i)]);
            const double lo = std::stod(f[3 + static_cast<size_t>(i)]);
            const double hi = std::stod(f[5 + static_cast<size_t>(i)]);
            CHECK(lo <= ruin + 1e-9);
            CHECK(ruin <= hi + 1e-9);
        }
    }

    auto over = data_lines(slurp("cli_tmp/an.overshoot.csv"));
    REQUIRE(over.size() == 6); // header plus five grid points
    CHECK(over[0].rfind("z,excess_1_1,excess_1_2,", 0) == 0);
    CHECK(over[0].find("undershoot_2_2") != std::string::npos);
    CHECK(over[0].find("jump_through_2_2") != std::string::npos);

    auto side = nlohmann::json::parse(slurp("cli_tmp/an.sidecar.json"));
    CHECK(side["states"] == 2);
    CHECK(side["drift"].get<double>() == testsupport::Within(-1.0, 1e-9));
    CHECK(side["lundberg"]["gamma"].get<double>() ==
          testsupport::Within(0.13348479, 1e-6));
    CHECK(side["factorization"]["denominator"].size() == 6);
    CHECK(side["factorization"]["denominator_roots"].size() == 5);
    CHECK(side["ladder"]["total_mass"].size() == 2);
    CHECK(side["factorization"]["ruin_at_zero"][0].get<double>() ==
          testsupport::Within(0.791684, 1e-4));
}

TEST_CASE("analyze rejects unusable requests") {
    SUBCASE("grid runs backwards") {
        CHECK(run_cli("analyze " + example("two_state.json") +
                      " --u-grid 5:0:1 --out cli_tmp/x.csv")
                  .code == 2);
    }
    SUBCASE("grid step not a number") {
        CHECK(run_cli("analyze " + example("two_state.json") +
                      " --u-grid 0:5:abc --out cli_tmp/x.csv")
                  .code == 2);
    }
    SUBCASE("missing required grid") {
        CHECK(run_cli("analyze " + example("two_state.json") + " --out cli_tmp/x.csv").code == 2);
    }
    SUBCASE("positive drift cannot be analyzed") {
        auto path = write_temp("updrift.json", kPositiveDrift);
        CHECK(run_cli("analyze " + path + " --u-grid 0:2:1 --out cli_tmp/x.csv").code == 3);
    }
}

TEST_CASE("simulate writes estimates and honors the worker count exactly") {
    const std::string common = "simulate " + example("two_state.json") +
                               " --u 1 --paths 6000 --seed 4 --t-max 120"
                               " --level-x 0 --from 2";
    auto one = run_cli(common + " --out cli_tmp/sim_one.csv --dump cli_tmp/dump_one.csv",
                       "MMRISK_THREADS=1");
    auto six = run_cli(common + " --out cli_tmp/sim_six.csv --dump cli_tmp/dump_six.csv",
                       "MMRISK_THREADS=6");
    REQUIRE(one.code == 0);
    REQUIRE(six.code == 0);

    auto a = data_lines(slurp("cli_tmp/sim_one.csv"));
    auto b = data_lines(slurp("cli_tmp/sim_six.csv"));
    REQUIRE(a.size() == b.size());
    for (size_t k = 0; k < a.size(); ++k) CHECK(a[k] == b[k]);

    REQUIRE(a.size() == 4);
    CHECK(a[0] == "quantity,point,std_err,n,seed,truncated_fraction");
    CHECK(a[1].rfind("ruin_state_1,", 0) == 0);
    CHECK(a[2].rfind("ruin_state_2,", 0) == 0);
    CHECK(a[3].rfind("crossing_state_2,", 0) == 0);

    auto da = data_lines(slurp("cli_tmp/dump_one.csv"));
    auto db = data_lines(slurp("cli_tmp/dump_six.csv"));
    REQUIRE(da.size() == db.size());
    for (size_t k = 0; k < da.size(); ++k) CHECK(da[k] == db[k]);
    REQUIRE(da.size() > 100);
    CHECK(da[0] == "rep,tau,gamma_plus,gamma_under,gamma_total,state_at_tau");
    {
        auto f = split(da[1]);
        REQUIRE(f.size() == 6);
        const int state = std::stoi(f[5]);
        CHECK(state >= 1);
        CHECK(state <= 2);
        CHECK(std::stod(f[4]) ==
              doctest::Approx(std::stod(f[2]) + std::stod(f[3])).epsilon(1e-12));
    }
}

TEST_CASE("simulate without an output file prints to stdout") {
    auto r = run_cli("simulate " + example("two_state.json") + " --u 0.5 --paths 2000 --seed 7");
    CHECK(r.code == 0);
    CHECK(r.out.find("quantity,point,std_err,n,seed,truncated_fraction") != std::string::npos);
    CHECK(r.out.find("ruin_state_1,") != std::string::npos);
}

TEST_CASE("simulate rejects inconsistent flags") {
    SUBCASE("start state out of range") {
        CHECK(run_cli("simulate " + example("two_state.json") +
                      " --u 1 --paths 100 --level-x 0 --from 5")
                  .code == 2);
    }
    SUBCASE("dump without a level to cross") {
        CHECK(run_cli("simulate " + example("two_state.json") +
                      " --u 1 --paths 100 --dump cli_tmp/d.csv")
                  .code == 2);
    }
}

TEST_CASE("compare passes on a faithful model and flags a tampered one") {
    const std::string common = "compare " + example("two_state.json") +
                               " --paths 12000 --seed 3 --t-max 500 --out cli_tmp/cmp.csv";
    auto good = run_cli(common);
    CHECK(good.code == 0);
    auto table = slurp("cli_tmp/cmp.csv");
    CHECK(table.find("check,analytic,mc,std_err,z,pass") != std::string::npos);
    CHECK(table.find("overall,PASS") != std::string::npos);

    auto bad = run_cli("compare " + example("two_state.json") +
                           " --paths 8000 --seed 3 --t-max 500 --out cli_tmp/cmp_bad.csv",
                       "MMRISK_COMPARE_TAMPER=0.05");
    CHECK(bad.code == 5);
    CHECK(slurp("cli_tmp/cmp_bad.csv").find("overall,FAIL") != std::string::npos);
}

TEST_CASE("compare refuses a model without negative drift") {
    auto path = write_temp("updrift2.json", kPositiveDrift);
    CHECK(run_cli("compare " + path + " --paths 100").code == 3);
}

TEST_CASE("version, help, and argument errors") {
    auto v = run_cli("--version");
    CHECK(v.code == 0);
    CHECK(v.out.find("1.0.0") != std::string::npos);

    CHECK(run_cli("--help").code == 0);
    CHECK(run_cli("frobnicate").code == 2);
    CHECK(run_cli("").code == 2);
}
