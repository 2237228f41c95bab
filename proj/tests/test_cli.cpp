#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"

#include "qkd/evesim.hpp"

namespace {

struct CliResult {
    int code = -1;
    std::string out;
};

int counter = 0;

CliResult run_cli(const std::string& args) {
    const std::string out_file = "cli_out_" + std::to_string(counter++) + ".txt";
    const std::string cmd =
        std::string(QKDLAB_CLI_PATH) + " " + args + " > " + out_file + " 2> /dev/null";
    const int raw = std::system(cmd.c_str());
    CliResult r;
    r.code = WEXITSTATUS(raw);
    std::ifstream is(out_file);
    std::stringstream ss;
    ss << is.rdbuf();
    r.out = ss.str();
    std::remove(out_file.c_str());
    return r;
}

std::string slurp(const std::string& path) {
    std::ifstream is(path);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

} // namespace

TEST_CASE("bounds subcommand emits the threshold") {
    const CliResult r = run_cli("bounds --what threshold");
    CHECK(r.code == 0);
    CHECK(r.out.find("\"threshold\":0.0756") != std::string::npos);
}

TEST_CASE("threshold sweep: pinned CSV columns and the feasibility flip") {
    const CliResult r = run_cli("threshold --format csv --p-min 0.0 --p-max 0.12 --steps 13 "
                                "--eps-rel 1e-6 --eps-sec 1e-6 --r-over-n 0.9 --m-over-n 1e-6 "
                                "--n 1e6");
    CHECK(r.code == 0);
    CHECK(r.out.rfind("p_a,secret_rate,g1,g2,feasible\n", 0) == 0);
    // rows at 0.07 and 0.08 must straddle the 7.56% threshold
    bool feasible_before = false, infeasible_after = false;
    std::stringstream ss(r.out);
    std::string line;
    std::getline(ss, line);
    while (std::getline(ss, line)) {
        const auto comma = line.find(',');
        const double p = std::stod(line.substr(0, comma));
        const bool feasible = line.back() == '1';
        if (p < 0.071 && p > 0.069)
            feasible_before = feasible;
        if (p > 0.079 && p < 0.081)
            infeasible_after = !feasible;
    }
    CHECK(feasible_before);
    CHECK(infeasible_after);
    // the p_a = 0 row: secret rate 1
    CHECK(r.out.find("0,1,") != std::string::npos);
}

TEST_CASE("simulate is reproducible byte for byte") {
    const std::string args =
        "simulate --n 4 --p-allowed 0.25 --eps-rel 0.01 --eps-sec 0.01 --m 1 --r 2 "
        "--attack rotation-noise --noise 0.05 --trials 40 --seed 99 --out cli_tr.jsonl";
    const CliResult a = run_cli(args);
    const std::string tr_a = slurp("cli_tr.jsonl");
    const CliResult b = run_cli(args);
    const std::string tr_b = slurp("cli_tr.jsonl");
    CHECK(a.code == 0);
    CHECK(a.out == b.out);
    CHECK(tr_a == tr_b);
    CHECK(tr_a.find("\"test_passed\":") != std::string::npos);

    const CliResult c = run_cli(
        "simulate --n 4 --p-allowed 0.25 --eps-rel 0.01 --eps-sec 0.01 --m 1 --r 2 "
        "--attack rotation-noise --noise 0.05 --trials 40 --seed 100");
    CHECK(c.out != a.out);
    std::remove("cli_tr.jsonl");
}

TEST_CASE("simulate exit codes: single failing run reports 1") {
    // the swap attack almost never passes at n=10; seed 3 is a failing run
    const CliResult r = run_cli("simulate --n 10 --p-allowed 0.1 --eps-rel 0.01 "
                                "--eps-sec 0.01 --m 1 --r 5 --attack swap --trials 1 --seed 3");
    CHECK(r.code == 1);
    const CliResult ok = run_cli("simulate --n 4 --p-allowed 0.25 --eps-rel 0.01 "
                                 "--eps-sec 0.01 --m 1 --r 2 --attack identity --trials 1 "
                                 "--seed 3");
    CHECK(ok.code == 0);
    CHECK(ok.out.find("\"pass_rate\":1") != std::string::npos);
    CHECK(ok.out.find("\"reliability_failures\":0") != std::string::npos);
}

TEST_CASE("verify: clean suite, negative control, empty list") {
    const CliResult ok = run_cli("verify --n 1 --attacks identity,swap,cnot-probe --seed 7");
    CHECK(ok.code == 0);
    CHECK(ok.out.find("\"all_pass\":true") != std::string::npos);

    const CliResult ctrl =
        run_cli("verify --n 1 --attacks raw:phase-probe:1.0 --seed 7 --expect-fail");
    CHECK(ctrl.code == 0);

    const CliResult not_failing =
        run_cli("verify --n 1 --attacks identity --seed 7 --expect-fail");
    CHECK(not_failing.code == 1);

    const CliResult empty = run_cli("verify --n 1 --attacks '' --seed 7");
    CHECK(empty.code == 2);
}

TEST_CASE("verify accepts stored attack unitaries") {
    {
        const qkd::AttackSpec probe = qkd::make_cnot_probe_attack(2);
        std::ofstream os("cli_attack.qka");
        qkd::save_attack_unitary(os, qkd::materialize_unitary(probe), 2, 2);
    }
    const CliResult ok = run_cli("verify --n 1 --attacks @cli_attack.qka --seed 9");
    CHECK(ok.code == 0);
    CHECK(ok.out.find("\"all_pass\":true") != std::string::npos);
    // the simulate path consumes the same format
    const CliResult sim = run_cli(
        "simulate --n 1 --p-allowed 0.4 --eps-rel 0.01 --eps-sec 0.01 --m 1 --r 0 "
        "--attack @cli_attack.qka --trials 50 --seed 9");
    CHECK(sim.code == 0);
    const CliResult mismatch = run_cli("verify --n 2 --attacks @cli_attack.qka --seed 9");
    CHECK(mismatch.code == 2);
    std::remove("cli_attack.qka");
}

TEST_CASE("full protocol and bound reports through the CLI") {
    const CliResult full = run_cli(
        "simulate --protocol full --delta-num 0.5 --n 3 --p-allowed 0.34 --eps-rel 0.01 "
        "--eps-sec 0.01 --m 1 --r 2 --attack identity --trials 50 --seed 21");
    CHECK(full.code == 0);
    CHECK(full.out.find("\"aborts\":") != std::string::npos);
    CHECK(full.out.find("\"reliability_failures\":0") != std::string::npos);

    const CliResult rep =
        run_cli("verify --n 1 --attacks identity,cnot-probe --seed 5 --bound-report");
    CHECK(rep.code == 0);
    for (const char* key : {"\"bound_reports\":", "\"alpha\":", "\"tail\":", "\"sd_tight\":",
                            "\"sd_loose\":", "\"sd_trace\":", "\"m_total\":"})
        CHECK(rep.out.find(key) != std::string::npos);
}

TEST_CASE("input errors exit with 2") {
    CHECK(run_cli("simulate --n 4 --attack martian --trials 1 --seed 1 --r 2").code == 2);
    CHECK(run_cli("nonsense").code == 2);
    CHECK(run_cli("bounds --what gallager --n 16 --r-over-n 0.5 --delta 0.6").code == 2);
}

TEST_CASE("codes subcommand certifies a distance-7 code") {
    const CliResult r =
        run_cli("codes --n 15 --r 10 --min-d 7 --masks 1 --seed 4242 --out cli_code.txt");
    CHECK(r.code == 0);
    CHECK(r.out.find("\"d\":7") != std::string::npos);
    const std::string file = slurp("cli_code.txt");
    CHECK(file.rfind("15 5\n", 0) == 0);
    CHECK(file.find("PA 1") != std::string::npos);
    std::remove("cli_code.txt");
}

TEST_CASE("config file keys are honored and unknown keys rejected") {
    {
        std::ofstream cfg("cli_cfg.ini");
        cfg << "n=4\np-allowed=0.25\neps-rel=0.01\neps-sec=0.01\nm=1\nr=2\n"
               "attack=identity\ntrials=100\nseed=11\n";
    }
    const CliResult ok = run_cli("simulate --config cli_cfg.ini");
    CHECK(ok.code == 0);
    CHECK(ok.out.find("\"trials\":100") != std::string::npos);
    CHECK(ok.out.find("\"pass_rate\":1") != std::string::npos);
    CHECK(ok.out.find("\"reliability_failures\":0") != std::string::npos);
    {
        std::ofstream cfg("cli_cfg.ini");
        cfg << "n=4\nbogus-key=1\nseed=11\n";
    }
    CHECK(run_cli("simulate --config cli_cfg.ini").code == 2);
    std::remove("cli_cfg.ini");
}
