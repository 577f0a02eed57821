// End-to-end tests of the blflow binary: exit-code contract, report files,
// and byte-level determinism.  The binary path is injected by the build as
// BLFLOW_CLI_PATH.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "blflow/group_rep.hpp"

namespace fs = std::filesystem;

namespace {

struct RunResult {
    int exit_code = -1;
    std::string out, err;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void spit(const fs::path& p, const std::string& text) {
    std::ofstream(p, std::ios::binary) << text;
}

// Fresh scratch dir per test case, under the ctest working directory.
fs::path scratch(const std::string& name) {
    fs::path dir = fs::path("cli_test") / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

RunResult run_cli(const std::string& args, const fs::path& dir) {
    const fs::path out = dir / "stdout.txt", err = dir / "stderr.txt";
    const std::string cmd =
        std::string(BLFLOW_CLI_PATH) + " " + args + " > " + out.string() + " 2> " + err.string();
    const int status = std::system(cmd.c_str());
    RunResult r;
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
}

bool contains(const std::string& hay, const std::string& needle) {
    return hay.find(needle) != std::string::npos;
}

// omega -> (stable_factor, unstable_factor) from a certificate CSV.
std::vector<std::array<std::string, 3>> cert_factor_rows(const fs::path& csv) {
    std::vector<std::array<std::string, 3>> rows;
    std::ifstream in(csv);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#' || line.rfind("omega,", 0) == 0) continue;
        std::array<std::string, 3> row;
        std::istringstream ls(line);
        std::string field;
        for (int k = 0; k < 4 && std::getline(ls, field, ','); ++k)
            if (k != 1) row[std::size_t(k > 1 ? k - 1 : k)] = field;  // omega, stable, unstable
        rows.push_back(row);
    }
    return rows;
}

}  // namespace

TEST_CASE("verify-rep: reference tuple passes, reports written") {
    const fs::path dir = scratch("rep_ok");
    const RunResult r = run_cli("verify-rep --out " + (dir / "o").string(), dir);
    CHECK(r.exit_code == 0);
    CHECK(contains(r.out, "all_pass: true"));
    CHECK(contains(r.out, "verify-rep: PASS"));
    CHECK(contains(r.out, "common splitting: stable dim 2"));
    CHECK(fs::exists(dir / "o" / "rep_report.txt"));
    CHECK(fs::exists(dir / "o" / "config_used.txt"));
}

TEST_CASE("verify-rep: zero tuple is a spectral failure, exit 1") {
    const fs::path dir = scratch("rep_zero");
    spit(dir / "z.cfg", "exp_t0 = 0\nexp_t = 0,0,0,0\nexp_m = 0,0,0,0\nexp_n = 0,0,0,0\n");
    const RunResult r =
        run_cli("verify-rep --config " + (dir / "z.cfg").string() + " --out " + (dir / "o").string(),
                dir);
    CHECK(r.exit_code == 1);
    CHECK(contains(r.err, "verification failure"));
    // the partial report is still written for post-mortems
    CHECK(fs::exists(dir / "o" / "rep_report.txt"));
}

TEST_CASE("config errors exit 2 with position info") {
    const fs::path dir = scratch("cfg_err");

    spit(dir / "bad.cfg", "t = 15\nbeta_lo == 0.5\n");
    RunResult r = run_cli(
        "verify-rep --config " + (dir / "bad.cfg").string() + " --out " + (dir / "o").string(), dir);
    CHECK(r.exit_code == 2);
    CHECK(contains(r.err, "line 2"));

    spit(dir / "unk.cfg", "no_such_key = 3\n");
    r = run_cli(
        "verify-rep --config " + (dir / "unk.cfg").string() + " --out " + (dir / "o").string(), dir);
    CHECK(r.exit_code == 2);
    CHECK(contains(r.err, "no_such_key"));

    r = run_cli("verify-rep --config " + (dir / "missing.cfg").string() + " --out " +
                    (dir / "o").string(),
                dir);
    CHECK(r.exit_code == 2);

    // malformed command line is user input too
    r = run_cli("verify-rep --no-such-flag", dir);
    CHECK(r.exit_code == 2);

    // bad run-level value caught by validation
    spit(dir / "d6.cfg", "d = 6\n");
    r = run_cli(
        "verify-rep --config " + (dir / "d6.cfg").string() + " --out " + (dir / "o").string(), dir);
    CHECK(r.exit_code == 2);
    CHECK(contains(r.err, "multiple of 4"));
}

TEST_CASE("holonomy: default passes, null field gives the zero table") {
    const fs::path dir = scratch("holonomy");
    RunResult r = run_cli("holonomy --grid 48 --out " + (dir / "o").string(), dir);
    CHECK(r.exit_code == 0);
    CHECK(contains(r.out, "holonomy: PASS"));
    const std::string csv = slurp(dir / "o" / "holonomy.csv");
    CHECK(contains(csv, "copies,omega,closed_omega"));
    CHECK(contains(csv, "# summary: copies=4"));
    CHECK(fs::exists(dir / "o" / "deviation.csv"));

    // t = 0 and alpha_scale = 0 kill both deviation terms
    spit(dir / "null.cfg", "t = 0\nalpha_scale = 0\n");
    r = run_cli("holonomy --config " + (dir / "null.cfg").string() + " --grid 16 --out " +
                    (dir / "z").string(),
                dir);
    CHECK(r.exit_code == 0);
    std::ifstream in(dir / "z" / "deviation.csv");
    std::string line;
    std::getline(in, line);  // header
    int rows = 0;
    while (std::getline(in, line)) {
        const std::string f = line.substr(line.find(',') + 1);
        CHECK(std::stod(f) == 0.0);
        ++rows;
    }
    CHECK(rows > 0);
}

TEST_CASE("certify: passes with reports, sign-flipped orientation exits 1") {
    const fs::path dir = scratch("certify");
    RunResult r = run_cli("certify --grid 12 --seed 99 --out " + (dir / "o").string(), dir);
    CHECK(r.exit_code == 0);
    CHECK(contains(r.out, "certify: PASS"));
    CHECK(contains(slurp(dir / "o" / "certificate.csv"), "omega,e_omega,stable_factor"));
    CHECK(contains(slurp(dir / "o" / "mixed.txt"), "verdict: PASS"));
    CHECK(fs::exists(dir / "o" / "time_constants.txt"));
    CHECK(fs::exists(dir / "o" / "returns.csv"));

    spit(dir / "raw.cfg", "orientation = raw\n");
    r = run_cli("certify --config " + (dir / "raw.cfg").string() + " --grid 8 --out " +
                    (dir / "raw").string(),
                dir);
    CHECK(r.exit_code == 1);
    CHECK(contains(r.err, "orientation"));
}

TEST_CASE("certify: identical config and seed give byte-identical CSV reports") {
    const fs::path dir = scratch("determinism");
    const RunResult a = run_cli("certify --grid 10 --seed 424242 --out " + (dir / "a").string(), dir);
    const RunResult b = run_cli("certify --grid 10 --seed 424242 --out " + (dir / "b").string(), dir);
    REQUIRE(a.exit_code == 0);
    REQUIRE(b.exit_code == 0);
    CHECK(slurp(dir / "a" / "certificate.csv") == slurp(dir / "b" / "certificate.csv"));
    CHECK(slurp(dir / "a" / "returns.csv") == slurp(dir / "b" / "returns.csv"));
    // the recorded configs differ only in the out_dir line
    auto strip_out_dir = [](std::string text) {
        const std::size_t at = text.find("out_dir = ");
        const std::size_t end = text.find('\n', at);
        return text.erase(at, end - at);
    };
    CHECK(strip_out_dir(slurp(dir / "a" / "config_used.txt")) ==
          strip_out_dir(slurp(dir / "b" / "config_used.txt")));

    // different seed changes the sampled sweep but not the grid certificate
    const RunResult c = run_cli("certify --grid 10 --seed 5 --out " + (dir / "c").string(), dir);
    REQUIRE(c.exit_code == 0);
    CHECK(slurp(dir / "a" / "certificate.csv") == slurp(dir / "c" / "certificate.csv"));
    CHECK(slurp(dir / "a" / "returns.csv") != slurp(dir / "c" / "returns.csv"));
}

TEST_CASE("certify: d = 8 block replication reproduces the d = 4 factors") {
    const fs::path dir = scratch("d8");
    const RunResult a = run_cli("certify --grid 10 --seed 7 --out " + (dir / "d4").string(), dir);
    spit(dir / "d8.cfg", "d = 8\n");
    const RunResult b = run_cli("certify --config " + (dir / "d8.cfg").string() +
                                    " --grid 10 --seed 7 --out " + (dir / "d8").string(),
                                dir);
    REQUIRE(a.exit_code == 0);
    REQUIRE(b.exit_code == 0);
    const auto ra = cert_factor_rows(dir / "d4" / "certificate.csv");
    const auto rb = cert_factor_rows(dir / "d8" / "certificate.csv");
    REQUIRE(ra.size() == rb.size());
    REQUIRE(ra.size() > 0);
    for (std::size_t k = 0; k < ra.size(); ++k) CHECK(ra[k] == rb[k]);
}

TEST_CASE("trace: exit codes and dumps per start point") {
    const fs::path dir = scratch("trace");

    // stationary base point: only the fiber moves, the time cap is the exit
    RunResult r = run_cli("trace --start 1,0 --max-time 5 --svg --out " + (dir / "sad").string(),
                          dir);
    CHECK(r.exit_code == 1);
    CHECK(contains(r.err, "partial dump"));
    const std::string sad = slurp(dir / "sad" / "orbit.csv");
    CHECK(contains(sad, "time,x,y,theta,chart"));
    CHECK(contains(sad, "# terminal: max_time"));
    CHECK(slurp(dir / "sad" / "orbit.svg").rfind("<svg", 0) == 0);

    // boundary start drifts down/left into the removed disc at the origin
    r = run_cli("trace --start 0.5,1 --out " + (dir / "cross").string(), dir);
    CHECK(r.exit_code == 0);
    CHECK(contains(slurp(dir / "cross" / "orbit.csv"), "# terminal: disc_boundary"));

    // invalid starts are config errors
    CHECK(run_cli("trace --start abc --out " + (dir / "x1").string(), dir).exit_code == 2);
    CHECK(run_cli("trace --start 0,0 --out " + (dir / "x2").string(), dir).exit_code == 2);
    CHECK(run_cli("trace --start 0.5,2 --out " + (dir / "x3").string(), dir).exit_code == 2);
    CHECK(run_cli("trace --out " + (dir / "x4").string(), dir).exit_code == 2);  // missing --start
}

TEST_CASE("solve-exponents: CLI count matches the in-process solver") {
    const fs::path dir = scratch("solve");
    const RunResult r =
        run_cli("solve-exponents --lo -2 --hi 2 --limit 50 --out " + (dir / "o").string(), dir);
    CHECK(r.exit_code == 0);
    const std::uint64_t expected = blflow::solve_exponents(-2, 2);
    CHECK(contains(r.out, std::to_string(expected) + " relator-compatible tuples"));
    std::ifstream in(dir / "o" / "solutions.csv");
    std::string line;
    std::getline(in, line);
    CHECK(line == "t0,t1,t2,t3,t4,m1,m2,m3,m4,n1,n2,n3,n4");
    int rows = 0;
    while (std::getline(in, line))
        if (!line.empty() && line[0] != '#') ++rows;
    CHECK(rows == 50);
}

TEST_CASE("help exits 0, missing subcommand exits 2") {
    const fs::path dir = scratch("help");
    CHECK(run_cli("--help", dir).exit_code == 0);
    CHECK(run_cli("", dir).exit_code == 2);
    CHECK(run_cli("no-such-command", dir).exit_code == 2);
}
