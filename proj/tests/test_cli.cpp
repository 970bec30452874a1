// Drives the command-line binary end to end: exit-code contract, artifact
// formats, and the measure-csv round trip.

#include <catch2/catch_amalgamated.hpp>

#include <bgw/bgw.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

namespace {

using bgw::json;

struct cli_result {
    int exit_code = -1;
    std::string output; // stdout + stderr interleaved
};

cli_result run_cli(const std::string& args) {
    const std::string cmd = std::string(BGW_CLI_PATH) + " " + args + " 2>&1";
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    std::string out;
    char buf[4096];
    std::size_t got = 0;
    while ((got = std::fread(buf, 1, sizeof buf, pipe)) > 0) out.append(buf, got);
    const int status = pclose(pipe);
    cli_result res;
    res.output = std::move(out);
    if (WIFEXITED(status)) res.exit_code = WEXITSTATUS(status);
    return res;
}

// JSON report lines start with '{'; csv and comments do not.
std::vector<json> json_lines(const std::string& text) {
    std::vector<json> out;
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line))
        if (!line.empty() && line.front() == '{') out.push_back(json::parse(line));
    return out;
}

constexpr const char* kPureDeath = R"('{"type":"pure_death","m":0.5}')";
constexpr const char* kGeometric = R"('{"type":"geometric","b":0.25}')";

} // namespace

TEST_CASE("cli exit codes follow the contract") {
    SECTION("yaglom on the pure-death law prints the identity table") {
        const auto res = run_cli(std::string("yaglom --offspring ") + kPureDeath +
                                 " --order 8");
        CHECK(res.exit_code == 0);
        CHECK(res.output.find("k,nu_k") != std::string::npos);
        CHECK(res.output.find("\n1,1\n") != std::string::npos); // H = z
        CHECK(res.output.find("\n2,0\n") != std::string::npos);
    }

    SECTION("construct with verification exits 0 and emits table plus reports") {
        const auto res = run_cli(std::string("construct --offspring ") + kPureDeath +
                                 " --alpha 0.5 --order 2048 --verify");
        CHECK(res.exit_code == 0);
        CHECK(res.output.find("k,nu_k") != std::string::npos);
        const auto reports = json_lines(res.output); // csv rows are not json
        REQUIRE(reports.size() == 2);
        bool saw_fe = false, saw_eigen = false;
        for (const auto& r : reports) {
            if (!r.contains("check_name")) continue;
            if (r["check_name"] == "functional_equation") {
                saw_fe = true;
                CHECK(r["passed"].get<bool>());
            }
            if (r["check_name"] == "eigen") {
                saw_eigen = true;
                CHECK(r["passed"].get<bool>());
            }
        }
        CHECK(saw_fe);
        CHECK(saw_eigen);
    }

    SECTION("alpha outside the representation range is an input error") {
        const auto res = run_cli(std::string("construct --offspring ") + kPureDeath +
                                 " --alpha 1.5");
        CHECK(res.exit_code == 1);
        CHECK(res.output.find("error: OutOfRangeAlpha:") != std::string::npos);
        CHECK(res.output.find('\n') == res.output.size() - 1); // single line

        const auto integral = run_cli(
            std::string("construct --offspring ") + kPureDeath +
            R"( --alpha 1.0 --measure '{"type":"log_uniform","c":1.0}')");
        CHECK(integral.exit_code == 1);
        CHECK(integral.output.find("error: OutOfRangeAlpha:") != std::string::npos);
    }

    SECTION("malformed specs are input errors with machine-parsable lines") {
        const auto bad_json = run_cli("yaglom --offspring '{\"type\":\"nope\"}'");
        CHECK(bad_json.exit_code == 1);
        CHECK(bad_json.output.rfind("error: InvalidConfig:", 0) == 0);

        const auto critical = run_cli(
            R"(yaglom --offspring '{"type":"pmf","p":[0.0,1.0]}')");
        CHECK(critical.exit_code == 1);
        CHECK(critical.output.rfind("error: NotSubcritical:", 0) == 0);

        const auto unknown_flag = run_cli(std::string("yaglom --offspring ") +
                                          kPureDeath + " --frobnicate 3");
        CHECK(unknown_flag.exit_code == 1);
        CHECK(unknown_flag.output.rfind("error:", 0) == 0);

        const auto no_subcommand = run_cli("");
        CHECK(no_subcommand.exit_code == 1);
    }

    SECTION("verification failure exits 2, not 1") {
        const auto res = run_cli(std::string("gamma-check --a 0.5 --alpha 0.3 ") +
                                 "--tol 1e-18");
        CHECK(res.exit_code == 2);
        const auto reports = json_lines(res.output);
        REQUIRE(reports.size() == 1);
        CHECK_FALSE(reports[0]["passed"].get<bool>());

        const auto ok = run_cli("gamma-check --a 0.5 --alpha 0.3");
        CHECK(ok.exit_code == 0);
        CHECK(json_lines(ok.output)[0]["passed"].get<bool>());
    }

    SECTION("hoppe and joffe run on both example laws") {
        const auto hop = run_cli(std::string("hoppe --offspring ") + kGeometric +
                                 " --alpha 0.4 --order 128 --grid 0.1 0.3 0.5");
        CHECK(hop.exit_code == 0);
        CHECK(json_lines(hop.output)[0]["check_name"] == "hoppe_roundtrip");

        const auto jof = run_cli(std::string("joffe --offspring ") + kPureDeath +
                                 " --terms 12");
        CHECK(jof.exit_code == 0);
        const auto out = json_lines(jof.output)[0];
        REQUIRE(out["partial_sums"].size() == 12);
        // pure-death partial sums are exactly 1, 2, 3, ...
        CHECK(out["partial_sums"][11].get<double>() == 12.0);
    }

    SECTION("mc subcommands run small and respect --tv-limit") {
        const auto yag = run_cli(std::string("mc --mode yaglom --offspring ") +
                                 kPureDeath + " --n 3 --samples 20000 --seed 7");
        CHECK(yag.exit_code == 0);
        const auto yrep = json_lines(yag.output)[0];
        CHECK(yrep["mode"] == "yaglom");
        CHECK(yrep["tv_distance"].get<double>() == 0.0); // H = z exactly

        const auto strict = run_cli(std::string("mc --mode onestep --offspring ") +
                                    kPureDeath +
                                    " --alpha 0.8 --order 256 --samples 20000 "
                                    "--seed 7 --tv-limit 1e-9");
        CHECK(strict.exit_code == 2);
        CHECK_FALSE(json_lines(strict.output)[0]["passed"].get<bool>());

        const auto loose = run_cli(std::string("mc --mode onestep --offspring ") +
                                   kPureDeath +
                                   " --alpha 0.8 --order 256 --samples 20000 "
                                   "--seed 7 --tv-limit 0.2");
        CHECK(loose.exit_code == 0);
    }
}

TEST_CASE("cli measure csv round-trips with identical residuals") {
    const std::string path = "bgw_cli_roundtrip.csv";
    const auto build = run_cli(std::string("construct --offspring ") + kGeometric +
                               " --alpha 0.5 --order 2048 --verify --out " + path);
    REQUIRE(build.exit_code == 0);
    const auto built = json_lines(build.output);
    REQUIRE(built.size() == 2);

    const auto recheck = run_cli("verify --measure-csv " + path);
    REQUIRE(recheck.exit_code == 0);
    const auto again = json_lines(recheck.output);
    REQUIRE(again.size() == 2);

    for (std::size_t i = 0; i < 2; ++i) {
        REQUIRE(built[i]["check_name"] == again[i]["check_name"]);
        const double r1 = built[i]["residual"].get<double>();
        const double r2 = again[i]["residual"].get<double>();
        // 17-digit serialization restores every coefficient bit-exact, so the
        // residuals agree far beyond the documented 1e-12.
        REQUIRE(std::abs(r1 - r2) <= 1e-12);
        CHECK(r1 == r2);
    }

    SECTION("the csv feeds the recovery and verify subcommands directly") {
        const auto rec = run_cli("recover --measure-csv " + path + " --n 4");
        CHECK(rec.exit_code == 0);
        const auto rep = json_lines(rec.output)[0];
        CHECK(rep["p_n"].get<double>() > 0.0);
        REQUIRE(rep["bin_mass"].size() == 16);

        const auto fe_only =
            run_cli("verify --measure-csv " + path + " --checks fe --grid 0.5");
        CHECK(fe_only.exit_code == 0);
        CHECK(json_lines(fe_only.output).size() == 1);

        const auto strict =
            run_cli("verify --measure-csv " + path + " --fe-tol 1e-30");
        CHECK(strict.exit_code == 2);

        const auto bad_check =
            run_cli("verify --measure-csv " + path + " --checks nonsense");
        CHECK(bad_check.exit_code == 1);
        CHECK(bad_check.output.rfind("error: InvalidConfig:", 0) == 0);
    }

    std::remove(path.c_str());
}

TEST_CASE("cli artifacts are well-formed") {
    SECTION("construct table header carries the build context") {
        const std::string path = "bgw_cli_header.csv";
        const auto res = run_cli(std::string("construct --offspring ") + kPureDeath +
                                 R"( --alpha 0.5 --measure '{"type":"log_uniform","c":1.0}')" +
                                 " --normalize --order 64 --out " + path);
        REQUIRE(res.exit_code == 0);
        std::ifstream in(path);
        REQUIRE(in.good());
        std::string header_line;
        std::getline(in, header_line);
        REQUIRE(header_line.rfind("# ", 0) == 0);
        const json header = json::parse(header_line.substr(2));
        CHECK(header["alpha"].get<double>() == 0.5);
        CHECK(header["lambda"].get<double>() == std::pow(0.5, 0.5));
        CHECK(header["offspring_spec"]["type"] == "pure_death");
        // --normalize rescales the log-uniform weight to the QSD constant
        const double c = header["measure_spec"]["c"].get<double>();
        CHECK(std::abs(c - 0.5 / std::tgamma(0.5)) < 1e-10);
        std::string columns;
        std::getline(in, columns);
        CHECK(columns == "k,nu_k");
        std::remove(path.c_str());
    }

    SECTION("extremal construction round-trips through its csv") {
        const std::string path = "bgw_cli_extremal.csv";
        const auto res = run_cli(std::string("construct --offspring ") + kGeometric +
                                 " --extremal-t 0.25 --order 64 --out " + path);
        REQUIRE(res.exit_code == 0);
        std::ifstream in(path);
        REQUIRE(in.good());
        const auto parsed = bgw::read_measure_csv(in);
        CHECK(parsed.nu.source.kind == bgw::measure_kind::extremal);
        CHECK(parsed.nu.source.t == 0.25);
        CHECK(parsed.nu.lambda == 1.0);
        std::remove(path.c_str());
    }

    SECTION("mc qsd report carries the sampler diagnostics") {
        const auto res = run_cli(std::string("mc --mode qsd --offspring ") +
                                 kGeometric +
                                 " --alpha 0.8 --samples 2000 --table-k 512 "
                                 "--k-ref 32 --order 128 --seed 11");
        REQUIRE(res.exit_code == 0);
        const auto rep = json_lines(res.output)[0];
        CHECK(rep["mode"] == "qsd");
        CHECK(rep["n_samples"].get<double>() == 2000.0);
        CHECK(rep["seed"].get<double>() == 11.0);
        CHECK(rep["extras"].contains("nlaw_table_deficit"));
        CHECK(rep["normalization_scale"].get<double>() > 0.0);
        REQUIRE(rep["empirical_pmf"].size() == 33); // index-aligned, 0..32
    }
}
