#include <doctest.h>

#include "expile/examples.hpp"
#include "expile/piling.hpp"
#include "expile/runner.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

using namespace expile;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(bool(in));
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

bool throws_containing(const std::string& text, const std::string& needle) {
    try {
        (void)parse_config(text);
    } catch (const SpecError& e) {
        return std::string(e.what()).find(needle) != std::string::npos;
    }
    return false;
}

} // namespace

TEST_CASE("config round trip with every section") {
    std::string text =
        "# run description\n"
        "kind = extremal-index\n"
        "example = ex-3-6\n"
        "seed = 99\n"
        "output = artifacts/run1\n"
        "\n"
        "[budgets]\n"
        "n = 5000\n"
        "trials = 200000   # starts\n"
        "clusters = 77\n"
        "[params]\n"
        "tau = 3/2\n"
        "q_n = 2\n"
        "eps = 1/1000\n"
        "threads = 2\n";
    ExperimentConfig cfg = parse_config(text);
    CHECK(cfg.kind == "extremal-index");
    CHECK(cfg.example == "ex-3-6");
    CHECK(cfg.seed == 99);
    CHECK(cfg.output_dir == "artifacts/run1");
    CHECK(cfg.n == 5000);
    CHECK(cfg.trials == 200000);
    CHECK(cfg.clusters == 77);
    CHECK(cfg.tau == 1.5);
    CHECK(cfg.q_n == 2);
    CHECK(cfg.eps == 0.001);
    CHECK(cfg.threads == 2);
    CHECK(resolve_spec(cfg).name == "ex-3-6");
}

TEST_CASE("custom block builds a working spec") {
    std::string text =
        "kind = piling-law\n"
        "example = custom\n"
        "[custom]\n"
        "slopes = 2\n"
        "zeta = sqrt2/16\n"
        "alpha = 1/2\n"
        "offsets = 0 1 3\n"
        "weights = 1 9 1\n";
    ExperimentConfig cfg = parse_config(text);
    MaximalSetSpec spec = resolve_spec(cfg);
    CHECK(spec.name == "custom");
    CHECK(spec.finalized());
    REQUIRE(spec.ball_count() == 3);
    CHECK(spec.balls[1].c == Quad(9));
    CHECK(spec.alpha == Rational(1, 2));

    // structurally the upweighted chain: same anchor shares
    PilingLaw law = build_piling_law(spec);
    CHECK(law.weights[1] == Quad(Rational(3, 5)));

    std::string periodic =
        "kind = tail\n"
        "example = custom\n"
        "[custom]\n"
        "slopes = 2 3\n"
        "zeta = 1/7 0\n"
        "alpha = 1/4\n"
        "offsets = 0 1\n"
        "weights = 1 256\n"
        "mode = periodic\n"
        "period = 3\n";
    MaximalSetSpec per = resolve_spec(parse_config(periodic));
    CHECK(per.mode == SetMode::Periodic);
    CHECK(per.period == 3);
    CHECK(per.dim() == 2);

    std::string countable =
        "kind = piling-law\n"
        "example = custom\n"
        "[custom]\n"
        "slopes = 3\n"
        "zeta = series3\n"
        "alpha = 1/2\n"
        "offsets = 0 3 9\n"
        "weights = 1 1/2 1/4\n"
        "mode = countable\n"
        "countable_base = 3\n"
        "countable_ratio = 1/2\n";
    MaximalSetSpec cnt = resolve_spec(parse_config(countable));
    CHECK(cnt.mode == SetMode::Countable);
    REQUIRE(cnt.countable.has_value());
    CHECK(cnt.countable->c_ratio == Rational(1, 2));
    CHECK(countable_ratio(cnt) == Rational(1, 2));
}

TEST_CASE("config errors name the offending line") {
    CHECK(throws_containing("kind = bogus\n", "line 1: unknown kind 'bogus'"));
    CHECK(throws_containing("example = ex-3-4\n", "missing 'kind'"));
    CHECK(throws_containing("kind = tail\nexample = nope\n", "line 2: unknown example id"));
    CHECK(throws_containing("kind = tail\nflavor = x\n", "unknown key 'flavor'"));
    CHECK(throws_containing("kind = tail\n[budgets]\nspins = 3\n", "unknown budget key"));
    CHECK(throws_containing("kind = tail\n[wat]\n", "unknown section [wat]"));
    CHECK(throws_containing("kind = tail\n[budgets]\nn = 12x\n", "trailing characters"));
    CHECK(throws_containing("kind = tail\n[budgets]\nn\n", "expected key = value"));
    CHECK(throws_containing("kind = tail\n[custom]\nslopes = 2\n",
                            "[custom] section given but example is 'ex-3-4'"));
    CHECK(throws_containing("kind = tail\nexample = custom\n",
                            "example = custom requires a [custom] section"));

    std::string base =
        "kind = tail\n"
        "example = custom\n"
        "[custom]\n";
    CHECK(throws_containing(base + "zeta = 1/7\nalpha = 1/2\noffsets = 0\n",
                            "needs 'slopes'"));
    CHECK(throws_containing(base + "slopes = 2 3\nzeta = 1/7\nalpha = 1/2\noffsets = 0\n",
                            "one zeta coordinate per slope"));
    CHECK(throws_containing(base + "slopes = 2\nzeta = 1/7\noffsets = 0\n", "needs 'alpha'"));
    CHECK(throws_containing(base + "slopes = 2\nzeta = 1/7\nalpha = 1/2\n", "needs 'offsets'"));
    CHECK(throws_containing(
        base + "slopes = 2\nzeta = 1/7\nalpha = 1/2\noffsets = 0 1\nweights = 1\n",
        "equal length"));
    CHECK(throws_containing(
        base + "slopes = 2\nzeta = 1/7\nalpha = 1/2 1/4\noffsets = 0 1\n",
        "mixed tail indices"));
    CHECK(throws_containing(base + "slopes = 2\nzeta = 1/7\nalpha = sqrt2\noffsets = 0\n",
                            "alpha must be rational"));
    CHECK(throws_containing(
        base + "slopes = 2\nzeta = 1/7\nalpha = 1/2\noffsets = 0\nmode = weekly\n",
        "unknown mode 'weekly'"));
    CHECK(throws_containing(base + "slopes = 2\nzeta = 2/1\nalpha = 1/2\noffsets = 0\n",
                            "cannot parse seed"));

    CHECK_THROWS_AS((void)load_config("no_such_file.cfg"), SpecError);
}

TEST_CASE("law tables match the frozen goldens byte for byte") {
    for (const auto& id : example_ids()) {
        fs::path golden = fs::path(EXPILE_SOURCE_DIR) / "golden" / ("law-" + id + ".csv");
        REQUIRE_MESSAGE(fs::exists(golden), golden.string());
        CHECK(law_to_csv(build_piling_law(example_spec(id))) == slurp(golden));
    }
}

TEST_CASE("experiment runs are deterministic artifacts") {
    ExperimentConfig cfg;
    cfg.kind = "piling-law";
    cfg.example = "ex-3-10";
    cfg.output_dir = "tmp_cfgtest_a";
    RunResult a = run_experiment(cfg);
    CHECK(a.all_pass);
    REQUIRE(!a.artifacts.empty());
    cfg.output_dir = "tmp_cfgtest_b";
    RunResult b = run_experiment(cfg);
    REQUIRE(a.artifacts.size() == b.artifacts.size());
    for (size_t k = 0; k < a.artifacts.size(); ++k)
        CHECK(slurp(a.artifacts[k]) == slurp(b.artifacts[k]));
    CHECK(a.artifacts.back().find("summary.csv") != std::string::npos);
    CHECK(summary_csv(a) == summary_csv(b));

    // a stochastic kind at a reduced budget is reproducible too
    ExperimentConfig ei;
    ei.kind = "extremal-index";
    ei.example = "ex-3-4";
    ei.n = 2000;
    ei.trials = 300000;
    ei.seed = 7;
    ei.output_dir = "tmp_cfgtest_c";
    RunResult ra = run_experiment(ei);
    ei.output_dir = "tmp_cfgtest_d";
    ei.threads = 1;                      // thread count must not leak into artifacts
    RunResult rb = run_experiment(ei);
    REQUIRE(ra.artifacts.size() == rb.artifacts.size());
    for (size_t k = 0; k < ra.artifacts.size(); ++k)
        CHECK(slurp(ra.artifacts[k]) == slurp(rb.artifacts[k]));

    for (const char* d : {"tmp_cfgtest_a", "tmp_cfgtest_b", "tmp_cfgtest_c", "tmp_cfgtest_d"})
        fs::remove_all(d);
}

TEST_CASE("command line entry point") {
    fs::path dir = fs::temp_directory_path() / "expile_cli_case";
    fs::create_directories(dir);
    fs::path cfg_path = dir / "run.cfg";
    {
        std::ofstream out(cfg_path);
        out << "kind = dependence-bounds\n[budgets]\nn = 1000\n";
    }
    fs::path out_dir = dir / "out";
    std::string quiet = " > " + (dir / "cli.log").string() + " 2>&1";

    std::string ok = std::string(EXPILE_CLI_PATH) + " " + cfg_path.string() + " -o " +
                     out_dir.string() + quiet;
    CHECK(std::system(ok.c_str()) == 0);
    CHECK(fs::exists(out_dir / "dependence.csv"));
    CHECK(fs::exists(out_dir / "summary.csv"));
    std::string log = slurp(dir / "cli.log");
    CHECK(log.find("ALL PASS") != std::string::npos);

    std::string missing = std::string(EXPILE_CLI_PATH) + " " + (dir / "nope.cfg").string() + quiet;
    int rc = std::system(missing.c_str());
    CHECK(rc != 0);

    {
        std::ofstream out(cfg_path);
        out << "kind = mystery\n";
    }
    int rc2 = std::system(ok.c_str());
    CHECK(rc2 != 0);
    std::string log2 = slurp(dir / "cli.log");
    CHECK(log2.find("unknown kind") != std::string::npos);

    std::string list = std::string(EXPILE_CLI_PATH) + " --list-examples" + quiet;
    CHECK(std::system(list.c_str()) == 0);
    std::string log3 = slurp(dir / "cli.log");
    for (const auto& id : example_ids()) CHECK(log3.find(id) != std::string::npos);

    fs::remove_all(dir);
}
