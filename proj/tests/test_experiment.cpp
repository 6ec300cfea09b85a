#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include <alohadyn/experiment.hpp>

using namespace alohadyn;
namespace fs = std::filesystem;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

} // namespace

TEST_CASE("minimal config gets the documented defaults") {
    const ExperimentSpec spec = parse_config(
        "kind = degrees\nlambda = 1\np = 0.2\nbeta = 1.2\neta = 1\n");
    CHECK(spec.kind == ExperimentKind::degrees);
    CHECK(spec.base.window_half == 50.0);
    CHECK(spec.replications == 200);
    CHECK(spec.base.seed == 0);
    CHECK(spec.base.boundary == Boundary::torus);
    CHECK(spec.output_prefix == "degrees");
    CHECK(spec.planned_runs() == 200);
}

TEST_CASE("delay kinds default to the window and a distance grid") {
    const ExperimentSpec spec =
        parse_config("kind = delay_vs_distance\nlambda = 1\np = 0.2\nbeta = 1.2\neta = 1.5\n");
    CHECK(spec.base.boundary == Boundary::window);
    CHECK(spec.restrict_giant);
    CHECK(spec.distances.size() == 9);
    CHECK(spec.distances.front() == 5.0);
    CHECK(spec.distances.back() == 45.0);
    CHECK(spec.base.max_slots == 3000);
    CHECK(spec.fit_min_distance() == doctest::Approx(7.5));
}

TEST_CASE("interference kinds default to infinite eta") {
    const ExperimentSpec spec = parse_config("kind = nn_time\nlambda = 1\np = 0.125\nbeta = 2\n");
    CHECK(std::isinf(spec.base.eta));
    CHECK(spec.base.boundary == Boundary::torus);
    CHECK(spec.base.max_slots == 20000);
}

TEST_CASE("range violations name the field and line") {
    try {
        parse_config("kind = degrees\nlambda = 1\np = 1.5\nbeta = 1.2\neta = 1\n");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(e.line == 3);
        CHECK(std::string(e.what()).find("p:") != std::string::npos);
    }
}

TEST_CASE("unknown and duplicate keys are hard errors") {
    CHECK_THROWS_WITH_AS(parse_config("kind = degrees\nbogus = 1\n"),
                         doctest::Contains("unknown key"), ConfigError);
    CHECK_THROWS_WITH_AS(parse_config("kind = degrees\np = 0.2\np = 0.3\n"),
                         doctest::Contains("duplicate"), ConfigError);
    CHECK_THROWS_WITH_AS(parse_config("lambda = 1\n"), doctest::Contains("kind"), ConfigError);
    CHECK_THROWS_WITH_AS(parse_config("kind = nonsense\n"), doctest::Contains("unknown kind"),
                         ConfigError);
    CHECK_THROWS_WITH_AS(parse_config("kind = degrees\np 0.2\n"), doctest::Contains("key = value"),
                         ConfigError);
}

TEST_CASE("non-integer and non-finite counts are rejected") {
    CHECK_THROWS_WITH_AS(parse_config("kind = degrees\nreplications = 2.5\n"),
                         doctest::Contains("replications"), ConfigError);
    CHECK_THROWS_WITH_AS(parse_config("kind = degrees\nreplications = inf\n"),
                         doctest::Contains("replications"), ConfigError);
    CHECK_THROWS_WITH_AS(parse_config("kind = degrees\nmax_slots = inf\n"),
                         doctest::Contains("max_slots"), ConfigError);
    CHECK_THROWS_WITH_AS(parse_config("kind = degrees\nmax_slots = 0\n"),
                         doctest::Contains("max_slots"), ConfigError);
    CHECK_THROWS_WITH_AS(parse_config("kind = degrees\nseed = -3\n"),
                         doctest::Contains("seed"), ConfigError);
    CHECK_THROWS_WITH_AS(parse_config("kind = degrees\neta = oops\n"),
                         doctest::Contains("eta"), ConfigError);
}

TEST_CASE("sweep accounting feeds the manifest") {
    const ExperimentSpec spec = parse_config(
        "kind = degrees\nlambda = 1\nbeta = 1.2\neta = 1\n"
        "sweep p = 0.1, 0.2, 0.3, 0.4, 0.5\nreplications = 200\n");
    CHECK(spec.planned_runs() == 1000);
    CHECK(spec.effective_sweep().param == "p");
    CHECK(spec.effective_sweep().values.size() == 5);
    CHECK_THROWS_WITH_AS(
        parse_config("kind = degrees\nsweep p = 0.1\nsweep beta = 1.2\n"),
        doctest::Contains("one sweep axis"), ConfigError);
    CHECK_THROWS_WITH_AS(parse_config("kind = degrees\nsweep p = 0.1, 2.0\n"),
                         doctest::Contains("p:"), ConfigError);
}

TEST_CASE("comments and sweep values survive a round trip") {
    const ExperimentSpec spec = parse_config(
        "# degree scan\nkind = degrees  # trailing comment\nlambda = 2\np = 0.25\n"
        "beta = 1.2\neta = 0.8\nwindow_half = 9\nreplications = 4\nseed = 123\n");
    CHECK(spec.base.lambda == 2.0);
    CHECK(spec.base.seed == 123);
    CHECK(spec.base.window_half == 9.0);
}

TEST_CASE("rerunning a spec reproduces the raw csv byte for byte") {
    TempDir dir("alohadyn_test_rerun");
    const ExperimentSpec spec = parse_config(
        "kind = degrees\nlambda = 1\np = 0.2\nbeta = 1.2\neta = 1\nwindow_half = 8\n"
        "replications = 5\nseed = 11\n");
    RunOptions options;
    options.out_dir = (dir.path / "a").string();
    const ExperimentResult first = run_experiment(spec, options);
    options.out_dir = (dir.path / "b").string();
    const ExperimentResult second = run_experiment(spec, options);
    CHECK(slurp(first.raw_csv) == slurp(second.raw_csv));
    CHECK(slurp(first.summary_csv) == slurp(second.summary_csv));
}

TEST_CASE("parallel and serial runs write identical artifacts") {
    TempDir dir("alohadyn_test_par");
    const ExperimentSpec spec = parse_config(
        "kind = delay_vs_distance\nlambda = 1\np = 0.3\nbeta = 1.2\neta = 1.5\n"
        "window_half = 10\nreplications = 6\nseed = 21\ndistances = 2, 4, 6\n"
        "max_slots = 2000\nboundary = torus\n");
    RunOptions serial;
    serial.out_dir = (dir.path / "serial").string();
    serial.jobs = 1;
    RunOptions parallel;
    parallel.out_dir = (dir.path / "parallel").string();
    parallel.jobs = 2;
    const ExperimentResult a = run_experiment(spec, serial);
    const ExperimentResult b = run_experiment(spec, parallel);
    CHECK(slurp(a.raw_csv) == slurp(b.raw_csv));
    CHECK(slurp(a.summary_csv) == slurp(b.summary_csv));
}

TEST_CASE("single replication writes one raw row per measured quantity") {
    TempDir dir("alohadyn_test_rows");
    const ExperimentSpec spec = parse_config(
        "kind = delay_vs_distance\nlambda = 1\np = 0.3\nbeta = 1.2\neta = 1.5\n"
        "window_half = 10\nreplications = 1\nseed = 2\ndistances = 2, 5\n"
        "max_slots = 1500\nboundary = torus\n");
    RunOptions options;
    options.out_dir = dir.path.string();
    const ExperimentResult result = run_experiment(spec, options);
    const std::string raw = slurp(result.raw_csv);
    CHECK(std::count(raw.begin(), raw.end(), '\n') == 3); // header + 2 distances
    CHECK(raw.rfind("sweep_value,replication,distance,delay,hops,censored\n", 0) == 0);
}

TEST_CASE("degrees run verifies against the closed forms") {
    TempDir dir("alohadyn_test_verify");
    const ExperimentSpec spec = parse_config(
        "kind = degrees\nlambda = 1\np = 0.2\nbeta = 1.2\neta = 1\nwindow_half = 10\n"
        "replications = 40\nseed = 31\n");
    RunOptions options;
    options.out_dir = dir.path.string();
    options.verify = true;
    options.jobs = 2;
    const ExperimentResult result = run_experiment(spec, options);
    CHECK(result.verify_ok);
    REQUIRE(result.degree_results.size() == 1);

    // histogram artifacts exist and carry the schema
    bool found_hist = false;
    for (const std::string& path : result.extra_artifacts)
        if (path.find("out_hist") != std::string::npos) {
            found_hist = true;
            CHECK(slurp(path).rfind("degree,count,fraction\n", 0) == 0);
        }
    CHECK(found_hist);
}

TEST_CASE("manifest records the run shape") {
    TempDir dir("alohadyn_test_manifest");
    const ExperimentSpec spec = parse_config(
        "kind = percolation_scan\nlambda = 1\np = 0.2\nbeta = 1.2\neta = 1\n"
        "window_half = 10\nboundary = torus\nreplications = 3\n"
        "eta_values = 1.0, 1.5\nseed = 17\n");
    RunOptions options;
    options.out_dir = dir.path.string();
    const ExperimentResult result = run_experiment(spec, options);
    const nlohmann::json manifest = nlohmann::json::parse(slurp(result.manifest));
    CHECK(manifest["tool"] == "alohadyn");
    CHECK(manifest["kind"] == "percolation_scan");
    CHECK(manifest["planned_runs"] == 6);
    CHECK(manifest["sweep"]["param"] == "eta");
    CHECK(manifest["master_seed"] == 17);
    REQUIRE(result.percolation_rows.size() == 2);
    CHECK(result.percolation_rows[0].eta == 1.0);
    CHECK_FALSE(result.percolation_rows[0].threshold_ok);
    CHECK(result.percolation_rows[1].threshold_ok);
}

TEST_CASE("failures name the sweep value and seed") {
    TempDir dir("alohadyn_test_fail");
    // horizon of one slot forces the over-censoring signal inside the
    // nearest-neighbor estimator
    const ExperimentSpec spec = parse_config(
        "kind = nn_time\nlambda = 1\np = 0.125\nbeta = 2\nwindow_half = 8\n"
        "replications = 30\nmax_slots = 1\nseed = 9\n");
    RunOptions options;
    options.out_dir = dir.path.string();
    CHECK_THROWS_WITH_AS(run_experiment(spec, options), doctest::Contains("sweep value"),
                         std::runtime_error);
}

TEST_CASE("connect-time runs export the summary json schema") {
    TempDir dir("alohadyn_test_json");
    const ExperimentSpec spec = parse_config(
        "kind = nn_time\nlambda = 1\np = 0.125\nbeta = 2\nwindow_half = 8\n"
        "replications = 25\nmax_slots = 5000\nseed = 12\n");
    RunOptions options;
    options.out_dir = dir.path.string();
    const ExperimentResult result = run_experiment(spec, options);
    REQUIRE(result.extra_artifacts.size() == 1);
    const nlohmann::json records = nlohmann::json::parse(slurp(result.extra_artifacts[0]));
    REQUIRE(records.is_array());
    REQUIRE(records.size() == 1);
    for (const char* key :
         {"sweep_value", "estimate", "std_error", "n", "censored_fraction", "diverges"})
        CHECK(records[0].contains(key));
}

TEST_CASE("hops kind writes the extended summary schema") {
    TempDir dir("alohadyn_test_hops");
    const ExperimentSpec spec = parse_config(
        "kind = hops_vs_distance\nlambda = 1\np = 0.3\nbeta = 1.2\neta = 1.5\n"
        "window_half = 10\nboundary = torus\nreplications = 5\nseed = 13\n"
        "distances = 2, 4\nmax_slots = 2000\nrestrict_giant = false\n");
    RunOptions options;
    options.out_dir = dir.path.string();
    const ExperimentResult result = run_experiment(spec, options);
    CHECK(slurp(result.summary_csv)
              .rfind("sweep_value,distance,mean_delay,se_delay,mean_hops,se_hops,"
                     "mean_hop_length,se_hop_length,n,censored_fraction\n",
                     0) == 0);
    for (const DelaySummaryRow& row : result.delay_summary) {
        CHECK(row.mean_hop_length > 0.0);
        CHECK(row.mean_hop_length < 1.5); // hops never exceed eta
    }
}

TEST_CASE("every shipped sample config parses") {
    const fs::path dir = fs::path(ALOHADYN_SOURCE_DIR) / "configs";
    std::size_t seen = 0;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.path().extension() != ".cfg") continue;
        ++seen;
        INFO(entry.path().string());
        CHECK_NOTHROW(parse_config(slurp(entry.path().string())));
    }
    CHECK(seen >= 7);
}

TEST_CASE("formulas kind writes the closed-form record") {
    TempDir dir("alohadyn_test_formulas");
    const ExperimentSpec spec =
        parse_config("kind = formulas\nlambda = 1\np = 0.2\nbeta = 1.2\neta = 1\n");
    RunOptions options;
    options.out_dir = dir.path.string();
    const ExperimentResult result = run_experiment(spec, options);
    REQUIRE(result.extra_artifacts.size() == 1);
    const nlohmann::json j = nlohmann::json::parse(slurp(result.extra_artifacts[0]));
    CHECK(j["expected_out_degree"].get<double>() == doctest::Approx(1.6538).epsilon(1e-3));
    CHECK(j["nu"].get<double>() == doctest::Approx(0.9109).epsilon(1e-3));
    CHECK_FALSE(j["expected_nn_time"]["divergent"].get<bool>());
}
