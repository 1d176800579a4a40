#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "msl/artifacts.hpp"
#include "msl/config.hpp"
#include "msl/errors.hpp"
#include "msl/returns_io.hpp"
#include "test_helpers.hpp"

namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("msl_io_test_" + std::to_string(::getpid()) + "_" +
                std::to_string(reinterpret_cast<std::uintptr_t>(this)));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    out << content;
}

}  // namespace

TEST_SUITE("cli_io") {

TEST_CASE("well-formed ingestion") {
    TempDir dir;
    write_file(dir.file("r.csv"),
               "# units: percent\n"
               "date,AAA,BBB\n"
               "2006-01-06,1.25,-0.31\n"
               "2006-01-13,0.4,0.9\n");
    const auto series = msl::ingest_returns(dir.file("r.csv"));
    CHECK(series.T() == 2);
    CHECK(series.d_y() == 2);
    CHECK(series.units == msl::ReturnUnits::Percent);
    CHECK(series.assets[1] == "BBB");
    CHECK(series.values(0, 1) == -0.31);
    CHECK(series.split_index("2006-01-06") == 1);
    CHECK(series.split_index("2005-12-30") == 0);
}

TEST_CASE("ingestion errors carry row and column positions") {
    TempDir dir;
    write_file(dir.file("blank.csv"),
               "# units: percent\ndate,A,B\n2006-01-06,1.0,\n");
    try {
        msl::ingest_returns(dir.file("blank.csv"));
        FAIL("expected DataError");
    } catch (const msl::DataError& e) {
        CHECK(std::string(e.what()).find("row 3") != std::string::npos);
        CHECK(std::string(e.what()).find("column 3") != std::string::npos);
    }

    write_file(dir.file("dup.csv"),
               "# units: percent\ndate,A\n2006-01-06,1.0\n2006-01-06,2.0\n");
    CHECK_THROWS_WITH_AS(msl::ingest_returns(dir.file("dup.csv")),
                         doctest::Contains("duplicate date"), msl::DataError);

    write_file(dir.file("order.csv"),
               "# units: percent\ndate,A\n2006-01-13,1.0\n2006-01-06,2.0\n");
    CHECK_THROWS_WITH_AS(msl::ingest_returns(dir.file("order.csv")),
                         doctest::Contains("not increasing"), msl::DataError);

    write_file(dir.file("nounits.csv"), "date,A\n2006-01-06,1.0\n");
    CHECK_THROWS_WITH_AS(msl::ingest_returns(dir.file("nounits.csv")),
                         doctest::Contains("units"), msl::DataError);

    write_file(dir.file("nan.csv"), "# units: percent\ndate,A\n2006-01-06,nan\n");
    CHECK_THROWS_AS(msl::ingest_returns(dir.file("nan.csv")), msl::DataError);
}

TEST_CASE("returns round trip at full precision") {
    TempDir dir;
    msl::ReturnsSeries series;
    series.dates = {"2006-01-06", "2006-01-13", "2006-01-20"};
    series.assets = {"XLB", "XLE"};
    series.units = msl::ReturnUnits::Decimal;
    series.values.resize(3, 2);
    series.values << 0.0123456789012345678, -1.0 / 3.0, 2e-17, 1.5, -0.25, M_PI;
    msl::write_returns(dir.file("rt.csv"), series);
    const auto back = msl::ingest_returns(dir.file("rt.csv"));
    CHECK(back.units == msl::ReturnUnits::Decimal);
    REQUIRE(back.values.rows() == 3);
    for (int t = 0; t < 3; ++t) {
        for (int c = 0; c < 2; ++c) {
            REQUIRE(back.values(t, c) == series.values(t, c));  // bit-exact
        }
    }
}

TEST_CASE("theta file round trip") {
    TempDir dir;
    const auto theta = test::random_theta(3, 1, 31415);
    msl::write_theta(dir.file("theta.csv"), theta);
    const auto back = msl::read_theta(dir.file("theta.csv"), 3, 1);
    CHECK(back.B == theta.B);
    CHECK(back.R == theta.R);
    CHECK(back.p == theta.p);

    // wrong shape is rejected with a field-level message
    CHECK_THROWS_AS(msl::read_theta(dir.file("theta.csv"), 4, 1), msl::DataError);
}

TEST_CASE("chain csv round trip and summary") {
    TempDir dir;
    msl::PmmhResult result;
    result.param_names = msl::MslParams::field_names(2, 1);
    const auto base = test::make_theta(2);
    for (int i = 0; i < 50; ++i) {
        msl::ChainState s;
        s.theta = base;
        s.theta.p = 0.5 + 0.001 * i;
        s.avg_loglik = -100.0 - i;
        s.accepted = (i % 3 == 0);
        result.chain.push_back(s);
    }
    msl::write_chain_csv(dir.file("chain.csv"), result);
    const auto file = msl::read_chain_csv(dir.file("chain.csv"));
    CHECK(file.param_names == result.param_names);
    REQUIRE(file.draws.rows() == 50);
    CHECK(file.avg_loglik[7] == -107.0);
    CHECK(file.accepted[3] == 1);
    const int p_col = static_cast<int>(file.param_names.size()) - 1;
    CHECK(file.draws(49, p_col) == 0.5 + 0.001 * 49);

    // summary on the persisted draws: constant columns give zero mcse
    const auto rows = msl::summarize_chain_file(file, 0);
    CHECK(rows.front().name == "beta2");
    CHECK(rows.front().mcse <= 1e-12);
    CHECK(rows.back().name == "p");
    CHECK(rows.back().est == doctest::Approx(0.5 + 0.001 * 24.5));
}

TEST_CASE("config parsing, defaults and echo") {
    TempDir dir;
    write_file(dir.file("cfg.json"), R"({
      "model": {"d_y": 3, "K": 1},
      "pmmh": {"iterations": 500, "seed": 9},
      "data": {"returns": "returns.csv", "train_end": "2007-11-23"},
      "output_dir": "artifacts"
    })");
    const auto cfg = msl::load_config(dir.file("cfg.json"));
    CHECK(cfg.model.d_y == 3);
    CHECK(cfg.model.d_f == 1);  // default
    CHECK(cfg.model.K == 1);
    CHECK(cfg.pmmh.iterations == 500);
    CHECK(cfg.pmmh.particles == 50);  // default
    CHECK(cfg.pmmh.seed == 9);
    CHECK(cfg.resolved_burn_in() == 125);
    CHECK(cfg.data.train_end == "2007-11-23");
    CHECK(cfg.output_dir == "artifacts");

    const std::string echo = msl::config_echo_json(cfg, 4);
    CHECK(echo.find("\"iterations\": 500") != std::string::npos);
    CHECK(echo.find("\"workers\": 4") != std::string::npos);

    write_file(dir.file("broken.json"), "{not json");
    CHECK_THROWS_AS(msl::load_config(dir.file("broken.json")), msl::ConfigError);
    CHECK_THROWS_AS(msl::load_config(dir.file("missing.json")), msl::ConfigError);
}

TEST_CASE("summary csv emission") {
    TempDir dir;
    std::vector<msl::SummaryRow> rows(2);
    rows[0] = {"beta2", 0.9, 0.01, 0.7, 1.1};
    rows[1] = {"p", 0.87, 0.003, 0.77, 0.97};
    msl::write_summary_csv(dir.file("summary.csv"), rows);
    std::ifstream in(dir.file("summary.csv"));
    std::string line;
    std::getline(in, line);
    CHECK(line == "param,est,mcse,lower95,upper95");
    std::getline(in, line);
    CHECK(line.substr(0, 6) == "beta2,");
}

}  // TEST_SUITE
