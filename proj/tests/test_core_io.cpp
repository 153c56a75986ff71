#include "oracles.hpp"

#include "selfsim/csv.hpp"
#include "selfsim/series.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

using namespace selfsim;

TEST_CASE("price column converts to log returns") {
    const auto p = parse_csv("close\n100\n110\n121\n", ValueFormat::price);
    REQUIRE(p.size() == 1);
    const auto v = p.begin()->second.series.values();
    REQUIRE(v.size() == 2);
    CHECK(v[0] == doctest::Approx(std::log(1.1)).epsilon(1e-14));
    CHECK(v[1] == doctest::Approx(std::log(1.1)).epsilon(1e-14));
}

TEST_CASE("long form with two tickers") {
    const std::string text =
        "date,ticker,value\n"
        "2020-01-01,AAA,10\n2020-01-01,BBB,20\n"
        "2020-01-02,AAA,11\n2020-01-02,BBB,21\n"
        "2020-01-03,AAA,12\n2020-01-03,BBB,22\n"
        "2020-01-04,AAA,13\n2020-01-04,BBB,23\n";
    const auto p = parse_csv(text, ValueFormat::price);
    REQUIRE(p.size() == 2);
    CHECK(p.at("AAA").series.size() == 3);
    CHECK(p.at("BBB").series.size() == 3);
    CHECK(p.at("BBB").series[0] == doctest::Approx(std::log(21.0 / 20.0)));
}

TEST_CASE("long form rows out of date order are sorted") {
    const auto p = parse_csv("date,ticker,value\n2020-01-03,A,4\n2020-01-01,A,1\n2020-01-02,A,2\n",
                             ValueFormat::price);
    const auto v = p.at("A").series.values();
    CHECK(v[0] == doctest::Approx(std::log(2.0)));
    CHECK(v[1] == doctest::Approx(std::log(2.0)));
}

TEST_CASE("wide form with a missing cell") {
    const auto p = parse_csv("date,A,B\n1,0.1,0.2\n2,,0.3\n3,0.4,0.5\n", ValueFormat::ret);
    CHECK(p.at("A").series.size() == 2);
    CHECK(p.at("B").series.size() == 3);
}

TEST_CASE("non-numeric cell reports its line") {
    const std::string text = "r\n0.1\n0.2\n0.3\n0.4\n0.5\nabc\n0.7\n";
    try {
        (void)parse_csv(text, ValueFormat::ret);
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.line() == 7);
        CHECK(std::string(e.what()).find("line 7") != std::string::npos);
    }
}

TEST_CASE("load_csv on a missing file throws") {
    CHECK_THROWS((void)load_csv("/nonexistent/file.csv", ValueFormat::ret));
}

TEST_CASE("write then load a single series") {
    const auto path = std::filesystem::temp_directory_path() / "selfsim_series_rt.csv";
    const TimeSeries x("abc", {0.5, -1.25, 3.0e-7, 2.0});
    write_series_csv(path, x);
    const auto p = load_csv(path, ValueFormat::ret);
    const auto v = p.begin()->second.series.values();
    REQUIRE(v.size() == 4);
    for (std::size_t i = 0; i < 4; ++i) CHECK(v[i] == x[i]);
    std::filesystem::remove(path);
}

TEST_CASE("price round trip through cumulative sums") {
    const auto g = oracle::gaussian(500, 5, 0.01);
    std::vector<double> logp(501, std::log(50.0));
    for (std::size_t i = 0; i < g.size(); ++i) logp[i + 1] = logp[i] + g[i];
    std::string text = "px\n";
    char buf[64];
    for (double l : logp) {
        std::snprintf(buf, sizeof buf, "%.17g\n", std::exp(l));
        text += buf;
    }
    const auto r = parse_csv(text, ValueFormat::price).begin()->second.series.values();
    double acc = logp[0];
    double worst = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) {
        acc += r[i];
        worst = std::max(worst, std::abs(acc - logp[i + 1]));
    }
    CHECK(worst <= 1e-12);
}

TEST_CASE("TimeSeries rejects empty and non-finite input") {
    CHECK_THROWS_AS(TimeSeries("e", {}), std::invalid_argument);
    CHECK_THROWS_AS(TimeSeries("n", {1.0, std::nan("")}), std::invalid_argument);
}

TEST_CASE("standardize uses the population convention") {
    const TimeSeries x("x", {1.0, 2.0, 3.0});
    const auto s = standardize(x, {0, 3});
    CHECK(s.mean == doctest::Approx(2.0));
    CHECK(s.std == doctest::Approx(std::sqrt(2.0 / 3.0)));
    // Population std of (1,2,3) is sqrt(2/3); the outputs are (-1,0,1) scaled by 1/that.
    CHECK(s.series[0] == doctest::Approx(-1.0 / std::sqrt(2.0 / 3.0)));
    CHECK(s.series[1] == doctest::Approx(0.0));
    const auto back = unstandardize(s.series, s.mean, s.std);
    for (std::size_t i = 0; i < 3; ++i) CHECK(back[i] == doctest::Approx(x[i]).epsilon(1e-14));
}

TEST_CASE("standardize on white noise") {
    const TimeSeries x("w", oracle::gaussian(10000, 11, 3.0, 2.0));
    const auto s = standardize(x, {0, x.size()});
    const std::vector<double> v(s.series.values().begin(), s.series.values().end());
    CHECK(std::abs(oracle::mean(v)) <= 0.05);
    CHECK(std::sqrt(oracle::var(v)) >= 0.95);
    CHECK(std::sqrt(oracle::var(v)) <= 1.05);
}

TEST_CASE("standardize stats come from the window only") {
    const TimeSeries x("x", {1.0, 3.0, 100.0, -50.0});
    const auto s = standardize(x, {0, 2});
    CHECK(s.mean == doctest::Approx(2.0));
    CHECK(s.std == doctest::Approx(1.0));
}

TEST_CASE("standardize of a constant series is a domain error") {
    CHECK_THROWS_AS((void)standardize(TimeSeries("c", {4.0, 4.0, 4.0}), {0, 3}), std::domain_error);
}

TEST_CASE("make_windows index arithmetic") {
    std::vector<double> v(400);
    std::iota(v.begin(), v.end(), 0.0);
    const TimeSeries x("x", v);
    const auto w = make_windows(x, 128, 1, 252);
    CHECK(w.test.size() == 252);
    std::size_t max_train = 0;
    for (std::size_t i = 0; i < w.train.size(); ++i) max_train = std::max(max_train, w.train.last_target_index(i));
    CHECK(max_train == 400 - 252 - 1);
    for (std::size_t i = 0; i < w.test.size(); ++i) CHECK(w.test.first_target_index(i) >= 400 - 252);
}

TEST_CASE("make_windows horizon-21 targets are forward sums") {
    const auto g = oracle::gaussian(600, 3);
    const TimeSeries x("x", g);
    const auto w = make_windows(x, 128, 21, 252);
    REQUIRE(w.test.size() > 0);
    REQUIRE(w.train.size() > 0);
    for (const auto* set : {&w.train, &w.test}) {
        for (std::size_t i = 0; i < set->size(); ++i) {
            double s = 0.0;
            for (std::size_t t = set->first_target_index(i); t <= set->last_target_index(i); ++t) s += g[t];
            CHECK(set->targets[i] == doctest::Approx(s).epsilon(1e-13));
        }
    }
    for (std::size_t i = 0; i < w.train.size(); ++i) CHECK(w.train.last_target_index(i) < 600 - 252);
}

TEST_CASE("make_windows rejects a short series") {
    CHECK_THROWS_AS((void)make_windows(TimeSeries("x", std::vector<double>(100, 1.0)), 128, 1, 10),
                    std::invalid_argument);
}
