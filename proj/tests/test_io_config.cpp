#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "coldex/config.hpp"
#include "coldex/errors.hpp"
#include "coldex/table.hpp"

using namespace coldex;

namespace {

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        path = std::filesystem::temp_directory_path() /
               ("coldex_test_" + std::to_string(std::rand()));
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    out << text;
}

} // namespace

TEST_CASE("curve table round trip") {
    TempDir dir;
    mc::Curve curve = {{0.0, 0.0061234567890123, 0.0001234, 5000, 0.29},
                       {8.0, 0.02837, 0.00063, 5000, 0.297}};
    io::write_curve(dir.file("c.csv"), curve);
    auto back = io::read_curve(dir.file("c.csv"));
    REQUIRE(back.size() == curve.size());
    for (std::size_t i = 0; i < curve.size(); ++i) {
        CHECK(back[i].emm_mk == curve[i].emm_mk);
        CHECK(back[i].mean_pb == curve[i].mean_pb);
        CHECK(back[i].stderr_pb == curve[i].stderr_pb);
        CHECK(back[i].n_trials == curve[i].n_trials);
    }
    CHECK_THROWS_AS(io::read_curve(dir.file("missing.csv")), DataError);
}

TEST_CASE("measurement table validation") {
    TempDir dir;
    write_file(dir.file("m.csv"), "crystal,f,m,n_trials,n_bright\nSr-Sr,2,1,100,5\n");
    auto rec = io::read_measurements(dir.file("m.csv"));
    REQUIRE(rec.size() == 1);
    CHECK(rec[0].crystal == "Sr-Sr");
    CHECK(rec[0].n_bright == 5);

    write_file(dir.file("bad_f.csv"), "crystal,f,m,n_trials,n_bright\nSr-Sr,3,1,100,5\n");
    CHECK_THROWS_AS(io::read_measurements(dir.file("bad_f.csv")), DataError);
    write_file(dir.file("bad_k.csv"), "crystal,f,m,n_trials,n_bright\nSr-Sr,2,1,100,200\n");
    CHECK_THROWS_AS(io::read_measurements(dir.file("bad_k.csv")), DataError);
    write_file(dir.file("bad_h.csv"), "crystal,f,m,trials,bright\nSr-Sr,2,1,100,5\n");
    CHECK_THROWS_AS(io::read_measurements(dir.file("bad_h.csv")), DataError);
}

TEST_CASE("contact statistics round trip with metadata") {
    TempDir dir;
    md::ContactStatistics stats;
    stats.pmf = {0.6, 0.3, 0.1};
    stats.error = {0.01, 0.008, 0.004};
    stats.n_collisions = 2500;
    stats.n_sampled = 2900;
    stats.mean_n = 1.5;
    stats.contact_radius = 3.2e-9;
    io::write_pmf(dir.file("p.csv"), stats);
    auto back = io::read_pmf(dir.file("p.csv"));
    CHECK(back.pmf == stats.pmf);
    CHECK(back.n_collisions == 2500);
    CHECK(back.contact_radius == stats.contact_radius);
    CHECK(back.mean_n == doctest::Approx(1.5).epsilon(1e-12));

    write_file(dir.file("gap.csv"), "n,probability,error\n1,0.5,0.01\n3,0.5,0.01\n");
    CHECK_THROWS_AS(io::read_pmf(dir.file("gap.csv")), DataError);
    write_file(dir.file("badsum.csv"), "n,probability,error\n1,0.5,0.01\n2,0.3,0.01\n");
    CHECK_THROWS_AS(io::read_pmf(dir.file("badsum.csv")), NumericalError);
}

TEST_CASE("config parsing is strict") {
    TempDir dir;
    SUBCASE("defaults load") {
        write_file(dir.file("c.json"), "{}");
        RunConfig cfg = load_config(dir.file("c.json"));
        CHECK(cfg.seed == 1);
        CHECK(cfg.passage.kappa_l == doctest::Approx(0.29));
    }
    SUBCASE("comments allowed") {
        write_file(dir.file("c.json"), "{\n // comment\n \"seed\": 9\n}");
        CHECK(load_config(dir.file("c.json")).seed == 9);
    }
    SUBCASE("unknown top-level key rejected") {
        write_file(dir.file("c.json"), "{\"sede\": 1}");
        CHECK_THROWS_AS(load_config(dir.file("c.json")), ConfigError);
    }
    SUBCASE("unknown nested key rejected") {
        write_file(dir.file("c.json"), "{\"trap\": {\"rf_freq_mhz\": 26.5, \"qq\": 1}}");
        CHECK_THROWS_AS(load_config(dir.file("c.json")), ConfigError);
    }
    SUBCASE("bad spin value rejected") {
        write_file(dir.file("c.json"), "{\"spin\": {\"atom_nuclear_spin\": 0.7}}");
        CHECK_THROWS_AS(load_config(dir.file("c.json")), ConfigError);
    }
    SUBCASE("emm_axis normalized on load") {
        write_file(dir.file("c.json"), "{\"trap\": {\"emm_axis\": [3.0, 4.0, 0.0]}}");
        RunConfig cfg = load_config(dir.file("c.json"));
        CHECK(cfg.trap.emm_axis[0] == doctest::Approx(0.6).epsilon(1e-12));
        CHECK(cfg.trap.emm_axis[1] == doctest::Approx(0.8).epsilon(1e-12));
    }
    SUBCASE("relative data paths resolve against the config directory") {
        write_file(dir.file("c.json"),
                   "{\"inference\": {\"measurements_csv\": \"m.csv\"}}");
        RunConfig cfg = load_config(dir.file("c.json"));
        CHECK(cfg.inference.measurements_csv == (dir.path / "m.csv").lexically_normal().string());
    }
    SUBCASE("missing file") {
        CHECK_THROWS_AS(load_config(dir.file("nope.json")), ConfigError);
    }
    SUBCASE("malformed JSON") {
        write_file(dir.file("c.json"), "{\"seed\": }");
        CHECK_THROWS_AS(load_config(dir.file("c.json")), ConfigError);
    }
}
