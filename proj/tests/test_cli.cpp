#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "shelab/cli.hpp"

using namespace shelab;
namespace fs = std::filesystem;

TEST_CASE("config parses sections, comments and whitespace") {
    const std::string text =
        "# comment\n"
        "[solver]\n"
        "n_x = 128\n"
        "horizon = 0.25\n"
        "; another comment\n"
        "\n"
        "[experiment]\n"
        "name = simulate\n";
    const auto cfg = KeyValueConfig::parse_string(text);
    CHECK(cfg.get_size("solver.n_x", 0) == 128);
    CHECK(cfg.get_double("solver.horizon", 0.0) == 0.25);
    CHECK(cfg.require_string("experiment.name") == "simulate");
    CHECK(cfg.get_string("missing.key", "dflt") == "dflt");
    CHECK_THROWS(cfg.require_string("missing.key"));
}

TEST_CASE("canonical serialisation round-trips and sorts keys") {
    auto cfg = KeyValueConfig::parse_string("[b]\nz = 1\n[a]\ny = 2\n");
    const std::string canon = cfg.canonical();
    CHECK(canon.find("a.y") < canon.find("b.z"));
    const auto re = KeyValueConfig::parse_string(canon);
    CHECK(re.canonical() == canon);
    CHECK(re.hash() == cfg.hash());
}

TEST_CASE("hash is order-independent and value-sensitive") {
    const auto a = KeyValueConfig::parse_string("[s]\nx = 1\ny = 2\n");
    const auto b = KeyValueConfig::parse_string("[s]\ny = 2\nx = 1\n");
    CHECK(a.hash() == b.hash());
    auto c = a;
    c.set("s.x", "3");
    CHECK(c.hash() != a.hash());
}

TEST_CASE("double lists and booleans parse") {
    const auto cfg = KeyValueConfig::parse_string(
        "[a]\nlist = 0.5, 0.25,0.125\nflag = true\noff = 0\n");
    const auto xs = cfg.get_double_list("a.list");
    REQUIRE(xs.size() == 3);
    CHECK(xs[0] == 0.5);
    CHECK(xs[2] == 0.125);
    CHECK(cfg.get_bool("a.flag", false));
    CHECK_FALSE(cfg.get_bool("a.off", true));
    CHECK(cfg.get_bool("a.missing", true));
}

TEST_CASE("format_double is the shortest round-trip representation") {
    for (double v : {0.1, 1.0 / 3.0, 2.0, 1e-30, -0.25, 6.02214076e23}) {
        const std::string s = format_double(v);
        CHECK(std::stod(s) == v);
    }
    CHECK(format_double(0.25) == "0.25");
    CHECK(format_double(2.0) == "2");
}

TEST_CASE("unknown experiment name exits with the validation code") {
    const auto cfg =
        KeyValueConfig::parse_string("[experiment]\nname = bogus\n");
    std::ostringstream log;
    const fs::path dir = fs::temp_directory_path() / "shelab_test_bogus";
    fs::create_directories(dir);
    CHECK(run_experiment(cfg, dir.string(), false, log) == kExitValidation);
    fs::remove_all(dir);
}

TEST_CASE("missing experiment name is a validation error") {
    const auto cfg = KeyValueConfig::parse_string("");
    std::ostringstream log;
    const fs::path dir = fs::temp_directory_path() / "shelab_test_noname";
    fs::create_directories(dir);
    CHECK(run_experiment(cfg, dir.string(), false, log) == kExitValidation);
    fs::remove_all(dir);
}

TEST_CASE("unwritable output directory exits with the io code") {
    const auto cfg = KeyValueConfig::parse_string(
        "[experiment]\nname = validate-kernels\n"
        "[kernels]\nt_grid = 0.01\nquad_points = 64\n");
    std::ostringstream log;
    CHECK(run_experiment(cfg, "/proc/definitely/not/writable", false, log) ==
          kExitIo);
}

TEST_CASE("validate-kernels runs end to end and writes a manifest") {
    const auto cfg = KeyValueConfig::parse_string(
        "[experiment]\nname = validate-kernels\n"
        "[kernels]\nt_grid = 0.01, 0.1\nquad_points = 128\n");
    std::ostringstream log;
    const fs::path dir = fs::temp_directory_path() / "shelab_test_kernels";
    fs::remove_all(dir);
    fs::create_directories(dir);
    CHECK(run_experiment(cfg, dir.string(), true, log) == kExitOk);
    CHECK(fs::exists(dir / "manifest.json"));
    CHECK(fs::exists(dir / "rates.csv"));

    std::ifstream in(dir / "manifest.json");
    std::string manifest((std::istreambuf_iterator<char>(in)),
                         std::istreambuf_iterator<char>());
    CHECK(manifest.find("config_canonical") != std::string::npos);
    CHECK(manifest.find("config_hash") != std::string::npos);
    CHECK(manifest.find("thresholds_ok") != std::string::npos);
    fs::remove_all(dir);
}
