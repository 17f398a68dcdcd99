#include <filesystem>
#include <fstream>
#include <string>

#include "doctest.h"
#include "esgen/commands.hpp"
#include "esgen/error.hpp"
#include "esgen/scenario.hpp"

using namespace esgen;
using doctest::Approx;

namespace {

const std::string kClassic = R"(
[scenario]
name = unit_classic

[cost]
builtin = J1

[generator]
builtin = classic

[dither]
k = 1
eps = 0.1

[run]
x0 = 0
t_end = 1
stride = 40
)";

std::filesystem::path scratch(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / "esgen_unit";
    std::filesystem::create_directories(dir);
    return dir / name;
}

bool contains(const std::string& s, const std::string& part) { return s.find(part) != std::string::npos; }

}  // namespace

TEST_SUITE("scenario") {
    TEST_CASE("ini parsing") {
        const auto ini = IniFile::parse("; comment\n[a]\nx = 1, 2 3  # trailing\ny = inf\nflag = yes\n");
        CHECK(ini.numbers("a", "x")->size() == 3);
        CHECK(std::isinf(*ini.number("a", "y")));
        CHECK(*ini.boolean("a", "flag"));
        CHECK_FALSE(ini.string("a", "missing"));
        CHECK_THROWS_AS(IniFile::parse("x = 1\n"), ConfigError);
        CHECK_THROWS_AS(IniFile::parse("[a]\nx = 1\nx = 2\n"), ConfigError);
        CHECK_THROWS_AS(IniFile::parse("[a\n"), ConfigError);
        try {
            (void)IniFile::parse("[a]\nnoequals\n", "f.ini");
            FAIL("expected ConfigError");
        } catch (const ConfigError& e) {
            CHECK(contains(e.what(), "f.ini:2:"));
        }
    }

    TEST_CASE("scenario contents") {
        const auto sc = parse_scenario(kClassic);
        CHECK(sc.name == "unit_classic");
        CHECK(sc.mode == Mode::es);
        CHECK(sc.k == std::vector<int>{1});
        CHECK(sc.x0 == State{0.0});
        CHECK(scenario_step(sc) == Approx(0.1 / 400));
        const auto sys = build_es_system(sc);
        CHECK(sys.eps() == 0.1);
    }

    TEST_CASE("unknown keys and sections are rejected") {
        CHECK_THROWS_AS((void)parse_scenario(kClassic + "\n[extra]\na = 1\n"), ConfigError);
        CHECK_THROWS_AS((void)parse_scenario(kClassic + "\n[checks]\nbogus = 1\n"), ConfigError);
        std::string bad = kClassic;
        bad.replace(bad.find("builtin = classic"), 17, "builtin = nonsense");
        CHECK_THROWS_AS((void)parse_scenario(bad), ConfigError);
    }

    TEST_CASE("duplicate dither frequency in two dimensions") {
        const std::string text = R"(
[cost]
builtin = quadratic_nd
params = 2
[generator]
builtin = classic
[dither]
k = 1, 1
[run]
x0 = 1, 1
)";
        try {
            (void)parse_scenario(text, "dup.ini");
            FAIL("expected ConfigError");
        } catch (const ConfigError& e) {
            CHECK(contains(e.what(), "dup.ini:8:"));
            CHECK(contains(e.what(), "k=1"));
        }
    }

    TEST_CASE("verify passes and catches an injected defect") {
        const auto ok = cmd_verify(parse_scenario(kClassic));
        CHECK(ok.status == exit_status::pass);
        CHECK(contains(ok.report, "PASS"));
        CHECK_THROWS_AS((void)parse_scenario(kClassic + "f2_offset = 0.1\n"), ConfigError);
        std::string text = kClassic;
        text.insert(text.find("builtin = classic") + 17, "\nf2_offset = 0.1");
        const auto res = cmd_verify(parse_scenario(text));
        CHECK(res.status == exit_status::check_failed);
        CHECK(contains(res.report, "FAIL"));
        CHECK(contains(res.report, "pfaffian"));
    }

    TEST_CASE("simulate writes a csv and compare reads it back") {
        const auto sc = parse_scenario(kClassic);
        const auto a = scratch("a.csv"), b = scratch("b.csv");
        REQUIRE(cmd_simulate(sc, a).status == exit_status::pass);
        REQUIRE(cmd_simulate(sc, b).status == exit_status::pass);
        const auto table = read_csv(a);
        CHECK(table.header.front() == "t");
        CHECK(table.header.size() == 4);  // t, x1, J, u1
        CHECK(table.rows.back()[0] == Approx(1));
        CHECK(cmd_compare(a, b, 0).status == exit_status::pass);

        const auto c = scratch("c.csv");
        REQUIRE(cmd_simulate(apply_overrides(sc, {0.05, std::nullopt, std::nullopt}), c).status == 0);
        CHECK(cmd_compare(a, c, 1e-12).status == exit_status::check_failed);
        CHECK(cmd_compare(a, scratch("missing.csv"), 0).status == exit_status::config_error);
    }

    TEST_CASE("sweep") {
        const auto sc = parse_scenario(kClassic);
        const auto dir = scratch("sweep");
        std::filesystem::remove_all(dir);
        const auto res = cmd_sweep(sc, "eps", {0.1, 0.05}, dir, 2);
        CHECK(res.status == exit_status::pass);
        const auto summary = read_csv(dir / "summary.csv");
        CHECK(summary.rows.size() == 2);
        CHECK(std::filesystem::exists(dir / "unit_classic_eps_0.csv"));

        const auto empty_dir = scratch("sweep_empty");
        std::filesystem::remove_all(empty_dir);
        CHECK(cmd_sweep(sc, "eps", {}, empty_dir, 1).status == exit_status::pass);
        CHECK(read_csv(empty_dir / "summary.csv").rows.empty());
        CHECK(cmd_sweep(sc, "mu", {1.0}, dir, 1).status == exit_status::config_error);
    }

    TEST_CASE("certify preconditions and unbounded eps0") {
        std::string text = R"(
[cost]
builtin = J1
[generator]
builtin = sd17
[dither]
k = 1
[run]
x0 = 0.5
[certificate]
Delta = 2
delta = 2.5
delta0 = 3
)";
        CHECK(cmd_certify(parse_scenario(text), std::nullopt, false).status == exit_status::config_error);
        const std::string bounded = "Delta = 2\ndelta = 2.5\ndelta0 = 3";
        text.replace(text.find(bounded), bounded.size(), "delta = 1\ndelta0 = 1.5");
        const auto res = certify(parse_scenario(text), false);
        CHECK(std::isinf(res.certificate.eps0));
        CHECK(res.certificate.eps_bar > 0);
        CHECK(std::isfinite(res.certificate.eps_bar));
    }
}
