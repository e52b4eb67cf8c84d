// End-to-end checks of the cavsim binary: exit codes, file outputs, seed
// determinism. These shell out to the real executable (path in CAVSIM_CLI)
// so they cover argument parsing and the error-to-exit-code mapping that the
// in-process tests cannot reach.
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "cavsim/config.hpp"
#include "doctest.h"

namespace fs = std::filesystem;

namespace {

std::string cli_path() {
    const char* p = std::getenv("CAVSIM_CLI");
    REQUIRE_MESSAGE(p != nullptr, "CAVSIM_CLI not set (run via ctest)");
    return p;
}

int run_cli(const std::string& args) {
    std::string cmd = cli_path() + " " + args + " >/dev/null 2>&1";
    int rc = std::system(cmd.c_str());
    REQUIRE(rc != -1);
    return WEXITSTATUS(rc);
}

fs::path fresh_dir(const std::string& tag) {
    fs::path d = fs::temp_directory_path() / ("cavsim_cli_" + tag);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    REQUIRE_MESSAGE(f.good(), "missing " << p.string());
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

void write_file(const fs::path& p, const std::string& body) {
    std::ofstream f(p);
    f << body;
}

// Small gated run: a few hundred cycles keeps simulate+analyze under a second.
std::string tiny_gated_ini() {
    return "[system]\n"
           "g0_mhz = 12\nkappa_mhz = 12\ngamma_mhz = 3\n"
           "[pulse]\n"
           "p_target = 0.66\nduration_ns = 350\nn_samples = 351\n"
           "[source]\n"
           "kind = gated\ndwell_us = 50\ngap_us = 200\n"
           "[chain]\n"
           "eta_out = 0.50\neta_collection = 0.65\neta_detector = 0.70\n"
           "dark_rate_hz = 500\n"
           "[run]\n"
           "seed = 11\nn_shots = 300\n";
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("help exits 0, bad invocations exit 2") {
    CHECK(run_cli("--help") == 0);
    CHECK(run_cli("simulate --help") == 0);
    // no subcommand / missing required --config / unknown flag
    CHECK(run_cli("") == 2);
    CHECK(run_cli("simulate") == 2);
    CHECK(run_cli("simulate --config /nonexistent/nope.ini --frobnicate") == 2);
    // config file absent
    CHECK(run_cli("simulate --config /nonexistent/nope.ini") == 2);
}

TEST_CASE("config rejection maps to exit 2") {
    fs::path d = fresh_dir("badcfg");

    fs::path dup = d / "dup.ini";
    write_file(dup, "[system]\ng0_mhz = 12\ng0_mhz = 13\nkappa_mhz = 12\ngamma_mhz = 3\n");
    CHECK(run_cli("design-pulse --config " + dup.string()) == 2);

    fs::path unk = d / "unk.ini";
    write_file(unk, tiny_gated_ini() + "[system]\nnot_a_key = 1\n");
    CHECK(run_cli("simulate --config " + unk.string()) == 2);

    fs::path fmt = d / "fmt.ini";
    write_file(fmt, tiny_gated_ini());
    CHECK(run_cli("simulate --config " + fmt.string() + " --format csv") == 2);
    CHECK(run_cli("simulate --config " + fmt.string() + " --threads 0") == 2);
}

TEST_CASE("infeasible pulse target exits 3") {
    fs::path d = fresh_dir("infeasible");
    fs::path cfg = d / "hot.ini";
    std::string ini = tiny_gated_ini();
    ini.replace(ini.find("p_target = 0.66"), 15, "p_target = 0.90");
    write_file(cfg, ini);
    CHECK(run_cli("design-pulse --config " + cfg.string() + " --out " + d.string()) == 3);
}

TEST_CASE("design-pulse writes the pulse table") {
    fs::path d = fresh_dir("design");
    fs::path cfg = d / "s.ini";
    write_file(cfg, tiny_gated_ini());
    REQUIRE(run_cli("design-pulse --config " + cfg.string() + " --out " + d.string()) == 0);

    std::string t = slurp(d / "pulse_design.txt");
    CHECK(t.find("cavsim table schema=1") != std::string::npos);
    CHECK(t.find("kind=pulse_design") != std::string::npos);
    CHECK(t.find("omega_rad_s") != std::string::npos);
}

TEST_CASE("simulate is seed-deterministic and --seed overrides") {
    fs::path cfg_dir = fresh_dir("det_cfg");
    fs::path cfg = cfg_dir / "s.ini";
    write_file(cfg, tiny_gated_ini());

    fs::path a = fresh_dir("det_a"), b = fresh_dir("det_b"), c = fresh_dir("det_c");
    REQUIRE(run_cli("simulate --config " + cfg.string() + " --out " + a.string()) == 0);
    REQUIRE(run_cli("simulate --config " + cfg.string() + " --out " + b.string()) == 0);
    REQUIRE(run_cli("simulate --config " + cfg.string() + " --seed 99 --out " + c.string()) == 0);

    CHECK(slurp(a / "clicks.txt") == slurp(b / "clicks.txt"));
    CHECK(slurp(a / "clicks.txt") != slurp(c / "clicks.txt"));
}

TEST_CASE("binary format round-trips through analyze") {
    fs::path d = fresh_dir("binfmt");
    fs::path cfg = d / "s.ini";
    write_file(cfg, tiny_gated_ini() + "format = binary\n");

    REQUIRE(run_cli("simulate --config " + cfg.string() + " --out " + d.string()) == 0);
    CHECK(fs::exists(d / "clicks.bin"));
    CHECK(!fs::exists(d / "clicks.txt"));
    CHECK(run_cli("analyze --config " + cfg.string() + " --out " + d.string()) == 0);
    CHECK(fs::exists(d / "summary.txt"));
}

TEST_CASE("simulate, analyze, report chain on a gated scenario") {
    fs::path d = fresh_dir("chain");
    fs::path cfg = d / "s.ini";
    write_file(cfg, tiny_gated_ini());

    // report before any run has nothing to show
    CHECK(run_cli("report --config " + cfg.string() + " --out " + d.string()) == 2);

    REQUIRE(run_cli("simulate --config " + cfg.string() + " --out " + d.string()) == 0);
    CHECK(fs::exists(d / "clicks.txt"));
    CHECK(fs::exists(d / "run_summary.txt"));

    REQUIRE(run_cli("analyze --config " + cfg.string() + " --out " + d.string()) == 0);
    std::string summary = slurp(d / "summary.txt");
    CHECK(summary.find("p_max_corrected") != std::string::npos);

    CHECK(run_cli("report --config " + cfg.string() + " --out " + d.string()) == 0);
}

TEST_CASE("analyze refuses clicks from a different configuration") {
    fs::path d = fresh_dir("hashchk");
    fs::path cfg = d / "s.ini";
    write_file(cfg, tiny_gated_ini());
    REQUIRE(run_cli("simulate --config " + cfg.string() + " --out " + d.string()) == 0);

    // change a physics knob; the stored config hash no longer matches
    fs::path cfg2 = d / "s2.ini";
    std::string ini = tiny_gated_ini();
    ini.replace(ini.find("kappa_mhz = 12"), 14, "kappa_mhz = 13");
    write_file(cfg2, ini);
    CHECK(run_cli("analyze --config " + cfg2.string() + " --out " + d.string()) == 2);
}

TEST_CASE("repo configs all load") {
    const char* root = std::getenv("CAVSIM_ROOT");
    REQUIRE(root != nullptr);
    std::size_t n = 0;
    for (const auto& e : fs::directory_iterator(fs::path(root) / "configs")) {
        if (e.path().extension() != ".ini") continue;
        ++n;
        CAPTURE(e.path().string());
        CHECK_NOTHROW(cavsim::load_scenario(e.path().string(), {}));
    }
    CHECK(n >= 1);
}

}  // TEST_SUITE
