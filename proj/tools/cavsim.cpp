#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "cavsim/config.hpp"
#include "cavsim/io.hpp"
#include "cavsim/scenario.hpp"

namespace {

using namespace cavsim;

void cmd_design_pulse(const ScenarioConfig& c) {
    DesignedPulse d = design_pulse(c);
    StateHistory h = evolve_amplitudes(c.system, d.omega, c.system.g0);

    std::filesystem::create_directories(c.run.out_dir);
    Table t;
    t.kind = "pulse_design";
    t.columns = {"t_s", "omega_rad_s", "target_intensity", "forward_intensity"};
    const auto inten = h.photon_intensity();
    for (std::size_t i = 0; i < h.size(); ++i) {
        double ts = h.t_at(i);
        double tgt = d.inversion.target.value_at(ts);
        t.rows.push_back({ts, d.omega.value_at(ts), tgt * tgt, inten[i]});
    }
    std::string path = c.run.out_dir + "/pulse_design.txt";
    write_table(path, t, c.hash);

    std::printf("wrote %s\n", path.c_str());
    std::printf("feasibility margin (min |c_e|^2): %.3e\n", d.inversion.feasibility_margin);
    std::printf("forward-simulated emission probability: %.4f\n", h.emitted_total());
    if (c.pulse.band_limit_hz > 0)
        std::printf("band limit: %.3g MHz applied\n", c.pulse.band_limit_hz / 1e6);
}

void cmd_simulate(const ScenarioConfig& c) {
    SimulationOutput r = run_simulation(c);
    for (const auto& f : r.click_files) std::printf("wrote %s\n", f.c_str());
    if (!r.transit_file.empty()) std::printf("wrote %s\n", r.transit_file.c_str());
    std::printf("wrote %s\n", r.summary_file.c_str());
    std::printf("photons emitted: %zu, clicks recorded: %zu, span: %.3f s\n", r.n_photons,
                r.n_clicks, r.t_total);
}

void cmd_analyze(const ScenarioConfig& c) {
    AnalysisOutput r = run_analysis(c);
    for (const auto& f : r.files) std::printf("wrote %s\n", f.c_str());
    std::printf("wrote %s\n", r.summary_file.c_str());
}

void cmd_report(const ScenarioConfig& c) {
    bool found = false;
    for (const char* name : {"run_summary.txt", "summary.txt"}) {
        std::string path = c.run.out_dir + "/" + name;
        std::ifstream f(path);
        if (!f) continue;
        found = true;
        std::printf("== %s ==\n", path.c_str());
        std::string line;
        while (std::getline(f, line)) std::printf("%s\n", line.c_str());
    }
    if (!found)
        throw ConfigError("no summaries in " + c.run.out_dir + " (run simulate/analyze first)");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"cavity-QED single-photon source simulator"};
    app.require_subcommand(1);

    std::string config_path, out_dir, format;
    std::uint64_t seed = 0;
    int threads = 1;
    bool seed_set = false;

    auto add_common = [&](CLI::App* s) {
        s->add_option("--config", config_path, "scenario config file")->required();
        s->add_option("--seed", seed, "override run.seed")->each([&](const std::string&) {
            seed_set = true;
        });
        s->add_option("--out", out_dir, "output directory (default from config)");
        s->add_option("--format", format, "click file format")
            ->check(CLI::IsMember({"text", "binary"}));
        s->add_option("--threads", threads,
                      "worker count; shots are seeded per index so results do not depend on it");
    };
    CLI::App* s_design = app.add_subcommand("design-pulse", "invert the photon target");
    CLI::App* s_sim = app.add_subcommand("simulate", "run the source and synthesize clicks");
    CLI::App* s_ana = app.add_subcommand("analyze", "compute statistics from click streams");
    CLI::App* s_rep = app.add_subcommand("report", "print the summaries of an output directory");
    for (CLI::App* s : {s_design, s_sim, s_ana, s_rep}) add_common(s);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int r = app.exit(e);
        return r == 0 ? 0 : 2;
    }

    try {
        cavsim::ConfigOverrides ov;
        if (seed_set) ov.seed = seed;
        if (!format.empty()) ov.format = cavsim::parse_file_format(format);
        if (!out_dir.empty()) ov.out_dir = out_dir;
        if (threads < 1) throw cavsim::ConfigError("--threads must be at least 1");
        cavsim::ScenarioConfig c = cavsim::load_scenario(config_path, ov);

        if (s_design->parsed()) cmd_design_pulse(c);
        else if (s_sim->parsed()) cmd_simulate(c);
        else if (s_ana->parsed()) cmd_analyze(c);
        else cmd_report(c);
        return 0;
    } catch (const cavsim::InfeasibleTarget& e) {
        std::fprintf(stderr, "infeasible pulse target: %s\n", e.what());
        return 3;
    } catch (const cavsim::InsufficientStatistics& e) {
        std::fprintf(stderr, "insufficient statistics: %s\n", e.what());
        return 4;
    } catch (const cavsim::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
