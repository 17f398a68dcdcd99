// esgen: scenario-driven front end for the extremum-seeking library.
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "esgen/commands.hpp"
#include "esgen/error.hpp"

namespace fs = std::filesystem;

namespace {

// Bare names such as `de_classic` resolve to the bundled scenario directory.
fs::path resolve_scenario(const std::string& arg) {
    fs::path p(arg);
    if (fs::exists(p)) return p;
#ifdef ESGEN_SCENARIO_DIR
    fs::path bundled = fs::path(ESGEN_SCENARIO_DIR) / arg;
    if (!bundled.has_extension()) bundled += ".ini";
    if (fs::exists(bundled)) return bundled;
#endif
    return p;
}

int emit(const esgen::CommandResult& r) {
    (r.status == esgen::exit_status::pass || r.status == esgen::exit_status::check_failed ? std::cout : std::cerr)
        << r.report;
    return r.status;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Extremum seeking with generating vector fields: verify, simulate, sweep, certify, compare"};
    app.require_subcommand(1);
    // `--h` is the step size, so help is `--help` only.
    app.set_help_flag("--help", "print this help message and exit");

    std::string scenario, out, parameter;
    std::optional<double> eps, t_end, h;
    std::size_t workers = 1;
    double tolerance = 0.0;
    std::vector<double> values;
    bool no_simulate = false;
    std::vector<std::string> files;

    auto add_run_flags = [&](CLI::App* sub) {
        sub->add_option("--scenario", scenario, "scenario file or bundled scenario name")->required();
        sub->add_option("--eps", eps, "override the dither period");
        sub->add_option("--t-end", t_end, "override the final time");
        sub->add_option("--h", h, "override the RK4 step");
    };

    auto* verify = app.add_subcommand("verify", "structural checks of a scenario");
    verify->add_option("--scenario", scenario, "scenario file or bundled scenario name")->required();

    auto* simulate = app.add_subcommand("simulate", "integrate a scenario and write the trajectory CSV");
    add_run_flags(simulate);
    simulate->add_option("--out", out, "trajectory CSV path");

    auto* sweep = app.add_subcommand("sweep", "run a scenario over a list of parameter values");
    add_run_flags(sweep);
    sweep->add_option("--parameter", parameter, "eps, x0, alpha, mu or lambda")->required();
    sweep->add_option("--values", values, "parameter values")->expected(0, -1);
    sweep->add_option("--out", out, "output directory")->required();
    sweep->add_option("--workers", workers, "concurrent runs")->check(CLI::PositiveNumber);

    auto* certify = app.add_subcommand("certify", "compute the eps certificate and test it by simulation");
    add_run_flags(certify);
    certify->add_option("--out", out, "key=value certificate file");
    certify->add_flag("--no-simulate", no_simulate, "skip the follow-up simulation at eps_bar");

    auto* compare = app.add_subcommand("compare", "compare two trajectory CSV files");
    compare->add_option("files", files, "two CSV files")->expected(2)->required();
    compare->add_option("--tolerance", tolerance, "maximum absolute difference");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : esgen::exit_status::config_error;
    }

    if (compare->parsed()) return emit(esgen::cmd_compare(files[0], files[1], tolerance));

    esgen::Scenario sc;
    const auto loaded = esgen::guarded([&]() -> esgen::CommandResult {
        sc = esgen::apply_overrides(esgen::load_scenario(resolve_scenario(scenario)), {eps, t_end, h});
        return {};
    });
    if (loaded.status != 0) return emit(loaded);

    const std::optional<fs::path> out_path = out.empty() ? std::nullopt : std::optional<fs::path>(out);
    if (verify->parsed()) return emit(esgen::cmd_verify(sc));
    if (simulate->parsed()) return emit(esgen::cmd_simulate(sc, out_path));
    if (sweep->parsed()) return emit(esgen::cmd_sweep(sc, parameter, values, out, workers));
    if (certify->parsed()) return emit(esgen::cmd_certify(sc, out_path, !no_simulate));
    return esgen::exit_status::config_error;
}
