#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "esgen/certificates.hpp"
#include "esgen/dynamics.hpp"
#include "esgen/scenario.hpp"

namespace esgen {

struct CommandResult {
    int status = 0;
    std::string report;
};

struct RunOverrides {
    std::optional<double> eps, t_end, h;
};

Scenario apply_overrides(Scenario sc, const RunOverrides& ov);

/// Integrate the scenario in its own mode (es, lie or vib).
Trajectory run_scenario(const Scenario& sc);
/// The averaged counterpart of an es or vib scenario on the same time grid.
Trajectory run_averaged(const Scenario& sc);

/// `t,x1..xn,J,u1..um` with 17 significant digits.
std::string trajectory_csv(const Trajectory& tr);
void write_text(const std::filesystem::path& path, const std::string& text);

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};
CsvTable read_csv(const std::filesystem::path& path);

CommandResult cmd_verify(const Scenario& sc);
CommandResult cmd_simulate(const Scenario& sc, const std::optional<std::filesystem::path>& out);
CommandResult cmd_sweep(const Scenario& sc, const std::string& parameter, const std::vector<double>& values,
                        const std::filesystem::path& out_dir, std::size_t workers);

struct CertifyOutcome {
    EpsilonCertificate certificate;
    EpsilonCertificate raw;  // the same thresholds from uninflated constants
    std::optional<CheckReport> descent, envelope;
    std::optional<Trajectory> trajectory;
};
CertifyOutcome certify(const Scenario& sc, bool simulate = true);
CommandResult cmd_certify(const Scenario& sc, const std::optional<std::filesystem::path>& out, bool simulate = true);

CommandResult cmd_compare(const std::filesystem::path& a, const std::filesystem::path& b, double tolerance);

/// Run `fn`, turning library errors into the matching exit status and message.
template <class Fn>
CommandResult guarded(Fn&& fn);

}  // namespace esgen

#include "esgen/error.hpp"

template <class Fn>
esgen::CommandResult esgen::guarded(Fn&& fn) {
    try {
        return fn();
    } catch (const EscapeError& e) {
        return {exit_code(e.kind()), std::string("escape: ") + e.what() + "\n"};
    } catch (const DivergenceError& e) {
        return {exit_code(e.kind()), std::string("divergence: ") + e.what() + "\n"};
    } catch (const Error& e) {
        return {exit_code(e.kind()), std::string("error: ") + e.what() + "\n"};
    }
}
