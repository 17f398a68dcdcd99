#pragma once

#include <filesystem>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "esgen/costs.hpp"
#include "esgen/dynamics.hpp"
#include "esgen/generators.hpp"

namespace esgen {

/// Sectioned key = value text. `#` and `;` start comments; section names are
/// `[name]`. Every value remembers where it came from so typed accessors can
/// report errors as file:line:column.
class IniFile {
public:
    struct Value {
        std::string text;
        int line = 0, column = 0;
    };
    using Section = std::map<std::string, Value>;

    static IniFile parse(std::string_view text, std::string source = "<string>");

    [[nodiscard]] bool has(const std::string& section) const { return sections_.count(section) != 0; }
    [[nodiscard]] const Section* section(const std::string& name) const;
    [[nodiscard]] std::vector<std::string> section_names() const;
    [[nodiscard]] const std::string& source() const { return source_; }

    [[nodiscard]] std::optional<std::string> string(const std::string& sec, const std::string& key) const;
    [[nodiscard]] std::optional<double> number(const std::string& sec, const std::string& key) const;
    [[nodiscard]] std::optional<std::vector<double>> numbers(const std::string& sec, const std::string& key) const;
    [[nodiscard]] std::optional<long> integer(const std::string& sec, const std::string& key) const;
    [[nodiscard]] std::optional<bool> boolean(const std::string& sec, const std::string& key) const;

    /// ConfigError at the first key of `sec` not in `allowed`.
    void check_keys(const std::string& sec, const std::vector<std::string>& allowed) const;
    [[noreturn]] void fail(const Value& v, const std::string& msg) const;

private:
    const Value* find(const std::string& sec, const std::string& key) const;

    std::map<std::string, Section> sections_;
    std::string source_;
};

enum class Mode { es, lie, vib };

struct CostSpec {
    std::string builtin;
    std::vector<double> params;
    std::string expr;
    std::size_t dim = 1;
    std::optional<State> minimizer;
    double min_value = 0;
};

struct GeneratorSpec {
    std::string builtin;
    std::vector<double> params;
    std::string f1, f0, f1_prime;
    double z_ref = 1;
    std::optional<Interval> domain;
    double gauge_shift = 0, f2_offset = 0, f2_scale = 1;
};

struct CheckSpec {
    std::size_t pfaffian_points = 401;
    std::optional<double> pfaffian_tol;
    double a2_radius = 1;
    std::size_t a2_points = 41;
    std::optional<double> final_tol;    // simulate: |x(t_end) - x*| bound
    std::optional<double> descent_lambda;
};

struct CertificateSpec {
    double Delta = std::numeric_limits<double>::infinity();
    double delta = 1, delta0 = 1.5;
    double lambda_fraction = 0.5;
    double rho = 0, rho0 = 0, rho_min = 0;
    std::size_t grid_points = 41;
    std::size_t periods = 200;
};

struct VibSpec {
    std::vector<std::string> drift, input;
    double mu = 1, alpha = 1;
};

struct Scenario {
    std::string name;
    Mode mode = Mode::es;
    CostSpec cost;
    std::vector<GeneratorSpec> generators;  // one per axis
    std::vector<int> k;
    double eps = 0.1;
    State x0;
    double t_end = 10;
    std::optional<double> h;
    std::size_t stride = 1;
    std::optional<double> box_half_width;
    VibSpec vib;
    CheckSpec checks;
    CertificateSpec certificate;

    [[nodiscard]] std::size_t dim() const { return cost.dim; }
};

Scenario parse_scenario(std::string_view text, const std::string& source = "<string>");
Scenario load_scenario(const std::filesystem::path& path);

CostProfile build_cost(const Scenario& sc);
GeneratorPair build_generator(const GeneratorSpec& spec);
EsSystem build_es_system(const Scenario& sc);
VibSystem build_vib_system(const Scenario& sc);

/// Step used for runs of this scenario: run.h or the system default.
double scenario_step(const Scenario& sc);

}  // namespace esgen
