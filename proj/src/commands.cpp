#include "esgen/commands.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <thread>

#include "esgen/dithers.hpp"
#include "esgen/error.hpp"

namespace esgen {

namespace {

std::string g6(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

std::string g17(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

const char* mode_name(Mode m) {
    switch (m) {
        case Mode::es: return "es";
        case Mode::lie: return "lie";
        case Mode::vib: return "vib";
    }
    return "?";
}

std::optional<State> target_of(const Scenario& sc) { return build_cost(sc).minimizer(); }

struct Checklist {
    std::ostringstream out;
    bool ok = true;
    void add(bool pass, const std::string& name, const std::string& detail) {
        out << (pass ? "PASS  " : "FAIL  ") << name << "  " << detail << '\n';
        ok = ok && pass;
    }
    void skip(const std::string& name, const std::string& why) { out << "SKIP  " << name << "  " << why << '\n'; }
};

}  // namespace

Scenario apply_overrides(Scenario sc, const RunOverrides& ov) {
    if (ov.eps) {
        if (!(*ov.eps > 0)) throw ConfigError("--eps must be positive");
        sc.eps = *ov.eps;
    }
    if (ov.t_end) {
        if (!(*ov.t_end > 0)) throw ConfigError("--t-end must be positive");
        sc.t_end = *ov.t_end;
    }
    if (ov.h) {
        if (!(*ov.h > 0)) throw ConfigError("--h must be positive");
        sc.h = *ov.h;
    }
    return sc;
}

Trajectory run_scenario(const Scenario& sc) {
    switch (sc.mode) {
        case Mode::es: return simulate_es(build_es_system(sc), sc.x0, sc.t_end, scenario_step(sc), sc.stride);
        case Mode::lie: return simulate_lie(build_es_system(sc), sc.x0, sc.t_end, scenario_step(sc), sc.stride);
        case Mode::vib: return simulate_vib(build_vib_system(sc), sc.x0, sc.t_end, scenario_step(sc), sc.stride);
    }
    throw ConfigError("unknown mode");
}

Trajectory run_averaged(const Scenario& sc) {
    if (sc.mode == Mode::vib)
        return simulate_vib(build_vib_system(sc), sc.x0, sc.t_end, scenario_step(sc), sc.stride, true);
    return simulate_lie(build_es_system(sc), sc.x0, sc.t_end, scenario_step(sc), sc.stride);
}

std::string trajectory_csv(const Trajectory& tr) {
    std::string s;
    const std::size_t n = tr.states.empty() ? 0 : tr.states[0].size();
    const std::size_t m = tr.controls.empty() ? 0 : tr.controls[0].size();
    s += "t";
    for (std::size_t i = 1; i <= n; ++i) s += ",x" + std::to_string(i);
    s += ",J";
    for (std::size_t i = 1; i <= m; ++i) s += ",u" + std::to_string(i);
    s += '\n';
    for (std::size_t k = 0; k < tr.size(); ++k) {
        s += g17(tr.times[k]);
        for (double v : tr.states[k]) s += ',' + g17(v);
        s += ',' + g17(k < tr.cost_values.size() ? tr.cost_values[k] : NAN);
        if (k < tr.controls.size())
            for (double v : tr.controls[k]) s += ',' + g17(v);
        s += '\n';
    }
    return s;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write '" + path.string() + "'");
    out << text;
    if (!out) throw InputError("failed writing '" + path.string() + "'");
}

CsvTable read_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open '" + path.string() + "'");
    CsvTable t;
    std::string line;
    std::size_t line_no = 0;
    auto split = [](const std::string& l) {
        std::vector<std::string> out;
        std::stringstream ss(l);
        std::string cell;
        while (std::getline(ss, cell, ',')) out.push_back(cell);
        return out;
    };
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (t.header.empty()) {
            t.header = split(line);
            continue;
        }
        const auto cells = split(line);
        if (cells.size() != t.header.size())
            throw InputError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                             std::to_string(t.header.size()) + " columns, got " + std::to_string(cells.size()));
        std::vector<double> row;
        for (const auto& c : cells) {
            char* end = nullptr;
            const double v = std::strtod(c.c_str(), &end);
            if (c.empty() || *end != '\0')
                throw InputError(path.string() + ":" + std::to_string(line_no) + ": not a number: '" + c + "'");
            row.push_back(v);
        }
        t.rows.push_back(std::move(row));
    }
    if (t.header.empty()) throw InputError("'" + path.string() + "' is empty");
    return t;
}

// ---------------------------------------------------------------------------

CommandResult cmd_verify(const Scenario& sc) {
    return guarded([&]() -> CommandResult {
        Checklist cl;
        cl.out << "verify " << sc.name << " (" << mode_name(sc.mode) << ", n=" << sc.dim() << ")\n";
        const auto cost = build_cost(sc);
        const double r = sc.checks.a2_radius;
        const std::size_t pts = sc.checks.a2_points;

        std::optional<CostConstants> consts;
        if (cost.minimizer()) {
            try {
                cost.validate_minimizer();
                cl.add(true, "minimizer", "J(x*) = J* and grad J(x*) = 0");
            } catch (const ModelError& e) {
                cl.add(false, "minimizer", e.what());
            }
            const auto below = check_a1(cost, r, pts);
            cl.add(below.empty(), "isolated-minimum",
                   below.empty() ? "J > J* on the grid" : std::to_string(below.size()) + " grid points with J <= J*");
            consts = estimate_a2_constants(cost, r, pts);
            const auto rep = verify_a2(cost, *consts, r, pts);
            std::ostringstream d;
            d << "m1=" << g6(consts->m1) << " gamma=[" << g6(consts->gamma1) << ", " << g6(consts->gamma2)
              << "] kappa=[" << g6(consts->kappa1) << ", " << g6(consts->kappa2) << "] mu=" << g6(consts->mu);
            if (!rep.passed()) d << "; " << rep.violations.size() << " violations, first: " << rep.violations[0].inequality;
            cl.add(rep.passed(), "cost-regularity", d.str());
            if (cost.has_analytic_gradient()) {
                double worst = 0;
                for (const auto& x : verification_grid(*cost.minimizer(), r, 11)) {
                    const auto g = cost.gradient(x), f = cost.fd_gradient(x);
                    for (std::size_t i = 0; i < g.size(); ++i)
                        worst = std::max(worst, std::abs(g[i] - f[i]) / std::max(1e-2, std::abs(g[i])));
                }
                cl.add(worst <= 1e-6, "gradient", "max relative FD mismatch " + g6(worst));
            }
        } else {
            cl.skip("cost-regularity", "no minimizer declared");
        }

        std::vector<std::string> seen;
        const std::size_t axes = sc.mode == Mode::vib ? 1 : sc.dim();
        for (std::size_t i = 0; i < axes; ++i) {
            const auto pair = build_generator(sc.generators[i]);
            const std::string tag = "axis " + std::to_string(i + 1) + " " + pair.name();
            PfaffianReport rep;
            if (sc.checks.pfaffian_tol) {
                const auto rg = pair.check_range();
                rep = verify_pfaffian(pair, linspace(rg.lo, rg.hi, sc.checks.pfaffian_points), *sc.checks.pfaffian_tol);
            } else {
                rep = verify_pfaffian(pair, sc.checks.pfaffian_points);
            }
            cl.add(rep.passed(), "pfaffian[" + tag + "]",
                   "max residual " + g6(rep.max_residual) + " at z=" + g6(rep.worst_z) + " (tol " + g6(rep.tol) + ")");
            if (pair.vanishing_at_min() && consts && sc.mode != Mode::vib) {
                const auto a4 = estimate_a4_bounds(pair, cost, consts->m1, r, pts);
                const auto& b = a4.bounds;
                std::string d = "m2=" + g6(b.m2) + " alpha=[" + g6(b.alpha1) + ", " + g6(b.alpha2) + "] M=" + g6(b.M) +
                                " H=" + g6(b.H);
                if (!a4.passed()) d += "; " + a4.failures.front();
                cl.add(a4.passed(), "vanishing-bounds[" + tag + "]", d);
            } else if (sc.mode != Mode::vib) {
                cl.skip("vanishing-bounds[" + tag + "]", "non-vanishing pair: practical stability only");
            }
        }

        std::vector<DitherPair> ds;
        for (std::size_t i = 0; i < axes; ++i) ds.emplace_back(sc.k[i], sc.eps);
        for (std::size_t i = 0; i < ds.size(); ++i) {
            const DitherPair one[] = {ds[i]};
            const auto b = beta(std::span<const DitherPair>(one));
            const double dev = std::max({std::abs(b(1, 0) - 1), std::abs(b(0, 1) + 1), std::abs(b(0, 0)), std::abs(b(1, 1))});
            const auto d = ds[i];
            const double m1 = period_mean([d](double t) { return d(t).first; }, d.eps);
            const double m2 = period_mean([d](double t) { return d(t).second; }, d.eps);
            const double mean_dev = std::max(std::abs(m1), std::abs(m2)) * d.eps / d.amplitude();
            cl.add(dev <= 1e-9 && mean_dev <= 1e-10, "dither[axis " + std::to_string(i + 1) + " k=" + std::to_string(d.k) + "]",
                   "beta deviation " + g6(dev) + ", relative period mean " + g6(mean_dev));
        }
        if (ds.size() > 1) {
            const auto b = beta(std::span<const DitherPair>(ds));
            double cross = 0;
            for (std::size_t i = 0; i < b.channels(); ++i)
                for (std::size_t j = 0; j < b.channels(); ++j)
                    if (i / 2 != j / 2) cross = std::max(cross, std::abs(b(i, j)));
            cl.add(cross <= 1e-9, "dither-cross", "max cross-axis beta " + g6(cross));
        }
        if (sc.mode == Mode::vib) {
            const auto vs = build_vib_system(sc);
            cl.add(true, "vib-gain", "F2 gain " + g6(vs.f2_gain()) + " for alpha=" + g6(vs.alpha()));
        }
        cl.out << (cl.ok ? "result: pass\n" : "result: FAIL\n");
        return {cl.ok ? exit_status::pass : exit_status::check_failed, cl.out.str()};
    });
}

namespace {

struct RunSummary {
    double final_error = NAN, final_J = NAN, u_min = NAN, u_max = NAN;
};

RunSummary summarize(const Trajectory& tr, const std::optional<State>& target) {
    RunSummary s;
    if (tr.size() == 0) return s;
    if (target) s.final_error = distance(tr.states.back(), *target);
    s.final_J = tr.cost_values.back();
    s.u_min = INFINITY;
    s.u_max = 0;
    for (const auto& u : tr.controls) {
        double m = 0;
        for (double v : u) m = std::max(m, std::abs(v));
        s.u_min = std::min(s.u_min, m);
        s.u_max = std::max(s.u_max, m);
    }
    return s;
}

}  // namespace

CommandResult cmd_simulate(const Scenario& sc, const std::optional<std::filesystem::path>& out) {
    return guarded([&]() -> CommandResult {
        const auto tr = run_scenario(sc);
        if (out) write_text(*out, trajectory_csv(tr));
        const auto target = target_of(sc);
        const auto s = summarize(tr, target);
        std::ostringstream os;
        os << "simulate " << sc.name << " (" << mode_name(sc.mode) << ", n=" << sc.dim() << ", eps=" << g6(sc.eps)
           << ", h=" << g6(scenario_step(sc)) << ", t_end=" << g6(sc.t_end) << ", samples=" << tr.size() << ")\n";
        os << "final |x - x*|   " << (target ? g6(s.final_error) : std::string("n/a")) << '\n';
        os << "final J          " << g6(s.final_J) << '\n';
        os << "control |u| min  " << g6(s.u_min) << '\n';
        os << "control |u| max  " << g6(s.u_max) << '\n';
        int status = exit_status::pass;
        if (sc.checks.final_tol && target) {
            const bool ok = s.final_error <= *sc.checks.final_tol;
            os << (ok ? "PASS" : "FAIL") << "  final |x - x*| <= " << g6(*sc.checks.final_tol) << '\n';
            if (!ok) status = exit_status::check_failed;
        }
        if (out) os << "wrote " << out->string() << '\n';
        return {status, os.str()};
    });
}

namespace {

double descent_m_tilde(const Scenario& sc, double m1) {
    const auto pair = build_generator(sc.generators.at(0));
    double m2 = 0;
    if (pair.vanishing_at_min()) {
        const auto cost = build_cost(sc);
        m2 = estimate_a4_bounds(pair, cost, m1, sc.checks.a2_radius, sc.checks.a2_points).bounds.m2;
    }
    return 1 + m2 - 1 / m1;
}

}  // namespace

CommandResult cmd_sweep(const Scenario& base, const std::string& parameter, const std::vector<double>& values,
                        const std::filesystem::path& out_dir, std::size_t workers) {
    return guarded([&]() -> CommandResult {
        static const char* kParams[] = {"eps", "x0", "alpha", "mu", "lambda"};
        if (std::find_if(std::begin(kParams), std::end(kParams), [&](const char* p) { return parameter == p; }) ==
            std::end(kParams))
            throw ConfigError("sweep parameter must be one of eps, x0, alpha, mu, lambda; got '" + parameter + "'");
        if ((parameter == "alpha" || parameter == "mu") && base.mode != Mode::vib)
            throw ConfigError("sweep over '" + parameter + "' applies to vib scenarios only");
        if (parameter == "lambda" && base.mode == Mode::vib)
            throw ConfigError("sweep over 'lambda' applies to es and lie scenarios only");

        std::vector<Scenario> runs;
        for (double v : values) {
            Scenario sc = base;
            if (parameter == "eps") {
                if (!(v > 0)) throw ConfigError("eps values must be positive");
                sc.eps = v;
            } else if (parameter == "x0") {
                std::fill(sc.x0.begin(), sc.x0.end(), v);
            } else if (parameter == "alpha") {
                if (!(v > 0)) throw ConfigError("alpha values must be positive");
                sc.vib.alpha = v;
            } else if (parameter == "mu") {
                sc.vib.mu = v;
            } else {
                sc.checks.descent_lambda = v;
            }
            runs.push_back(std::move(sc));
        }

        struct Row {
            int status = 0;
            std::string error;
            RunSummary s;
            double sup_dev = NAN;
            long descent_violations = -1;
        };
        std::vector<Row> rows(runs.size());
        const auto target = target_of(base);
        std::atomic<std::size_t> next{0};
        auto worker = [&] {
            for (std::size_t i = next++; i < runs.size(); i = next++) {
                const auto& sc = runs[i];
                Row& row = rows[i];
                const auto res = guarded([&]() -> CommandResult {
                    const auto tr = run_scenario(sc);
                    write_text(out_dir / (sc.name + "_" + parameter + "_" + std::to_string(i) + ".csv"),
                               trajectory_csv(tr));
                    row.s = summarize(tr, target);
                    if (sc.mode == Mode::es) row.sup_dev = sup_deviation(tr, run_averaged(sc));
                    if (sc.checks.descent_lambda) {
                        const double m1 = estimate_a2_constants(build_cost(sc), sc.checks.a2_radius, sc.checks.a2_points).m1;
                        const double J_star = build_cost(sc).min_value();
                        const double period = sc.mode == Mode::es ? sc.eps : scenario_step(sc) * sc.stride;
                        const auto rep =
                            check_descent(tr, period, *sc.checks.descent_lambda, m1, descent_m_tilde(sc, m1), J_star);
                        row.descent_violations = static_cast<long>(rep.violations.size());
                    }
                    return {};
                });
                row.status = res.status;
                row.error = res.report;
            }
        };
        const std::size_t nw = std::max<std::size_t>(1, std::min(workers, runs.size()));
        std::vector<std::thread> pool;
        for (std::size_t w = 1; w < nw; ++w) pool.emplace_back(worker);
        worker();
        for (auto& t : pool) t.join();

        std::string csv = "index,value,status,final_error,final_J,sup_deviation,descent_violations\n";
        std::ostringstream os;
        os << "sweep " << base.name << " over " << parameter << " (" << values.size() << " values)\n";
        int status = exit_status::pass;
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const auto& r = rows[i];
            csv += std::to_string(i) + ',' + g17(values[i]) + ',' + std::to_string(r.status) + ',' +
                   g17(r.s.final_error) + ',' + g17(r.s.final_J) + ',' + g17(r.sup_dev) + ',' +
                   std::to_string(r.descent_violations) + '\n';
            os << "  " << parameter << "=" << g6(values[i]);
            if (r.status != 0) {
                os << "  error: " << r.error;
                status = std::max(status, r.status);
                continue;
            }
            os << "  final|x-x*|=" << g6(r.s.final_error) << "  final J=" << g6(r.s.final_J);
            if (!std::isnan(r.sup_dev)) os << "  sup-dev=" << g6(r.sup_dev);
            if (r.descent_violations >= 0) {
                os << "  descent violations=" << r.descent_violations;
                if (r.descent_violations > 0) status = std::max(status, exit_status::check_failed);
            }
            os << '\n';
        }
        write_text(out_dir / "summary.csv", csv);
        os << "wrote " << (out_dir / "summary.csv").string() << '\n';
        return {status, os.str()};
    });
}

// ---------------------------------------------------------------------------

CertifyOutcome certify(const Scenario& sc, bool simulate) {
    if (sc.mode == Mode::vib) throw ConfigError("certify applies to extremum-seeking scenarios");
    const auto sys = build_es_system(sc);
    const auto& ct = sc.certificate;
    auto est = estimate_certificate_inputs(sys, ct.Delta, ct.delta, ct.delta0, ct.lambda_fraction, ct.grid_points);
    for (auto* in : {&est.raw, &est.inflated}) {
        in->rho = ct.rho;
        in->rho0 = ct.rho0;
        in->rho_min = ct.rho_min;
    }
    CertifyOutcome out;
    out.certificate = epsilon_certificate(est.inflated);
    out.raw = epsilon_certificate(est.raw);
    if (!simulate || ct.periods == 0) return out;

    const auto& c = out.certificate;
    const State xs = *sys.cost().minimizer();
    const double x0_dist = distance(sc.x0, xs);
    if (!(x0_dist < ct.delta)) {
        std::ostringstream os;
        os << "initial state must lie in the ball |x0 - x*| < delta = " << ct.delta << ", got " << x0_dist;
        throw PreconditionError(os.str());
    }
    const double eps = c.eps_bar;
    std::vector<Axis> axes = sys.axes();
    for (auto& a : axes) a.dither = DitherPair(a.dither.k, eps);
    const EsSystem run(sys.cost(), axes, sys.box());
    const int per_period = 400 * run.kmax();
    out.trajectory = simulate_es(run, sc.x0, static_cast<double>(ct.periods) * eps, eps / per_period, 40);
    out.descent = check_descent(*out.trajectory, eps, c.lambda_bar, c.inputs.cost.m1, c.m_tilde,
                                sys.cost().min_value());

    DecayEnvelope env;
    env.m_tilde = c.m_tilde;
    env.lambda = c.lambda_bar;
    env.rho = c.vanishing ? 0.0 : ct.rho;
    env.m1 = c.inputs.cost.m1;
    env.gamma1 = c.inputs.cost.gamma1;
    env.gamma2 = c.inputs.cost.gamma2;
    env.x0_dist = x0_dist;
    env.J0 = sys.shifted_cost(sc.x0);
    if (c.vanishing) env.sigma = {c.M_tilde, c.inputs.L, x0_dist, c.nu_coeff / std::sqrt(eps), eps};
    else env.sigma = {0.0, c.inputs.L, x0_dist, c.nu_coeff / std::sqrt(eps), eps};
    out.envelope = check_envelope(*out.trajectory, env, xs);
    return out;
}

CommandResult cmd_certify(const Scenario& sc, const std::optional<std::filesystem::path>& out, bool simulate) {
    return guarded([&]() -> CommandResult {
        const auto res = certify(sc, simulate);
        std::ostringstream os;
        os << "certify " << sc.name << '\n' << res.certificate.to_text();
        os << "  (uninflated constants: eps_bar " << g6(res.raw.eps_bar) << ")\n";
        int status = exit_status::pass;
        auto report = [&](const char* name, const std::optional<CheckReport>& r) {
            if (!r) return;
            os << (r->passed() ? "PASS  " : "FAIL  ") << name << "  " << r->checked << " samples";
            if (!r->passed()) {
                const auto& v = r->violations.front();
                os << ", " << r->violations.size() << " violations, first at t=" << g6(v.t) << " (" << g6(v.lhs)
                   << " > " << g6(v.rhs) << ")";
                status = exit_status::check_failed;
            }
            os << '\n';
        };
        if (res.trajectory)
            os << "simulation at eps = eps_bar: " << sc.certificate.periods << " periods, " << res.trajectory->size()
               << " samples\n";
        report("descent", res.descent);
        report("envelope", res.envelope);
        if (out) {
            std::string kv = res.certificate.to_key_values();
            if (res.descent) kv += std::string("descent=") + (res.descent->passed() ? "pass" : "fail") + '\n';
            if (res.envelope) kv += std::string("envelope=") + (res.envelope->passed() ? "pass" : "fail") + '\n';
            write_text(*out, kv);
            os << "wrote " << out->string() << '\n';
        }
        return {status, os.str()};
    });
}

CommandResult cmd_compare(const std::filesystem::path& a, const std::filesystem::path& b, double tolerance) {
    return guarded([&]() -> CommandResult {
        if (!(tolerance >= 0)) throw ConfigError("--tolerance must be non-negative");
        const auto ta = read_csv(a), tb = read_csv(b);
        std::ostringstream os;
        if (ta.header != tb.header) {
            os << "FAIL  headers differ\n";
            return {exit_status::check_failed, os.str()};
        }
        if (ta.rows.size() != tb.rows.size()) {
            os << "FAIL  row counts differ: " << ta.rows.size() << " vs " << tb.rows.size() << '\n';
            return {exit_status::check_failed, os.str()};
        }
        double worst = 0;
        std::size_t wr = 0, wc = 0;
        for (std::size_t r = 0; r < ta.rows.size(); ++r)
            for (std::size_t c = 0; c < ta.header.size(); ++c) {
                const double x = ta.rows[r][c], y = tb.rows[r][c];
                const double d = (std::isnan(x) && std::isnan(y)) ? 0.0 : std::abs(x - y);
                if (!(d <= worst)) {
                    worst = d;
                    wr = r;
                    wc = c;
                }
            }
        const bool ok = worst <= tolerance;
        os << (ok ? "PASS" : "FAIL") << "  max |difference| " << g6(worst);
        if (worst > 0) os << " in column " << ta.header[wc] << " row " << wr + 1;
        os << " (tolerance " << g6(tolerance) << ", " << ta.rows.size() << " rows)\n";
        return {ok ? exit_status::pass : exit_status::check_failed, os.str()};
    });
}

}  // namespace esgen
