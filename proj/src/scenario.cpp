#include "esgen/scenario.hpp"

#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "esgen/error.hpp"
#include "esgen/expr.hpp"

namespace esgen {

namespace {

std::string_view trim(std::string_view s, std::size_t* offset = nullptr) {
    std::size_t b = 0;
    while (b < s.size() && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
    std::size_t e = s.size();
    while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
    if (offset) *offset = b;
    return s.substr(b, e - b);
}

std::string where(const std::string& src, int line, int col) {
    std::ostringstream os;
    os << src << ':' << line << ':' << col << ": ";
    return os.str();
}

// Split on commas and whitespace, keeping each item's column offset.
std::vector<std::pair<std::string, int>> split_items(const std::string& text) {
    std::vector<std::pair<std::string, int>> out;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && (text[i] == ',' || text[i] == ' ' || text[i] == '\t')) ++i;
        const std::size_t b = i;
        while (i < text.size() && text[i] != ',' && text[i] != ' ' && text[i] != '\t') ++i;
        if (i > b) out.emplace_back(text.substr(b, i - b), static_cast<int>(b));
    }
    return out;
}

bool parse_double(const std::string& s, double& out) {
    if (s == "inf" || s == "+inf" || s == "infinity") {
        out = std::numeric_limits<double>::infinity();
        return true;
    }
    errno = 0;
    char* end = nullptr;
    out = std::strtod(s.c_str(), &end);
    return !s.empty() && end == s.c_str() + s.size() && errno != ERANGE;
}

}  // namespace

IniFile IniFile::parse(std::string_view text, std::string source) {
    IniFile ini;
    ini.source_ = std::move(source);
    std::string current;
    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t nl = text.find('\n', pos);
        std::string_view raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++line_no;
        const std::size_t hash = raw.find_first_of("#;");
        if (hash != std::string_view::npos) raw = raw.substr(0, hash);
        std::size_t off = 0;
        const std::string_view line = trim(raw, &off);
        if (line.empty()) continue;
        const int col = static_cast<int>(off) + 1;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError(where(ini.source_, line_no, col) + "section header is missing ']'");
            current = std::string(trim(line.substr(1, line.size() - 2)));
            if (current.empty()) throw ConfigError(where(ini.source_, line_no, col) + "empty section name");
            if (ini.sections_.count(current))
                throw ConfigError(where(ini.source_, line_no, col) + "duplicate section [" + current + "]");
            ini.sections_[current];
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string_view::npos)
            throw ConfigError(where(ini.source_, line_no, col) + "expected 'key = value'");
        if (current.empty())
            throw ConfigError(where(ini.source_, line_no, col) + "key outside of any [section]");
        const std::string key(trim(line.substr(0, eq)));
        if (key.empty()) throw ConfigError(where(ini.source_, line_no, col) + "empty key");
        std::size_t voff = 0;
        const std::string_view value = trim(line.substr(eq + 1), &voff);
        auto& sec = ini.sections_[current];
        if (sec.count(key))
            throw ConfigError(where(ini.source_, line_no, col) + "duplicate key '" + key + "' in [" + current + "]");
        sec[key] = Value{std::string(value), line_no, col + static_cast<int>(eq + 1 + voff)};
    }
    return ini;
}

const IniFile::Section* IniFile::section(const std::string& name) const {
    const auto it = sections_.find(name);
    return it == sections_.end() ? nullptr : &it->second;
}

std::vector<std::string> IniFile::section_names() const {
    std::vector<std::string> out;
    for (const auto& [k, v] : sections_) out.push_back(k);
    return out;
}

const IniFile::Value* IniFile::find(const std::string& sec, const std::string& key) const {
    const auto* s = section(sec);
    if (!s) return nullptr;
    const auto it = s->find(key);
    return it == s->end() ? nullptr : &it->second;
}

void IniFile::fail(const Value& v, const std::string& msg) const {
    throw ConfigError(where(source_, v.line, v.column) + msg);
}

std::optional<std::string> IniFile::string(const std::string& sec, const std::string& key) const {
    const auto* v = find(sec, key);
    if (!v) return std::nullopt;
    return v->text;
}

std::optional<double> IniFile::number(const std::string& sec, const std::string& key) const {
    const auto* v = find(sec, key);
    if (!v) return std::nullopt;
    double d;
    if (!parse_double(v->text, d)) fail(*v, "'" + key + "' expects a number, got '" + v->text + "'");
    return d;
}

std::optional<std::vector<double>> IniFile::numbers(const std::string& sec, const std::string& key) const {
    const auto* v = find(sec, key);
    if (!v) return std::nullopt;
    std::vector<double> out;
    for (const auto& [item, off] : split_items(v->text)) {
        double d;
        if (!parse_double(item, d)) {
            Value at = *v;
            at.column += off;
            fail(at, "'" + key + "' expects a list of numbers, got '" + item + "'");
        }
        out.push_back(d);
    }
    return out;
}

std::optional<long> IniFile::integer(const std::string& sec, const std::string& key) const {
    const auto d = number(sec, key);
    if (!d) return std::nullopt;
    if (*d != std::floor(*d) || std::abs(*d) > 1e15) fail(*find(sec, key), "'" + key + "' expects an integer");
    return static_cast<long>(*d);
}

std::optional<bool> IniFile::boolean(const std::string& sec, const std::string& key) const {
    const auto* v = find(sec, key);
    if (!v) return std::nullopt;
    if (v->text == "true" || v->text == "yes" || v->text == "1") return true;
    if (v->text == "false" || v->text == "no" || v->text == "0") return false;
    fail(*v, "'" + key + "' expects true or false");
}

void IniFile::check_keys(const std::string& sec, const std::vector<std::string>& allowed) const {
    const auto* s = section(sec);
    if (!s) return;
    for (const auto& [key, v] : *s) {
        bool ok = false;
        for (const auto& a : allowed) ok = ok || a == key;
        if (!ok) {
            Value at = v;
            at.column = 1;
            fail(at, "unknown key '" + key + "' in [" + sec + "]");
        }
    }
}

// ---------------------------------------------------------------------------

namespace {

std::size_t positive_size(const IniFile& ini, const std::string& sec, const std::string& key, std::size_t def) {
    const auto v = ini.integer(sec, key);
    if (!v) return def;
    if (*v <= 0) ini.fail(ini.section(sec)->at(key), "'" + key + "' must be positive");
    return static_cast<std::size_t>(*v);
}

std::vector<std::string> split_exprs(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ',') {
            out.emplace_back(trim(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!trim(cur).empty() || !out.empty()) out.emplace_back(trim(cur));
    return out;
}

GeneratorSpec parse_generator(const IniFile& ini, const std::string& sec) {
    ini.check_keys(sec, {"builtin", "params", "f1", "f0", "f1_prime", "z_ref", "domain", "gauge_shift", "f2_offset",
                         "f2_scale"});
    GeneratorSpec g;
    g.builtin = ini.string(sec, "builtin").value_or("");
    g.params = ini.numbers(sec, "params").value_or(std::vector<double>{});
    g.f1 = ini.string(sec, "f1").value_or("");
    g.f0 = ini.string(sec, "f0").value_or("");
    g.f1_prime = ini.string(sec, "f1_prime").value_or("");
    g.z_ref = ini.number(sec, "z_ref").value_or(1.0);
    g.gauge_shift = ini.number(sec, "gauge_shift").value_or(0.0);
    g.f2_offset = ini.number(sec, "f2_offset").value_or(0.0);
    g.f2_scale = ini.number(sec, "f2_scale").value_or(1.0);
    const auto* s = ini.section(sec);
    if (const auto d = ini.numbers(sec, "domain")) {
        if (d->size() != 2) ini.fail(s->at("domain"), "'domain' expects two numbers lo, hi");
        g.domain = Interval{(*d)[0], (*d)[1]};
    }
    const bool custom = !g.f1.empty() || !g.f0.empty();
    if (custom && !g.builtin.empty())
        ini.fail(s->at("builtin"), "give either 'builtin' or custom 'f1'/'f0', not both");
    if (!custom && g.builtin.empty()) throw ConfigError(ini.source() + ": [" + sec + "] needs 'builtin' or 'f1'/'f0'");
    if (custom && (g.f1.empty() || g.f0.empty() || !g.domain))
        throw ConfigError(ini.source() + ": [" + sec + "] custom generator needs f1, f0 and domain");
    try {
        (void)build_generator(g);
    } catch (const ConfigError& e) {
        const auto it = s->find(custom ? "f1" : "builtin");
        ini.fail(it != s->end() ? it->second : s->begin()->second, e.what());
    }
    return g;
}

}  // namespace

Scenario parse_scenario(std::string_view text, const std::string& source) {
    const IniFile ini = IniFile::parse(text, source);
    for (const auto& name : ini.section_names()) {
        const bool known = name == "scenario" || name == "cost" || name == "generator" || name == "dither" ||
                           name == "run" || name == "vib" || name == "checks" || name == "certificate" ||
                           name.rfind("generator.", 0) == 0;
        if (!known) {
            IniFile::Value at{"", 1, 1};
            if (const auto* s = ini.section(name); s && !s->empty()) at = s->begin()->second;
            ini.fail(at, "unknown section [" + name + "]");
        }
    }
    ini.check_keys("scenario", {"name", "mode"});
    ini.check_keys("cost", {"builtin", "params", "expr", "dim", "minimizer", "min_value"});
    ini.check_keys("dither", {"k", "eps"});
    ini.check_keys("run", {"x0", "t_end", "h", "stride", "box"});
    ini.check_keys("vib", {"drift", "input", "mu", "alpha"});
    ini.check_keys("checks", {"pfaffian_points", "pfaffian_tol", "a2_radius", "a2_points", "final_tol",
                              "descent_lambda"});
    ini.check_keys("certificate", {"Delta", "delta", "delta0", "lambda_fraction", "rho", "rho0", "rho_min",
                                   "grid_points", "periods"});

    Scenario sc;
    sc.name = ini.string("scenario", "name").value_or(std::filesystem::path(source).stem().string());
    const std::string mode = ini.string("scenario", "mode").value_or("es");
    if (mode == "es") sc.mode = Mode::es;
    else if (mode == "lie") sc.mode = Mode::lie;
    else if (mode == "vib") sc.mode = Mode::vib;
    else ini.fail(ini.section("scenario")->at("mode"), "mode must be es, lie or vib");

    // cost
    if (!ini.has("cost")) throw ConfigError(source + ": missing [cost] section");
    const auto* cs = ini.section("cost");
    sc.cost.builtin = ini.string("cost", "builtin").value_or("");
    sc.cost.params = ini.numbers("cost", "params").value_or(std::vector<double>{});
    sc.cost.expr = ini.string("cost", "expr").value_or("");
    sc.cost.min_value = ini.number("cost", "min_value").value_or(0.0);
    if (sc.cost.builtin.empty() == sc.cost.expr.empty())
        throw ConfigError(source + ": [cost] needs exactly one of 'builtin' or 'expr'");
    if (!sc.cost.builtin.empty()) {
        try {
            const auto c = builtin_cost(sc.cost.builtin, sc.cost.params);
            sc.cost.dim = c.dim();
        } catch (const ConfigError& e) {
            ini.fail(cs->at("builtin"), e.what());
        }
    } else {
        const auto d = ini.integer("cost", "dim").value_or(1);
        if (d <= 0) ini.fail(cs->at("dim"), "'dim' must be positive");
        sc.cost.dim = static_cast<std::size_t>(d);
        if (const auto m = ini.numbers("cost", "minimizer")) {
            if (m->size() != sc.cost.dim) ini.fail(cs->at("minimizer"), "'minimizer' length does not match 'dim'");
            sc.cost.minimizer = *m;
        }
    }
    const std::size_t n = sc.cost.dim;

    // generators
    if (ini.has("generator")) {
        const auto g = parse_generator(ini, "generator");
        sc.generators.assign(n, g);
    }
    for (std::size_t i = 1; i <= n; ++i) {
        const std::string sec = "generator." + std::to_string(i);
        if (ini.has(sec)) {
            if (sc.generators.empty()) sc.generators.resize(n);
            sc.generators[i - 1] = parse_generator(ini, sec);
        }
    }
    for (const auto& name : ini.section_names()) {
        if (name.rfind("generator.", 0) != 0) continue;
        const std::string idx = name.substr(10);
        char* end = nullptr;
        const long v = std::strtol(idx.c_str(), &end, 10);
        if (idx.empty() || *end != '\0' || v < 1 || static_cast<std::size_t>(v) > n)
            throw ConfigError(source + ": section [" + name + "] does not name an axis 1.." + std::to_string(n));
    }
    if (sc.generators.empty()) throw ConfigError(source + ": missing [generator] section");
    for (std::size_t i = 0; i < n; ++i)
        if (sc.generators[i].builtin.empty() && sc.generators[i].f1.empty())
            throw ConfigError(source + ": no generator given for axis " + std::to_string(i + 1));

    // dithers
    sc.eps = ini.number("dither", "eps").value_or(0.1);
    if (!(sc.eps > 0)) ini.fail(ini.section("dither")->at("eps"), "'eps' must be positive");
    const auto ks = ini.numbers("dither", "k").value_or(std::vector<double>{});
    if (ks.empty()) {
        for (std::size_t i = 1; i <= n; ++i) sc.k.push_back(static_cast<int>(i));
    } else {
        const auto& at = ini.section("dither")->at("k");
        const std::size_t want = sc.mode == Mode::vib ? 1 : n;
        if (ks.size() != want)
            ini.fail(at, "'k' needs " + std::to_string(want) + " entries, got " + std::to_string(ks.size()));
        for (double k : ks) {
            if (k != std::floor(k) || k < 1) ini.fail(at, "'k' entries must be positive integers");
            sc.k.push_back(static_cast<int>(k));
        }
    }
    if (sc.mode == Mode::vib) sc.k.resize(1);

    // run
    const auto* rs = ini.section("run");
    sc.x0 = ini.numbers("run", "x0").value_or(State(n, 0.0));
    if (sc.x0.size() != n) ini.fail(rs->at("x0"), "'x0' length does not match the cost dimension");
    sc.t_end = ini.number("run", "t_end").value_or(10.0);
    if (!(sc.t_end > 0)) ini.fail(rs->at("t_end"), "'t_end' must be positive");
    sc.h = ini.number("run", "h");
    if (sc.h && !(*sc.h > 0)) ini.fail(rs->at("h"), "'h' must be positive");
    if (const auto s = ini.integer("run", "stride")) {
        if (*s <= 0) ini.fail(rs->at("stride"), "'stride' must be positive");
        sc.stride = static_cast<std::size_t>(*s);
    }
    sc.box_half_width = ini.number("run", "box");
    if (sc.box_half_width && !(*sc.box_half_width > 0)) ini.fail(rs->at("box"), "'box' must be positive");

    // vib
    if (sc.mode == Mode::vib) {
        if (!ini.has("vib")) throw ConfigError(source + ": mode = vib needs a [vib] section");
        const auto* vs = ini.section("vib");
        sc.vib.mu = ini.number("vib", "mu").value_or(1.0);
        sc.vib.alpha = ini.number("vib", "alpha").value_or(1.0);
        if (!(sc.vib.alpha > 0)) ini.fail(vs->at("alpha"), "'alpha' must be positive");
        const auto drift = ini.string("vib", "drift");
        const auto input = ini.string("vib", "input");
        if (!drift || !input) throw ConfigError(source + ": [vib] needs 'drift' and 'input'");
        sc.vib.drift = split_exprs(*drift);
        sc.vib.input = split_exprs(*input);
        if (sc.vib.drift.size() != n) ini.fail(vs->at("drift"), "'drift' needs one expression per state component");
        if (sc.vib.input.size() != n) ini.fail(vs->at("input"), "'input' needs one expression per state component");
        try {
            (void)build_vib_system(sc);
        } catch (const ConfigError& e) {
            ini.fail(vs->at("drift"), e.what());
        }
    }

    // checks
    sc.checks.pfaffian_points = positive_size(ini, "checks", "pfaffian_points", sc.checks.pfaffian_points);
    sc.checks.pfaffian_tol = ini.number("checks", "pfaffian_tol");
    sc.checks.a2_radius = ini.number("checks", "a2_radius").value_or(sc.checks.a2_radius);
    sc.checks.a2_points = positive_size(ini, "checks", "a2_points", sc.checks.a2_points);
    sc.checks.final_tol = ini.number("checks", "final_tol");
    sc.checks.descent_lambda = ini.number("checks", "descent_lambda");

    // certificate
    auto& ct = sc.certificate;
    ct.Delta = ini.number("certificate", "Delta").value_or(ct.Delta);
    ct.delta = ini.number("certificate", "delta").value_or(ct.delta);
    ct.delta0 = ini.number("certificate", "delta0").value_or(ct.delta0);
    ct.lambda_fraction = ini.number("certificate", "lambda_fraction").value_or(ct.lambda_fraction);
    ct.rho = ini.number("certificate", "rho").value_or(ct.rho);
    ct.rho0 = ini.number("certificate", "rho0").value_or(ct.rho > 0 ? ct.rho / 2 : 0.0);
    ct.rho_min = ini.number("certificate", "rho_min").value_or(ct.rho0 / 2);
    ct.grid_points = positive_size(ini, "certificate", "grid_points", ct.grid_points);
    if (const auto p = ini.integer("certificate", "periods")) {
        if (*p < 0) ini.fail(ini.section("certificate")->at("periods"), "'periods' must be non-negative");
        ct.periods = static_cast<std::size_t>(*p);
    }

    // Axis/dither consistency (distinct k, matching dimensions) is checked when the system is built.
    if (sc.mode != Mode::vib) {
        try {
            (void)build_es_system(sc);
        } catch (const ConfigError& e) {
            const auto* ds = ini.section("dither");
            if (ds && ds->count("k")) ini.fail(ds->at("k"), e.what());
            throw;
        }
    }
    return sc;
}

Scenario load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open scenario file '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_scenario(ss.str(), path.string());
}

// ---------------------------------------------------------------------------

CostProfile build_cost(const Scenario& sc) {
    if (!sc.cost.builtin.empty()) return builtin_cost(sc.cost.builtin, sc.cost.params);
    return expression_cost(sc.cost.expr, sc.cost.dim, sc.cost.minimizer, sc.cost.min_value,
                           {{"mu", sc.vib.mu}, {"alpha", sc.vib.alpha}});
}

GeneratorPair build_generator(const GeneratorSpec& spec) {
    GeneratorPair pair = [&] {
        if (!spec.builtin.empty()) return builtin_generator(spec.builtin, spec.params);
        const auto f1 = Expression::parse(spec.f1, {"z"});
        const auto f0 = Expression::parse(spec.f0, {"z"});
        std::optional<ScalarFn> d1;
        if (!spec.f1_prime.empty()) {
            const auto e = Expression::parse(spec.f1_prime, {"z"});
            d1 = [e](double z) { return e(z); };
        }
        ConstructionOptions opt;
        opt.gauge_shift = spec.gauge_shift;
        return from_f1_f0([f1](double z) { return f1(z); }, d1, [f0](double z) { return f0(z); }, spec.z_ref,
                          *spec.domain, opt);
    }();
    if (!spec.builtin.empty() && spec.gauge_shift != 0) pair = pair.with_gauge_shift(spec.gauge_shift);
    if (spec.f2_scale != 1) pair = pair.with_f2_scale(spec.f2_scale);
    if (spec.f2_offset != 0) pair = pair.with_f2_offset(spec.f2_offset);
    return pair;
}

EsSystem build_es_system(const Scenario& sc) {
    std::vector<Axis> axes;
    for (std::size_t i = 0; i < sc.dim(); ++i)
        axes.push_back({build_generator(sc.generators[i]), DitherPair(sc.k.at(i), sc.eps)});
    auto cost = build_cost(sc);
    std::optional<Box> box;
    if (sc.box_half_width && cost.minimizer()) box = Box::around(*cost.minimizer(), *sc.box_half_width);
    return EsSystem(std::move(cost), std::move(axes), box);
}

namespace {

VectorField expr_field(const std::vector<std::string>& exprs, std::size_t n, const std::map<std::string, double>& k) {
    std::vector<std::string> vars;
    if (n == 1) {
        vars = {"x", "x1"};
    } else {
        for (std::size_t i = 1; i <= n; ++i) vars.push_back("x" + std::to_string(i));
    }
    std::vector<Expression> es;
    for (const auto& s : exprs) es.push_back(Expression::parse(s, vars, k));
    return [es, n](std::span<const double> x) {
        State out(n);
        if (n == 1) {
            const double v[2] = {x[0], x[0]};
            out[0] = es[0](std::span<const double>(v, 2));
        } else {
            for (std::size_t i = 0; i < n; ++i) out[i] = es[i](x);
        }
        return out;
    };
}

}  // namespace

VibSystem build_vib_system(const Scenario& sc) {
    const std::map<std::string, double> k{{"mu", sc.vib.mu}, {"alpha", sc.vib.alpha}};
    auto clf = build_cost(sc);
    std::optional<Box> box;
    if (sc.box_half_width && clf.minimizer()) box = Box::around(*clf.minimizer(), *sc.box_half_width);
    return VibSystem(expr_field(sc.vib.drift, sc.dim(), k), expr_field(sc.vib.input, sc.dim(), k), std::move(clf),
                     sc.vib.alpha, build_generator(sc.generators.at(0)), DitherPair(sc.k.at(0), sc.eps), box);
}

double scenario_step(const Scenario& sc) {
    if (sc.h) return *sc.h;
    int kmax = 1;
    for (int k : sc.k) kmax = std::max(kmax, k);
    return sc.eps / (400.0 * kmax);
}

}  // namespace esgen
