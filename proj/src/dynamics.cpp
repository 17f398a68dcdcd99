#include "esgen/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "esgen/error.hpp"

namespace esgen {

bool Box::contains(std::span<const double> x) const {
    for (std::size_t i = 0; i < x.size(); ++i)
        if (x[i] < lo[i] || x[i] > hi[i]) return false;
    return true;
}

Box Box::around(std::span<const double> center, double half_width) {
    Box b;
    for (double c : center) {
        b.lo.push_back(c - half_width);
        b.hi.push_back(c + half_width);
    }
    return b;
}

namespace {

double pair_beta21(const DitherPair& d) {
    const DitherPair one[] = {d};
    return beta(std::span<const DitherPair>(one))(1, 0);
}

void check_box(const std::optional<Box>& box, std::size_t n) {
    if (box && (box->lo.size() != n || box->hi.size() != n))
        throw ConfigError("domain box dimension does not match the state dimension");
}

}  // namespace

EsSystem::EsSystem(CostProfile cost, std::vector<Axis> axes, std::optional<Box> box, double z_floor)
    : cost_(std::move(cost)), axes_(std::move(axes)), box_(std::move(box)), z_floor_(z_floor) {
    if (axes_.empty()) throw ConfigError("an extremum-seeking system needs at least one axis");
    if (axes_.size() != cost_.dim()) {
        std::ostringstream os;
        os << "cost has dimension " << cost_.dim() << " but " << axes_.size() << " axes were given";
        throw ConfigError(os.str());
    }
    std::vector<DitherPair> ds = dithers();
    eps_ = common_eps(ds);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        for (std::size_t j = 0; j < i; ++j) {
            if (ds[i].k == ds[j].k) {
                std::ostringstream os;
                os << "dither frequency k=" << ds[i].k << " is used on axes " << j + 1 << " and " << i + 1
                   << "; the k_i must be pairwise distinct";
                throw ConfigError(os.str());
            }
        }
        kmax_ = std::max(kmax_, ds[i].k);
        beta21_.push_back(pair_beta21(ds[i]));
    }
    if (!box_ && cost_.minimizer()) box_ = Box::around(*cost_.minimizer(), 10.0);
    check_box(box_, dim());
}

std::vector<DitherPair> EsSystem::dithers() const {
    std::vector<DitherPair> out;
    for (const auto& a : axes_) out.push_back(a.dither);
    return out;
}

double EsSystem::shifted_cost(std::span<const double> x) const {
    const double z = cost_.shifted(x);
    if (z < -kModelTol) {
        std::ostringstream os;
        os.precision(17);
        os << "J(x) - J* = " << z << " < 0 at x = (";
        for (std::size_t i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x[i];
        os << "): the declared minimum value is wrong";
        throw ModelError(os.str());
    }
    return z;
}

State EsSystem::controls(double t, std::span<const double> x) const {
    const double z = shifted_cost(x);
    State u(dim(), 0.0);
    for (std::size_t i = 0; i < dim(); ++i) {
        if (floored(i, z)) continue;
        const auto [u1, u2] = axes_[i].dither(t);
        u[i] = axes_[i].gen.F1(z) * u1 + axes_[i].gen.F2(z) * u2;
    }
    return u;
}

std::vector<VectorField> EsSystem::channel_fields() const {
    std::vector<VectorField> out;
    for (std::size_t i = 0; i < dim(); ++i) {
        for (int s = 1; s <= 2; ++s) {
            out.emplace_back([this, i, s](std::span<const double> x) {
                State v(dim(), 0.0);
                const double z = shifted_cost(x);
                if (!floored(i, z)) v[i] = s == 1 ? axes_[i].gen.F1(z) : axes_[i].gen.F2(z);
                return v;
            });
        }
    }
    return out;
}

State es_field(const EsSystem& sys, double t, std::span<const double> x) { return sys.controls(t, x); }

State lie_field(const EsSystem& sys, std::span<const double> x) {
    const double z = sys.shifted_cost(x);
    const State g = sys.cost().gradient(x);
    State v(sys.dim());
    for (std::size_t i = 0; i < sys.dim(); ++i) v[i] = -sys.beta21(i) * g[i] * sys.axes()[i].gen.F0(z);
    return v;
}

VibSystem::VibSystem(VectorField drift, VectorField input_field, CostProfile clf, double alpha, GeneratorPair gen,
                     DitherPair dither, std::optional<Box> box)
    : drift_(std::move(drift)),
      input_(std::move(input_field)),
      clf_(std::move(clf)),
      alpha_(alpha),
      gen_(std::move(gen)),
      dither_(dither),
      box_(std::move(box)) {
    if (!(alpha_ > 0)) throw ConfigError("vibrational control needs alpha > 0");
    const double f0 = gen_.F0(1.0);
    for (double z : {0.0, 0.5, 2.0, 10.0}) {
        if (std::abs(gen_.F0(z) - f0) > 1e-12 * std::max(1.0, std::abs(f0)))
            throw ConfigError("vibrational control needs a generator pair with constant F0");
    }
    if (f0 == 0.0) throw ConfigError("vibrational control needs F0 != 0");
    gain_ = alpha_ / (pair_beta21(dither_) * f0);
    if (!box_ && clf_.minimizer()) box_ = Box::around(*clf_.minimizer(), 10.0);
    check_box(box_, dim());
}

double VibSystem::control(double t, std::span<const double> x) const {
    const double v = clf_.shifted(x);
    if (v < -kModelTol) throw ModelError("V(x) below its declared minimum");
    if (gen_.vanishing_at_min() && v <= kZFloor) return 0.0;
    const auto [u1, u2] = dither_(t);
    return gen_.F1(v) * u1 + gain_ * gen_.F2(v) * u2;
}

State vib_field(const VibSystem& sys, double t, std::span<const double> x, bool averaged) {
    State f = sys.drift(x);
    const State g = sys.input_field(x);
    if (f.size() != sys.dim() || g.size() != sys.dim())
        throw ConfigError("drift and input field must return vectors of the state dimension");
    double u;
    if (averaged) {
        const State dv = sys.clf().gradient(x);
        double lgv = 0;
        for (std::size_t i = 0; i < g.size(); ++i) lgv += dv[i] * g[i];
        u = -sys.alpha() * lgv;
    } else {
        u = sys.control(t, x);
    }
    for (std::size_t i = 0; i < f.size(); ++i) f[i] += g[i] * u;
    return f;
}

Trajectory integrate(const TimeField& field, std::span<const double> x0, double t_end, double h, std::size_t stride,
                     const std::optional<Box>& box) {
    if (!(t_end > 0)) throw ConfigError("t_end must be positive");
    if (!(h > 0)) throw ConfigError("step size h must be positive");
    if (stride == 0) throw ConfigError("sample stride must be positive");
    if (!all_finite(x0)) throw ConfigError("initial state is not finite");
    if (box && !box->contains(x0)) throw EscapeError("initial state lies outside the domain box", 0.0);

    const auto steps = static_cast<std::size_t>(std::ceil(t_end / h - 1e-9));
    const std::size_t n = x0.size();
    Trajectory tr;
    State x(x0.begin(), x0.end());
    tr.times.push_back(0.0);
    tr.states.push_back(x);

    State k1, k2, k3, k4, tmp(n);
    double t = 0.0;
    for (std::size_t s = 1; s <= steps; ++s) {
        const double t_next = s == steps ? t_end : static_cast<double>(s) * h;
        const double dt = t_next - t;
        k1 = field(t, x);
        for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + 0.5 * dt * k1[i];
        k2 = field(t + 0.5 * dt, tmp);
        for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + 0.5 * dt * k2[i];
        k3 = field(t + 0.5 * dt, tmp);
        for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + dt * k3[i];
        k4 = field(t + dt, tmp);
        for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + dt / 6.0 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
        if (!all_finite(tmp)) {
            std::ostringstream os;
            os << "state became non-finite after t=" << t;
            throw DivergenceError(os.str(), t);
        }
        if (box && !box->contains(tmp)) {
            std::ostringstream os;
            os << "state left the domain box at t=" << t_next;
            throw EscapeError(os.str(), t_next);
        }
        x.swap(tmp);
        tmp.resize(n);
        t = t_next;
        if (s % stride == 0 || s == steps) {
            tr.times.push_back(t);
            tr.states.push_back(x);
        }
    }
    return tr;
}

namespace {

template <class Cost>
void fill_costs(Trajectory& tr, const Cost& cost) {
    tr.cost_values.reserve(tr.size());
    for (const auto& x : tr.states) tr.cost_values.push_back(cost.value(x));
}

}  // namespace

Trajectory simulate_es(const EsSystem& sys, std::span<const double> x0, double t_end, std::optional<double> h,
                       std::size_t stride) {
    const double step = h.value_or(sys.default_step());
    const double ratio = sys.eps() / sys.kmax() / step;
    if (std::abs(ratio - std::round(ratio)) > 1e-9 * ratio || std::round(ratio) < 1) {
        std::ostringstream os;
        os << "step h=" << step << " does not divide the shortest dither period eps/kmax=" << sys.eps() / sys.kmax();
        throw ConfigError(os.str());
    }
    TimeField f = [&sys](double t, std::span<const double> x) { return es_field(sys, t, x); };
    Trajectory tr = integrate(f, x0, t_end, step, stride, sys.box());
    fill_costs(tr, sys.cost());
    for (std::size_t i = 0; i < tr.size(); ++i) tr.controls.push_back(sys.controls(tr.times[i], tr.states[i]));
    return tr;
}

Trajectory simulate_lie(const EsSystem& sys, std::span<const double> x0, double t_end, double h, std::size_t stride) {
    TimeField f = [&sys](double, std::span<const double> x) { return lie_field(sys, x); };
    Trajectory tr = integrate(f, x0, t_end, h, stride, sys.box());
    fill_costs(tr, sys.cost());
    for (const auto& x : tr.states) tr.controls.push_back(lie_field(sys, x));
    return tr;
}

Trajectory simulate_vib(const VibSystem& sys, std::span<const double> x0, double t_end, std::optional<double> h,
                        std::size_t stride, bool averaged) {
    TimeField f = [&sys, averaged](double t, std::span<const double> x) { return vib_field(sys, t, x, averaged); };
    Trajectory tr = integrate(f, x0, t_end, h.value_or(sys.default_step()), stride, sys.box());
    fill_costs(tr, sys.clf());
    for (std::size_t i = 0; i < tr.size(); ++i) {
        const double u = averaged ? [&] {
            const State dv = sys.clf().gradient(tr.states[i]);
            const State g = sys.input_field(tr.states[i]);
            double lgv = 0;
            for (std::size_t j = 0; j < g.size(); ++j) lgv += dv[j] * g[j];
            return -sys.alpha() * lgv;
        }()
                                  : sys.control(tr.times[i], tr.states[i]);
        tr.controls.push_back({u});
    }
    return tr;
}

double sup_deviation(const Trajectory& a, const Trajectory& b) {
    if (a.size() != b.size()) throw InputError("trajectories have different sample counts");
    double sup = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (std::abs(a.times[i] - b.times[i]) > 1e-9 * std::max(1.0, std::abs(a.times[i])))
            throw InputError("trajectories are not sampled at the same times");
        sup = std::max(sup, distance(a.states[i], b.states[i]));
    }
    return sup;
}

}  // namespace esgen
