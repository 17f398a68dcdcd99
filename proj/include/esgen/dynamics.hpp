#pragma once

#include <optional>
#include <span>
#include <vector>

#include "esgen/costs.hpp"
#include "esgen/dithers.hpp"
#include "esgen/generators.hpp"
#include "esgen/types.hpp"

namespace esgen {

inline constexpr double kZFloor = 1e-12;
// Cost values below J* by more than this are a model error, not rounding.
inline constexpr double kModelTol = 1e-9;

/// Axis-aligned hyper-rectangle the integrator must stay in.
struct Box {
    State lo, hi;
    [[nodiscard]] bool contains(std::span<const double> x) const;
    static Box around(std::span<const double> center, double half_width);
};

struct Axis {
    GeneratorPair gen;
    DitherPair dither;
};

/// x_i' = F1i(J~) u1i(t) + F2i(J~) u2i(t), one generator pair and one dither per axis.
class EsSystem {
public:
    EsSystem(CostProfile cost, std::vector<Axis> axes, std::optional<Box> box = std::nullopt,
             double z_floor = kZFloor);

    [[nodiscard]] const CostProfile& cost() const { return cost_; }
    [[nodiscard]] const std::vector<Axis>& axes() const { return axes_; }
    [[nodiscard]] std::size_t dim() const { return axes_.size(); }
    [[nodiscard]] double eps() const { return eps_; }
    [[nodiscard]] int kmax() const { return kmax_; }
    [[nodiscard]] double beta21(std::size_t i) const { return beta21_[i]; }
    [[nodiscard]] const std::optional<Box>& box() const { return box_; }
    [[nodiscard]] double z_floor() const { return z_floor_; }
    /// eps / (400 kmax).
    [[nodiscard]] double default_step() const { return eps_ / (400.0 * kmax_); }
    [[nodiscard]] std::vector<DitherPair> dithers() const;

    /// J(x) - J*, throwing ModelError when it is below -kModelTol.
    double shifted_cost(std::span<const double> x) const;
    /// Per-axis control F1i u1i + F2i u2i.
    State controls(double t, std::span<const double> x) const;
    /// The 2n fields F_si(J~(x)) e_i in the order (axis 0: s=1, s=2), (axis 1: ...).
    [[nodiscard]] std::vector<VectorField> channel_fields() const;

private:
    [[nodiscard]] bool floored(std::size_t i, double z) const {
        return axes_[i].gen.vanishing_at_min() && z <= z_floor_;
    }

    CostProfile cost_;
    std::vector<Axis> axes_;
    std::vector<double> beta21_;
    std::optional<Box> box_;
    double z_floor_;
    double eps_ = 0;
    int kmax_ = 1;
};

State es_field(const EsSystem& sys, double t, std::span<const double> x);
/// x_i' = -beta21_i dJ/dx_i F0i(J~).
State lie_field(const EsSystem& sys, std::span<const double> x);

/// x' = f(x) + g(x) u with the oscillating feedback
/// u = F1(V) u1(t) + s F2(V) u2(t),  s = alpha / (beta21 F0),
/// which averages to the damping law x' = f - alpha g L_gV.
/// F0 of the pair must be constant.
class VibSystem {
public:
    VibSystem(VectorField drift, VectorField input_field, CostProfile clf, double alpha, GeneratorPair gen,
              DitherPair dither, std::optional<Box> box = std::nullopt);

    [[nodiscard]] const CostProfile& clf() const { return clf_; }
    [[nodiscard]] const GeneratorPair& gen() const { return gen_; }
    [[nodiscard]] const DitherPair& dither() const { return dither_; }
    [[nodiscard]] double alpha() const { return alpha_; }
    [[nodiscard]] double f2_gain() const { return gain_; }
    [[nodiscard]] const std::optional<Box>& box() const { return box_; }
    [[nodiscard]] std::size_t dim() const { return clf_.dim(); }
    [[nodiscard]] double default_step() const { return dither_.eps / 400.0; }

    State drift(std::span<const double> x) const { return drift_(x); }
    State input_field(std::span<const double> x) const { return input_(x); }
    double control(double t, std::span<const double> x) const;

private:
    VectorField drift_, input_;
    CostProfile clf_;
    double alpha_;
    GeneratorPair gen_;
    DitherPair dither_;
    std::optional<Box> box_;
    double gain_ = 1;
};

/// Oscillatory closed loop, or its averaged counterpart f - alpha g (grad V . g) when `averaged`.
State vib_field(const VibSystem& sys, double t, std::span<const double> x, bool averaged = false);

struct Trajectory {
    std::vector<double> times;
    std::vector<State> states;
    std::vector<double> cost_values;
    std::vector<State> controls;
    [[nodiscard]] std::size_t size() const { return times.size(); }
};

/// Fixed-step classical RK4 from t = 0 to t_end. A sample is stored every
/// `stride` steps and at t_end; step k sits at t = k h exactly, the last step
/// is shortened when h does not divide t_end. Fills times and states only.
Trajectory integrate(const TimeField& field, std::span<const double> x0, double t_end, double h,
                     std::size_t stride = 1, const std::optional<Box>& box = std::nullopt);

/// h defaults to sys.default_step(); eps / kmax must be an integer multiple of h.
Trajectory simulate_es(const EsSystem& sys, std::span<const double> x0, double t_end,
                       std::optional<double> h = std::nullopt, std::size_t stride = 1);
/// Averaged gradient-like flow; controls hold the averaged velocity.
Trajectory simulate_lie(const EsSystem& sys, std::span<const double> x0, double t_end, double h,
                        std::size_t stride = 1);
Trajectory simulate_vib(const VibSystem& sys, std::span<const double> x0, double t_end,
                        std::optional<double> h = std::nullopt, std::size_t stride = 1, bool averaged = false);

/// max_t |a(t) - b(t)| over samples taken at the same times (InputError otherwise).
double sup_deviation(const Trajectory& a, const Trajectory& b);

}  // namespace esgen
