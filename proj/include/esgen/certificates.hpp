#pragma once

#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "esgen/costs.hpp"
#include "esgen/dynamics.hpp"
#include "esgen/generators.hpp"

namespace esgen {

/// Factor applied to grid suprema before they enter a bound.
inline constexpr double kSafetyFactor = 1.05;

/// Decay rate function: e^{-s/2} for m~ = 0, (1 + m~ s J0^m~)^{-1/(2 m1 m~)} otherwise.
double phi(double m_tilde, double J0, double m1, double s);

/// Inputs of the sigma factor: 1 + (M/L)(g2/g1)^{m~/2} delta^{m1 m~} (e^{nu L eps} - 1).
/// M is the growth constant of the fields in |x - x*| (M~ of the displacement bound).
struct SigmaInputs {
    double M = 0, L = 1, delta = 0, nu = 0, eps = 0;
};

struct DecayEnvelope {
    double m_tilde = 0;
    double lambda = 1;
    double rho = 0;
    double m1 = 1, gamma1 = 1, gamma2 = 1;
    double x0_dist = 0;
    double J0 = 0;
    SigmaInputs sigma;
};

double sigma_bound(const DecayEnvelope& env);
/// sigma (g2/g1)^{1/(2 m1)} |x0 - x*| phi(lambda max(t - eps, 0)) + rho.
double envelope_eval(const DecayEnvelope& env, double t);

/// |x(t) - x(0)| <= (M~ d0^m / L)(e^{nu L t} - 1).
double lemma3_bound(double M_tilde, double L, double m, double nu, double t, double x0_dist);

/// Volterra remainder bound (t nu)^3 d0^varpi C with
/// C = 2^{varpi-1} H~ (1 + c1 (nu t d0^{m-1})^varpi),
/// c1 = 6 (M~ (e^L - 1))^varpi / (L (varpi+1)(varpi+2)(varpi+3)).
/// Requires nu t <= 1.
double lemma4_remainder_bound(double H_tilde, double varpi, double M_tilde, double L, double m, double nu, double t,
                              double x0_dist);

struct DescentArgs {
    double alpha1 = 1, alpha2 = 1;
    double kappa1 = 1, kappa2 = 1, mu = 0, m1 = 1;
    double remainder_ratio = 0;  // |r_eps| / (eps J0^{m~ + 1/(2 m1)})
};

/// J0 (1 - eps k1/m1 J0^m~ + eps^2 k2/(2 m1^2) J0^{2m~})^m1 with
/// k1 = alpha1 kappa1 - sqrt(kappa2) r, k2 = ((m1-1) kappa2 + mu m1)(alpha2 sqrt(kappa2) + r)^2.
double lemma5_descent(double J0, double eps, const DescentArgs& args, double m_tilde);

/// Constants entering the eps thresholds.
struct CertificateInputs {
    double L = 0;    // Lipschitz constant of the fields F_si(J(x)) e_i on D
    double M_F = 0;  // sup |F_si(J(x))| on D0
    std::vector<int> k_list;
    double Delta = std::numeric_limits<double>::infinity();
    double delta = 0, delta0 = 0;
    double lambda_bar = 0;
    CostConstants cost;
    /// Vanishing case: A4 exponents and bounds (M, H as in A4). Absent means the practical case.
    std::optional<A4Bounds> a4;
    /// Practical case: F0 >= alpha, sup of a single |L L F| (summed over all triples here).
    double alpha = 1;
    double H = 0;
    double rho = 0, rho0 = 0, rho_min = 0;
};

struct EpsilonCertificate {
    bool vanishing = true;
    double nu_coeff = 0;  // 2 sqrt(2 pi) sum sqrt(k_i)
    double d = 0, c0 = 0, delta0 = 0, M_F = 0, m_tilde = 0;
    double eps0 = 0, eps0_tilde = 0, eps1 = 0, eps2 = 0, eps4 = 0, eps_bar = 0;
    double eps_step = 0;  // eps bound from lambda_bar eps J^m~ / m1 < 1
    double eps_power = std::numeric_limits<double>::infinity();  // m~ > 0 bound of the power-law step
    double M_tilde = 0, H_tilde = 0, c1 = 0, C_bar = 0, Omega = 0, lambda1 = 0;
    double lambda_bar = 0;
    CertificateInputs inputs;

    [[nodiscard]] std::string to_key_values() const;
    [[nodiscard]] std::string to_text() const;
};

/// Thresholds; each strict inequality is taken at 0.99 of its supremum.
EpsilonCertificate epsilon_certificate(const CertificateInputs& in);

struct SampleViolation {
    double t = 0;
    double lhs = 0, rhs = 0;
    double slack = 0;  // rhs + tolerance - lhs
};

struct CheckReport {
    std::vector<SampleViolation> violations;
    std::size_t checked = 0;
    [[nodiscard]] bool passed() const { return violations.empty(); }
};

/// Slack added to every right side: 1e-9 + 1e-6 |rhs|.
inline double slack_tol(double rhs) { return 1e-9 + 1e-6 * std::abs(rhs); }

/// J~(x((k+1) eps)) <= J~(x(k eps)) (1 - eps lambda/m1 J~^m~)^m1 at consecutive eps-multiples.
CheckReport check_descent(const Trajectory& traj, double eps, double lambda, double m1, double m_tilde,
                          double J_star);
/// |x(t) - x*| <= envelope_eval(env, t) at every sample.
CheckReport check_envelope(const Trajectory& traj, const DecayEnvelope& env, std::span<const double> x_star);
/// Largest lambda in [0, lambda_max] for which check_envelope passes (bisection); 0 when none does.
double fit_envelope_lambda(const Trajectory& traj, DecayEnvelope env, std::span<const double> x_star,
                           double lambda_max = 100.0, int iterations = 60);

/// Grid suprema for the displacement and remainder bounds of the fields F_si(J(x)) e_i:
///   |f_i(x)| <= M~ |x - x*|^m, Lipschitz L, sum_{ijl} |L_fl L_fj f_i| <= H~ |x - x*|^varpi.
struct LemmaConstants {
    double M_tilde = 0, L = 0, H_tilde = 0, M_F = 0;
    double m = 0, varpi = 0;
};

struct EstimatedLemmaConstants {
    LemmaConstants raw, inflated;
};

EstimatedLemmaConstants estimate_lemma_constants(const EsSystem& sys, double radius, std::size_t grid_points,
                                                 double m, double varpi);

struct EstimatedCertificateInputs {
    CertificateInputs raw, inflated;
};

/// Estimate the certificate constants of an extremum-seeking system on verification grids:
/// A2 constants on the ball of radius delta0, L on D (radius Delta, or 2 delta0 when Delta is infinite),
/// M_F on D0, A4 bounds for vanishing pairs. lambda_bar = lambda_fraction * alpha1 kappa1.
EstimatedCertificateInputs estimate_certificate_inputs(const EsSystem& sys, double Delta, double delta,
                                                       double delta0, double lambda_fraction,
                                                       std::size_t grid_points = 41);

}  // namespace esgen
