#pragma once

#include <functional>
#include <span>
#include <utility>
#include <vector>

namespace esgen {

/// One axis' periodic excitation:
///   u1(t) = 2 sqrt(pi k / eps) cos(2 pi k t / eps)
///   u2(t) = 2 sqrt(pi k / eps) sin(2 pi k t / eps)
/// Period eps; the pair has zero mean and beta_{2,1} = 1.
struct DitherPair {
    int k = 1;
    double eps = 0.1;

    DitherPair() = default;
    DitherPair(int k, double eps);

    [[nodiscard]] double amplitude() const;
    [[nodiscard]] double angular_frequency() const;
    [[nodiscard]] std::pair<double, double> operator()(double t) const;
};

std::pair<double, double> eval_dither(const DitherPair& d, double t);

inline constexpr int kDefaultQuadSteps = 8192;

/// beta_{i,j} = (1/T) int_0^T u_i(theta) int_0^theta u_j(tau) dtau dtheta.
class BetaMatrix {
public:
    BetaMatrix(std::size_t channels, std::vector<double> entries, std::size_t quad_steps)
        : n_(channels), entries_(std::move(entries)), quad_steps_(quad_steps) {}

    [[nodiscard]] double operator()(std::size_t i, std::size_t j) const { return entries_[i * n_ + j]; }
    [[nodiscard]] std::size_t channels() const { return n_; }
    [[nodiscard]] std::size_t quad_steps() const { return quad_steps_; }

private:
    std::size_t n_;
    std::vector<double> entries_;
    std::size_t quad_steps_;
};

using Signal = std::function<double(double)>;

/// Averaging coefficients of T-periodic signals by composite Simpson; the
/// inner integral is accumulated on the same grid. quad_steps >= 1024.
BetaMatrix beta(std::span<const Signal> signals, double period, std::size_t quad_steps = kDefaultQuadSteps);

/// Same for dither pairs sharing eps; channel 2i is u1 of pair i and channel
/// 2i+1 is u2. The step count is raised so the grid step divides eps / max k.
BetaMatrix beta(std::span<const DitherPair> dithers, std::size_t quad_steps = kDefaultQuadSteps);

/// (1/T) int_0^T u(t) dt by composite Simpson.
double period_mean(const Signal& u, double period, std::size_t quad_steps = kDefaultQuadSteps);

/// nu = 2 sqrt(2 pi) eps^{-1/2} sum_i sqrt(k_i): the maximum of sum |u_si(t)|.
double nu(std::span<const DitherPair> dithers);

/// Shared eps of a dither list; ConfigError when they differ or the list is empty.
double common_eps(std::span<const DitherPair> dithers);

}  // namespace esgen
