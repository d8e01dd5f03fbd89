#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "openima/clustering.hpp"
#include "openima/matrix.hpp"
#include "openima/rng.hpp"

namespace openima {

// Two-component spherical Gaussian mixture of the variance-imbalance
// model: means on the first axis, equal component weights.
struct MixtureSpec {
    double mu1 = 0.0;
    double mu2 = 4.0;
    double sigma1 = 1.0;
    double sigma2 = 1.0;
    int dim = 1;
    long n_samples = 20000;

    double alpha() const { return (mu2 - mu1) / (sigma1 + sigma2); }
    double gamma() const {
        return std::max(sigma1, sigma2) / std::min(sigma1, sigma2);
    }
    void validate() const;
};

// points are N x dim, components per point are 1 or 2
std::pair<Matrix, std::vector<int>> sample_mixture(const MixtureSpec& spec, Rng& rng);

// Integral of x p(x) over (a, b) for N(mu, sigma^2):
// mu [Phi(beta) - Phi(alpha)] - sigma [phi(beta) - phi(alpha)],
// alpha = (a-mu)/sigma, beta = (b-mu)/sigma. Infinite endpoints allowed.
double truncated_normal_integral(double mu, double sigma, double a, double b);

// Expected cluster centers given a partition threshold s: conditional
// mixture means over x < s and x > s.
std::pair<double, double> theta_pair(double s, const MixtureSpec& spec);

double fixed_point_residual(double s, const MixtureSpec& spec);  // h(s) = 2s - t1 - t2

// Root of h on [mu1, mu2] by bisection; the sign change over the bracket
// is verified before solving.
double solve_threshold(const MixtureSpec& spec, double tol = 1e-10);

// (ACC1, ACC2) of the threshold rule: Phi((s-mu1)/s1), 1 - Phi((s-mu2)/s2).
std::pair<double, double> analytic_acc(const MixtureSpec& spec, double s_star);

// Per-component recall of a 2-cluster model, clusters matched to the
// components by a 2x2 Hungarian pass on the contingency table.
std::pair<double, double> empirical_acc(const Matrix& points,
                                        const std::vector<int>& true_component,
                                        const ClusterModel& model);

// rank correlation, average ranks on ties
double spearman(const std::vector<double>& x, const std::vector<double>& y);

struct SweepRow {
    double sigma1 = 0.0;
    double alpha = 0.0;
    double gamma = 0.0;
    double mean_empirical_acc2 = 0.0;
    double analytic_acc2 = 0.0;
    double s_star = 0.0;
};

struct SweepResult {
    std::vector<SweepRow> rows;
    double spearman_empirical = 0.0;
    double spearman_analytic = 0.0;
    int s_star_trend = 0;  // -1 strictly decreasing, +1 strictly increasing, 0 mixed

    std::string to_csv() const;  // header + one line per grid point
};

// Sweeps sigma1 with everything else fixed. Every grid point must satisfy
// the 1 < gamma < 2 and 1.5 < alpha < 3 hypotheses; violations are
// rejected listing the offending points. Repeats are independent
// simulations; the per-repeat RNG stream is shared across grid points
// (common random numbers) so that the comparison along the grid is
// paired. Jobs over (grid point, repeat) stay embarrassingly parallel
// since every job reconstructs its stream from (seed, repeat).
SweepResult monotonicity_sweep(const std::vector<double>& sigma1_grid, double mu1,
                               double mu2, double sigma2, int dim, long n_samples,
                               int repeats, std::uint64_t seed);

}  // namespace openima
