#include "openima/theory.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "openima/alignment.hpp"
#include "openima/special.hpp"

namespace openima {

void MixtureSpec::validate() const {
    if (!(mu1 < mu2)) throw std::invalid_argument("mixture: need mu1 < mu2");
    if (!(sigma1 > 0.0 && sigma2 > 0.0))
        throw std::invalid_argument("mixture: sigmas must be > 0");
    if (dim < 1) throw std::invalid_argument("mixture: dim must be >= 1");
    if (n_samples < 2) throw std::invalid_argument("mixture: n_samples must be >= 2");
}

std::pair<Matrix, std::vector<int>> sample_mixture(const MixtureSpec& spec, Rng& rng) {
    spec.validate();
    Matrix points(spec.n_samples, spec.dim);
    std::vector<int> component(spec.n_samples);
    for (long i = 0; i < spec.n_samples; ++i) {
        bool second = rng.bernoulli(0.5);
        component[i] = second ? 2 : 1;
        double mu = second ? spec.mu2 : spec.mu1;
        double sigma = second ? spec.sigma2 : spec.sigma1;
        points(i, 0) = mu + sigma * rng.normal();
        for (int f = 1; f < spec.dim; ++f) points(i, f) = sigma * rng.normal();
    }
    return {std::move(points), std::move(component)};
}

double truncated_normal_integral(double mu, double sigma, double a, double b) {
    if (!(sigma > 0.0)) throw std::invalid_argument("truncated integral: sigma must be > 0");
    if (!(a < b)) throw std::invalid_argument("truncated integral: need a < b");
    auto cdf = [&](double x) {
        if (std::isinf(x)) return x > 0 ? 1.0 : 0.0;
        return std_normal_cdf((x - mu) / sigma);
    };
    auto pdf = [&](double x) {
        if (std::isinf(x)) return 0.0;
        return std_normal_pdf((x - mu) / sigma);
    };
    return mu * (cdf(b) - cdf(a)) - sigma * (pdf(b) - pdf(a));
}

std::pair<double, double> theta_pair(double s, const MixtureSpec& spec) {
    spec.validate();
    if (!std::isfinite(s)) throw std::invalid_argument("theta_pair: s must be finite");
    double u1 = (s - spec.mu1) / spec.sigma1;
    double u2 = (s - spec.mu2) / spec.sigma2;
    double c1 = std_normal_cdf(u1), c2 = std_normal_cdf(u2);
    double p1 = std_normal_pdf(u1), p2 = std_normal_pdf(u2);

    double lower_mass = c1 + c2;
    double upper_mass = (1.0 - c1) + (1.0 - c2);
    if (lower_mass < 1e-300 || upper_mass < 1e-300)
        throw std::invalid_argument("theta_pair: threshold leaves one side with no mass");

    double theta1 = (spec.mu1 * c1 - spec.sigma1 * p1 + spec.mu2 * c2 - spec.sigma2 * p2) /
                    lower_mass;
    double theta2 = (spec.mu1 * (1.0 - c1) + spec.sigma1 * p1 +
                     spec.mu2 * (1.0 - c2) + spec.sigma2 * p2) /
                    upper_mass;
    return {theta1, theta2};
}

double fixed_point_residual(double s, const MixtureSpec& spec) {
    auto [t1, t2] = theta_pair(s, spec);
    return 2.0 * s - t1 - t2;
}

double solve_threshold(const MixtureSpec& spec, double tol) {
    spec.validate();
    if (!(tol > 0.0)) throw std::invalid_argument("solve_threshold: tol must be > 0");
    double lo = spec.mu1, hi = spec.mu2;
    double flo = fixed_point_residual(lo, spec);
    double fhi = fixed_point_residual(hi, spec);
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if ((flo < 0.0) == (fhi < 0.0)) {
        std::ostringstream msg;
        msg << "solve_threshold: no sign change over [" << lo << ", " << hi << "] (h(lo)="
            << flo << ", h(hi)=" << fhi << ")";
        throw std::invalid_argument(msg.str());
    }
    double mid = 0.5 * (lo + hi);
    for (int it = 0; it < 200; ++it) {
        mid = 0.5 * (lo + hi);
        double fm = fixed_point_residual(mid, spec);
        if (std::abs(fm) < tol) return mid;
        if ((fm < 0.0) == (flo < 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
        if (hi - lo < 1e-15 * std::max(1.0, std::abs(mid))) break;
    }
    return mid;
}

std::pair<double, double> analytic_acc(const MixtureSpec& spec, double s_star) {
    double acc1 = std_normal_cdf((s_star - spec.mu1) / spec.sigma1);
    double acc2 = 1.0 - std_normal_cdf((s_star - spec.mu2) / spec.sigma2);
    return {acc1, acc2};
}

std::pair<double, double> empirical_acc(const Matrix& points,
                                        const std::vector<int>& true_component,
                                        const ClusterModel& model) {
    if (model.k() != 2) throw std::invalid_argument("empirical_acc: need a 2-cluster model");
    std::size_t n = points.rows();
    if (true_component.size() != n || model.assignments.size() != n)
        throw std::invalid_argument("empirical_acc: size mismatch");
    std::vector<std::vector<long long>> table(2, std::vector<long long>(2, 0));
    std::vector<long long> totals(2, 0);
    for (std::size_t i = 0; i < n; ++i) {
        int comp = true_component[i];
        if (comp != 1 && comp != 2)
            throw std::invalid_argument("empirical_acc: component labels must be 1 or 2");
        ++table[comp - 1][model.assignments[i]];
        ++totals[comp - 1];
    }
    if (totals[0] == 0 || totals[1] == 0)
        throw std::invalid_argument("empirical_acc: a component has no samples");
    Assignment match = hungarian_max(table);
    double acc1 = static_cast<double>(table[0][match.row_to_col[0]]) / totals[0];
    double acc2 = static_cast<double>(table[1][match.row_to_col[1]]) / totals[1];
    return {acc1, acc2};
}

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2)
        throw std::invalid_argument("spearman: need two same-length series");
    auto ranks = [](const std::vector<double>& v) {
        std::size_t n = v.size();
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
        std::vector<double> rank(n);
        std::size_t i = 0;
        while (i < n) {
            std::size_t j = i;
            while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
            double avg = 0.5 * static_cast<double>(i + j) + 1.0;  // average rank, 1-based
            for (std::size_t k = i; k <= j; ++k) rank[order[k]] = avg;
            i = j + 1;
        }
        return rank;
    };
    auto rx = ranks(x), ry = ranks(y);
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        mx += rx[i];
        my += ry[i];
    }
    mx /= rx.size();
    my /= ry.size();
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        double dx = rx[i] - mx, dy = ry[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0)
        throw std::invalid_argument("spearman: a series is constant");
    return sxy / std::sqrt(sxx * syy);
}

std::string SweepResult::to_csv() const {
    std::ostringstream out;
    out.precision(12);
    out << "sigma1,alpha,gamma,mean_empirical_acc2,analytic_acc2,s_star\n";
    for (const auto& r : rows)
        out << r.sigma1 << "," << r.alpha << "," << r.gamma << ","
            << r.mean_empirical_acc2 << "," << r.analytic_acc2 << "," << r.s_star << "\n";
    return out.str();
}

SweepResult monotonicity_sweep(const std::vector<double>& sigma1_grid, double mu1,
                               double mu2, double sigma2, int dim, long n_samples,
                               int repeats, std::uint64_t seed) {
    if (sigma1_grid.empty()) throw std::invalid_argument("sweep: empty grid");
    if (repeats < 1) throw std::invalid_argument("sweep: repeats must be >= 1");

    std::ostringstream bad;
    for (double s1 : sigma1_grid) {
        MixtureSpec spec{mu1, mu2, s1, sigma2, dim, n_samples};
        double a = spec.alpha(), g = spec.gamma();
        if (!(g > 1.0 && g < 2.0 && a > 1.5 && a < 3.0))
            bad << " sigma1=" << s1 << " (alpha=" << a << ", gamma=" << g << ")";
    }
    if (!bad.str().empty())
        throw std::invalid_argument(
            "sweep: grid points violate the 1<gamma<2, 1.5<alpha<3 hypotheses:" + bad.str());

    KMeansConfig kcfg;
    kcfg.restarts = 2;
    kcfg.max_iter = 100;
    kcfg.tol = 1e-7;

    SweepResult result;
    for (double s1 : sigma1_grid) {
        MixtureSpec spec{mu1, mu2, s1, sigma2, dim, n_samples};
        SweepRow row;
        row.sigma1 = s1;
        row.alpha = spec.alpha();
        row.gamma = spec.gamma();
        row.s_star = solve_threshold(spec);
        row.analytic_acc2 = analytic_acc(spec, row.s_star).second;

        double total = 0.0;
        for (int rep = 0; rep < repeats; ++rep) {
            Rng rng(seed, static_cast<std::uint64_t>(rep));  // shared across grid points
            auto [points, component] = sample_mixture(spec, rng);
            ClusterModel model = kmeans_fit(points, 2, kcfg, rng);
            total += empirical_acc(points, component, model).second;
        }
        row.mean_empirical_acc2 = total / repeats;
        result.rows.push_back(row);
    }

    std::vector<double> s1s, emp, ana;
    for (const auto& r : result.rows) {
        s1s.push_back(r.sigma1);
        emp.push_back(r.mean_empirical_acc2);
        ana.push_back(r.analytic_acc2);
    }
    result.spearman_empirical = spearman(s1s, emp);
    result.spearman_analytic = spearman(s1s, ana);

    bool dec = true, inc = true;
    for (std::size_t i = 0; i + 1 < result.rows.size(); ++i) {
        if (!(result.rows[i + 1].s_star < result.rows[i].s_star)) dec = false;
        if (!(result.rows[i + 1].s_star > result.rows[i].s_star)) inc = false;
    }
    result.s_star_trend = result.rows.size() < 2 ? 0 : (dec ? -1 : (inc ? 1 : 0));
    return result;
}

}  // namespace openima
