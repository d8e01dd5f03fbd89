#include "openima/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace openima {

namespace {

// nearest center, ties toward the lowest cluster id
int nearest_center(const Matrix& centers, const double* point, std::size_t dim,
                   double* dist2_out = nullptr) {
    int best = 0;
    double best_d = squared_distance(centers.row(0), point, dim);
    for (std::size_t c = 1; c < centers.rows(); ++c) {
        double d = squared_distance(centers.row(c), point, dim);
        if (d < best_d) {
            best_d = d;
            best = static_cast<int>(c);
        }
    }
    if (dist2_out) *dist2_out = best_d;
    return best;
}

void assign_all(const Matrix& z, const Matrix& centers, std::vector<int>& assignment) {
    assignment.resize(z.rows());
    for (std::size_t i = 0; i < z.rows(); ++i)
        assignment[i] = nearest_center(centers, z.row(i), z.cols());
}

double total_inertia(const Matrix& z, const Matrix& centers,
                     const std::vector<int>& assignment) {
    double s = 0.0;
    for (std::size_t i = 0; i < z.rows(); ++i)
        s += squared_distance(centers.row(assignment[i]), z.row(i), z.cols());
    return s;
}

}  // namespace

Matrix init_centers(const Matrix& z, int k, KMeansConfig::Init init, Rng& rng) {
    std::size_t n = z.rows();
    Matrix centers(k, z.cols());
    if (init == KMeansConfig::Init::RandomPoints) {
        auto picks = rng.sample_without_replacement(n, k);
        for (int c = 0; c < k; ++c)
            for (std::size_t f = 0; f < z.cols(); ++f) centers(c, f) = z(picks[c], f);
        return centers;
    }
    // k-means++: D^2 sampling
    std::vector<double> d2(n, std::numeric_limits<double>::infinity());
    std::size_t first = static_cast<std::size_t>(rng.uniform_int(n));
    for (std::size_t f = 0; f < z.cols(); ++f) centers(0, f) = z(first, f);
    for (int c = 1; c < k; ++c) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double d = squared_distance(centers.row(c - 1), z.row(i), z.cols());
            if (d < d2[i]) d2[i] = d;
            total += d2[i];
        }
        std::size_t pick = 0;
        if (total > 0.0) {
            double target = rng.uniform() * total;
            double run = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                run += d2[i];
                if (run >= target) {
                    pick = i;
                    break;
                }
            }
        } else {
            pick = static_cast<std::size_t>(rng.uniform_int(n));  // all points identical
        }
        for (std::size_t f = 0; f < z.cols(); ++f) centers(c, f) = z(pick, f);
    }
    return centers;
}

namespace {

ClusterModel lloyd_once(const Matrix& z, int k, const KMeansConfig& config, Rng& rng) {
    std::size_t n = z.rows();
    std::size_t dim = z.cols();
    Matrix centers = init_centers(z, k, config.init, rng);
    std::vector<int> assignment;
    std::vector<std::size_t> counts(k);
    double prev_inertia = std::numeric_limits<double>::infinity();

    for (int it = 0; it < config.max_iter; ++it) {
        assign_all(z, centers, assignment);

        // empty-cluster repair: move the center onto the point farthest
        // from its own center, ascending cluster id
        std::fill(counts.begin(), counts.end(), 0);
        for (int a : assignment) ++counts[a];
        for (int c = 0; c < k; ++c) {
            if (counts[c] > 0) continue;
            double worst = -1.0;
            std::size_t worst_i = 0;
            for (std::size_t i = 0; i < n; ++i) {
                if (counts[assignment[i]] <= 1) continue;
                double d = squared_distance(centers.row(assignment[i]), z.row(i), dim);
                if (d > worst) {
                    worst = d;
                    worst_i = i;
                }
            }
            if (worst < 0.0) break;  // fewer distinct points than clusters
            --counts[assignment[worst_i]];
            assignment[worst_i] = c;
            ++counts[c];
            for (std::size_t f = 0; f < dim; ++f) centers(c, f) = z(worst_i, f);
        }

        double inertia = total_inertia(z, centers, assignment);
        if (inertia > prev_inertia * (1.0 + 1e-12) + 1e-9)
            throw std::logic_error("kmeans: inertia increased across an iteration");
        prev_inertia = inertia;

        // center update, deterministic accumulation in point order
        Matrix next(k, dim);
        for (std::size_t i = 0; i < n; ++i) {
            const double* row = z.row(i);
            double* crow = next.row(assignment[i]);
            for (std::size_t f = 0; f < dim; ++f) crow[f] += row[f];
        }
        double shift = 0.0;
        for (int c = 0; c < k; ++c) {
            if (counts[c] == 0) {
                for (std::size_t f = 0; f < dim; ++f) next(c, f) = centers(c, f);
                continue;
            }
            double inv = 1.0 / static_cast<double>(counts[c]);
            for (std::size_t f = 0; f < dim; ++f) next(c, f) *= inv;
            shift = std::max(shift, std::sqrt(squared_distance(next.row(c), centers.row(c), dim)));
        }
        if (shift < config.tol || it == config.max_iter - 1) {
            ClusterModel model;
            model.centers = std::move(centers);
            model.assignments = std::move(assignment);
            model.inertia = prev_inertia;
            return model;
        }
        centers = std::move(next);
    }
    throw std::logic_error("kmeans: unreachable");
}

void fill_confidences(const Matrix& z, ClusterModel& model) {
    model.confidences.resize(z.rows());
    for (std::size_t i = 0; i < z.rows(); ++i)
        model.confidences[i] = -std::sqrt(squared_distance(
            model.centers.row(model.assignments[i]), z.row(i), z.cols()));
}

}  // namespace

ClusterModel kmeans_fit(const Matrix& z, int k, const KMeansConfig& config, Rng& rng) {
    if (k < 1) throw std::invalid_argument("kmeans: k must be >= 1");
    if (static_cast<std::size_t>(k) > z.rows())
        throw std::invalid_argument("kmeans: k = " + std::to_string(k) + " exceeds " +
                                    std::to_string(z.rows()) + " points");
    if (config.restarts < 1) throw std::invalid_argument("kmeans: restarts must be >= 1");

    ClusterModel best;
    bool have = false;
    for (int r = 0; r < config.restarts; ++r) {
        ClusterModel model = lloyd_once(z, k, config, rng);
        if (!have || model.inertia < best.inertia) {
            best = std::move(model);
            have = true;
        }
    }
    fill_confidences(z, best);
    return best;
}

ClusterModel minibatch_kmeans_fit(const Matrix& z, int k, const MiniBatchConfig& config,
                                  Rng& rng) {
    std::size_t n = z.rows();
    if (k < 1) throw std::invalid_argument("minibatch kmeans: k must be >= 1");
    if (static_cast<std::size_t>(k) > n)
        throw std::invalid_argument("minibatch kmeans: k exceeds point count");
    if (config.batch < 1 || static_cast<std::size_t>(config.batch) > n)
        throw std::invalid_argument("minibatch kmeans: batch must be in [1, rows]");

    std::size_t dim = z.cols();
    Matrix centers = init_centers(z, k, config.init, rng);
    std::vector<double> seen(k, 0.0);

    for (int it = 0; it < config.iters; ++it) {
        auto batch = rng.sample_without_replacement(n, config.batch);
        // assignments against fixed centers, then one aggregated update
        Matrix sums(k, dim);
        std::vector<double> counts(k, 0.0);
        for (std::size_t b : batch) {
            int c = nearest_center(centers, z.row(b), dim);
            counts[c] += 1.0;
            double* srow = sums.row(c);
            const double* zrow = z.row(b);
            for (std::size_t f = 0; f < dim; ++f) srow[f] += zrow[f];
        }
        for (int c = 0; c < k; ++c) {
            if (counts[c] == 0.0) continue;
            double total = seen[c] + counts[c];
            for (std::size_t f = 0; f < dim; ++f)
                centers(c, f) = (centers(c, f) * seen[c] + sums(c, f)) / total;
            seen[c] = total;
        }
    }

    ClusterModel model;
    model.centers = std::move(centers);
    assign_all(z, model.centers, model.assignments);
    model.inertia = total_inertia(z, model.centers, model.assignments);
    fill_confidences(z, model);
    return model;
}

double confidence(const ClusterModel& model, const double* point, std::size_t dim) {
    if (model.centers.cols() != dim)
        throw std::invalid_argument("confidence: dimension mismatch");
    double d2 = 0.0;
    nearest_center(model.centers, point, dim, &d2);
    return -std::sqrt(d2);
}

double silhouette(const Matrix& z, const std::vector<int>& labels) {
    std::size_t n = z.rows();
    if (labels.size() != n) throw std::invalid_argument("silhouette: label count mismatch");
    int k = 0;
    for (int l : labels) {
        if (l < 0) throw std::invalid_argument("silhouette: negative label");
        k = std::max(k, l + 1);
    }
    std::vector<std::size_t> counts(k, 0);
    for (int l : labels) ++counts[l];
    int nonempty = 0;
    for (auto c : counts)
        if (c > 0) ++nonempty;
    if (nonempty < 2)
        throw std::invalid_argument("silhouette: need at least two non-empty clusters");

    double total = 0.0;
    std::vector<double> cluster_dist(k);
    for (std::size_t i = 0; i < n; ++i) {
        std::fill(cluster_dist.begin(), cluster_dist.end(), 0.0);
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            cluster_dist[labels[j]] +=
                std::sqrt(squared_distance(z.row(i), z.row(j), z.cols()));
        }
        int own = labels[i];
        if (counts[own] <= 1) continue;  // singleton scores 0
        double a = cluster_dist[own] / static_cast<double>(counts[own] - 1);
        double b = std::numeric_limits<double>::infinity();
        for (int c = 0; c < k; ++c) {
            if (c == own || counts[c] == 0) continue;
            b = std::min(b, cluster_dist[c] / static_cast<double>(counts[c]));
        }
        double denom = std::max(a, b);
        if (denom > 0.0) total += (b - a) / denom;
    }
    return total / static_cast<double>(n);
}

}  // namespace openima
