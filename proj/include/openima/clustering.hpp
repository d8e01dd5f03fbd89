#pragma once

#include <vector>

#include "openima/matrix.hpp"
#include "openima/rng.hpp"

namespace openima {

struct ClusterModel {
    Matrix centers;                   // K x d
    std::vector<int> assignments;     // per point, < K
    double inertia = 0.0;             // sum of squared distances to assigned centers
    std::vector<double> confidences;  // per point, -distance to assigned center

    int k() const { return static_cast<int>(centers.rows()); }
};

struct KMeansConfig {
    int max_iter = 300;
    double tol = 1e-6;  // on max center displacement
    int restarts = 10;
    enum class Init { KMeansPP, RandomPoints } init = Init::KMeansPP;
};

// Initial centers only; exposed so the mini-batch degenerate case can be
// checked against a single Lloyd step from the same start.
Matrix init_centers(const Matrix& z, int k, KMeansConfig::Init init, Rng& rng);

// Lloyd iterations until the centers move less than tol, best inertia
// over independent restarts. Nearest-center ties break toward the lowest
// cluster id; an emptied cluster seizes the point farthest from its own
// center. Never returns an empty cluster.
ClusterModel kmeans_fit(const Matrix& z, int k, const KMeansConfig& config, Rng& rng);

struct MiniBatchConfig {
    int batch = 1024;
    int iters = 50;
    KMeansConfig::Init init = KMeansConfig::Init::KMeansPP;
};

// Per-center running-mean updates from sampled batches, then one full
// assignment pass. With batch == rows the first iteration reproduces a
// Lloyd step exactly.
ClusterModel minibatch_kmeans_fit(const Matrix& z, int k, const MiniBatchConfig& config,
                                  Rng& rng);

// -(distance to the nearest center); any strictly decreasing transform of
// the distance would do, only the ordering is consumed downstream.
double confidence(const ClusterModel& model, const double* point, std::size_t dim);

// Mean silhouette over all points; requires at least two distinct labels
// and rejects a single-cluster labeling. Singleton-cluster points score 0.
double silhouette(const Matrix& z, const std::vector<int>& labels);

}  // namespace openima
