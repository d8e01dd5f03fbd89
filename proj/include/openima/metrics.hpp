#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "openima/matrix.hpp"

namespace openima {

// Per-class embedding summary: mean vector plus the scalar RMS distance
// to that mean.
struct ClassStats {
    int class_id = -1;
    std::vector<double> mean;
    double stddev = 0.0;
    std::size_t count = 0;
};

// Stats for every class present among the given rows.
std::vector<ClassStats> class_stats(const Matrix& z, const std::vector<int>& labels);

// Mean over all (seen, novel) pairs of max(std)/min(std); always >= 1.
// A class with zero spread is rejected naming it.
double imbalance_rate(const std::vector<ClassStats>& seen,
                      const std::vector<ClassStats>& novel);

// Mean over pairs of ||mean_s - mean_n|| / (std_s + std_n).
double separation_rate(const std::vector<ClassStats>& seen,
                       const std::vector<ClassStats>& novel);

// Model-selection score: equal-weight sum of the min-max-normalized
// silhouette and accuracy columns. A constant column normalizes to zeros.
std::vector<double> sc_acc(const std::vector<std::pair<double, double>>& candidates);

// One evaluation snapshot; epoch -1 marks the final post-training record.
struct MetricsRecord {
    int epoch = 0;
    double acc_all = 0.0;
    std::optional<double> acc_seen;
    std::optional<double> acc_novel;
    double imbalance_rate = 0.0;
    double separation_rate = 0.0;
    double sc = 0.0;
    double val_acc = 0.0;
    std::optional<double> sc_acc_score;

    std::string to_json() const;
};

}  // namespace openima
