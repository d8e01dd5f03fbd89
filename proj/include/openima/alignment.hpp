#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "openima/matrix.hpp"

namespace openima {

struct Assignment {
    std::vector<int> row_to_col;  // -1 means the row stays unassigned
    long long total = 0;
};

// One-to-one assignment maximizing the total count over a rectangular
// non-negative matrix (padded internally). Among the optima the
// lexicographically smallest row_to_col vector is returned, with
// "unassigned" ordered after every real column.
Assignment hungarian_max(const std::vector<std::vector<long long>>& counts);

// Total cluster -> class mapping: matched clusters map injectively into
// the seen classes, the rest mint fresh novel ids n_seen, n_seen+1, ...
// in ascending cluster-id order.
struct ClassAlignment {
    std::vector<int> mapping;   // size K
    std::vector<bool> matched;  // true when aligned to a seen class
    int n_seen = 0;
};

// clusters/labels are the cluster ids and manual labels of the labeled
// nodes; labels must already be compacted to 0..n_seen-1.
ClassAlignment fit_alignment(const std::vector<int>& clusters, const std::vector<int>& labels,
                             int k, int n_seen);

std::vector<int> predict(const ClassAlignment& alignment, const std::vector<int>& clusters);

struct GroupAccuracy {
    double all = 0.0;
    std::optional<double> seen;
    std::optional<double> novel;
};

// Evaluation protocol: a single Hungarian pass over the full confusion
// counts of the evaluated nodes, then per-group accuracies under that one
// alignment. A group with no nodes reports an absent accuracy.
GroupAccuracy eval_accuracy(const std::vector<int>& y_true, const std::vector<int>& clusters,
                            const std::vector<bool>& is_seen, int n_classes, int k);

}  // namespace openima
