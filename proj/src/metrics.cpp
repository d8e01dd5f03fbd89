#include "openima/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <json.hpp>

namespace openima {

std::vector<ClassStats> class_stats(const Matrix& z, const std::vector<int>& labels) {
    if (labels.size() != z.rows())
        throw std::invalid_argument("class_stats: label count != row count");
    int k = 0;
    for (int l : labels) {
        if (l < 0) throw std::invalid_argument("class_stats: negative label");
        k = std::max(k, l + 1);
    }
    std::vector<ClassStats> out;
    for (int c = 0; c < k; ++c) {
        std::size_t count = 0;
        for (int l : labels)
            if (l == c) ++count;
        if (count == 0) continue;
        ClassStats s;
        s.class_id = c;
        s.count = count;
        s.mean.assign(z.cols(), 0.0);
        for (std::size_t i = 0; i < z.rows(); ++i) {
            if (labels[i] != c) continue;
            for (std::size_t f = 0; f < z.cols(); ++f) s.mean[f] += z(i, f);
        }
        for (double& v : s.mean) v /= static_cast<double>(count);
        double ss = 0.0;
        for (std::size_t i = 0; i < z.rows(); ++i) {
            if (labels[i] != c) continue;
            ss += squared_distance(z.row(i), s.mean.data(), z.cols());
        }
        s.stddev = std::sqrt(ss / static_cast<double>(count));
        out.push_back(std::move(s));
    }
    return out;
}

namespace {
void check_stats(const std::vector<ClassStats>& seen, const std::vector<ClassStats>& novel,
                 const char* what) {
    if (seen.empty() || novel.empty())
        throw std::invalid_argument(std::string(what) + ": both class sets must be non-empty");
    for (const auto& group : {seen, novel})
        for (const auto& s : group)
            if (!(s.stddev > 0.0))
                throw std::invalid_argument(std::string(what) + ": class " +
                                            std::to_string(s.class_id) +
                                            " has zero standard deviation");
}
}  // namespace

double imbalance_rate(const std::vector<ClassStats>& seen,
                      const std::vector<ClassStats>& novel) {
    check_stats(seen, novel, "imbalance_rate");
    double total = 0.0;
    for (const auto& s : seen)
        for (const auto& n : novel)
            total += std::max(s.stddev, n.stddev) / std::min(s.stddev, n.stddev);
    return total / static_cast<double>(seen.size() * novel.size());
}

double separation_rate(const std::vector<ClassStats>& seen,
                       const std::vector<ClassStats>& novel) {
    check_stats(seen, novel, "separation_rate");
    double total = 0.0;
    for (const auto& s : seen)
        for (const auto& n : novel) {
            double dist = std::sqrt(
                squared_distance(s.mean.data(), n.mean.data(), s.mean.size()));
            total += dist / (s.stddev + n.stddev);
        }
    return total / static_cast<double>(seen.size() * novel.size());
}

std::vector<double> sc_acc(const std::vector<std::pair<double, double>>& candidates) {
    if (candidates.size() < 2)
        throw std::invalid_argument("sc_acc: need at least two candidates");
    auto normalize = [&](auto get) {
        double lo = get(candidates[0]), hi = lo;
        for (const auto& c : candidates) {
            lo = std::min(lo, get(c));
            hi = std::max(hi, get(c));
        }
        std::vector<double> out(candidates.size(), 0.0);
        if (hi > lo)
            for (std::size_t i = 0; i < candidates.size(); ++i)
                out[i] = (get(candidates[i]) - lo) / (hi - lo);
        return out;  // constant column stays all-zero
    };
    auto sc_norm = normalize([](const auto& c) { return c.first; });
    auto acc_norm = normalize([](const auto& c) { return c.second; });
    std::vector<double> scores(candidates.size());
    for (std::size_t i = 0; i < scores.size(); ++i)
        scores[i] = 0.5 * sc_norm[i] + 0.5 * acc_norm[i];
    return scores;
}

std::string MetricsRecord::to_json() const {
    nlohmann::json j;
    j["epoch"] = epoch;
    j["acc_all"] = acc_all;
    j["acc_seen"] = acc_seen ? nlohmann::json(*acc_seen) : nlohmann::json(nullptr);
    j["acc_novel"] = acc_novel ? nlohmann::json(*acc_novel) : nlohmann::json(nullptr);
    j["imbalance_rate"] = imbalance_rate;
    j["separation_rate"] = separation_rate;
    j["sc"] = sc;
    j["val_acc"] = val_acc;
    j["sc_acc_score"] = sc_acc_score ? nlohmann::json(*sc_acc_score) : nlohmann::json(nullptr);
    return j.dump();
}

}  // namespace openima
