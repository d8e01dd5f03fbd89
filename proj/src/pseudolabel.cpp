#include "openima/pseudolabel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace openima {

bool PseudoLabelSet::has(std::uint32_t node) const { return label_of(node) >= 0; }

int PseudoLabelSet::label_of(std::uint32_t node) const {
    auto it = std::lower_bound(entries.begin(), entries.end(), node,
                               [](const auto& e, std::uint32_t n) { return e.first < n; });
    if (it != entries.end() && it->first == node) return it->second;
    return -1;
}

PseudoLabelSet select_pseudo(const ClusterModel& model, const ClassAlignment& alignment,
                             const std::vector<bool>& labeled_mask, double rho, int epoch) {
    if (!(rho > 0.0 && rho <= 100.0))
        throw std::invalid_argument("pseudo: rho must be in (0, 100]");
    std::size_t n = model.confidences.size();
    if (labeled_mask.size() != n)
        throw std::invalid_argument("pseudo: mask size != node count");
    if (model.assignments.size() != n)
        throw std::invalid_argument("pseudo: model must cover every node");

    std::vector<std::uint32_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = static_cast<std::uint32_t>(i);
    std::stable_sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
        if (model.confidences[a] != model.confidences[b])
            return model.confidences[a] > model.confidences[b];
        return a < b;
    });

    std::size_t keep = static_cast<std::size_t>(
        std::floor(rho * static_cast<double>(n) / 100.0 + 1e-9));

    PseudoLabelSet set;
    set.rho = rho;
    set.epoch = epoch;
    for (std::size_t r = 0; r < keep && r < n; ++r) {
        std::uint32_t node = order[r];
        if (labeled_mask[node]) continue;
        set.entries.emplace_back(node, alignment.mapping[model.assignments[node]]);
    }
    std::sort(set.entries.begin(), set.entries.end());
    return set;
}

void write_pseudo_dump(const PseudoLabelSet& set, const ClusterModel& model,
                       const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("pseudo: cannot write " + path);
    out.precision(17);
    for (const auto& [node, cls] : set.entries)
        out << node << "," << cls << "," << model.confidences[node] << "\n";
}

}  // namespace openima
