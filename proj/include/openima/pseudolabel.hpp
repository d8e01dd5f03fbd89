#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "openima/alignment.hpp"
#include "openima/clustering.hpp"

namespace openima {

struct PseudoLabelSet {
    // (node id, class id) pairs, sorted by node id; classes come from the
    // alignment's total mapping so novel minted ids are possible
    std::vector<std::pair<std::uint32_t, int>> entries;
    double rho = 0.0;
    int epoch = 0;

    bool has(std::uint32_t node) const;
    int label_of(std::uint32_t node) const;  // -1 when absent
};

// Confidence-ranked pseudo-label selection: every node (labeled and
// unlabeled together) is ranked by confidence, the top floor(rho% * |V|)
// survive, and only unlabeled survivors receive m*(cluster) as a pseudo
// label. Confidence ties break toward the lower node id.
PseudoLabelSet select_pseudo(const ClusterModel& model, const ClassAlignment& alignment,
                             const std::vector<bool>& labeled_mask, double rho,
                             int epoch = 0);

// debug dump, lines node_id,class_id,confidence
void write_pseudo_dump(const PseudoLabelSet& set, const ClusterModel& model,
                       const std::string& path);

}  // namespace openima
