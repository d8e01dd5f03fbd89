#pragma once

#include <cstdint>
#include <vector>

#include "openima/autodiff.hpp"
#include "openima/matrix.hpp"

namespace openima {

enum class Provenance : std::uint8_t { None, Manual, Pseudo };

// Per-point labeling of a two-view batch. Point 2t is view one of batch
// node t, point 2t+1 is view two; the two views of a node always share
// label and provenance, and counterpart() is an involution.
struct BatchLabelMap {
    std::vector<int> label;               // -1 when absent
    std::vector<Provenance> provenance;
    std::vector<int> counterpart;

    std::size_t size() const { return label.size(); }
    void validate() const;

    // builds the interleaved 2N map from per-node labels
    static BatchLabelMap interleaved(const std::vector<int>& node_label,
                                     const std::vector<Provenance>& node_prov);
    static BatchLabelMap unlabeled_pairs(std::size_t n_nodes);

    BatchLabelMap erased() const;       // labels dropped, counterparts kept
    BatchLabelMap manual_only() const;  // pseudo labels dropped
};

struct LossConfig {
    double eta = 1.0;   // cross-entropy scaling
    double tau = 0.7;   // temperature
    bool use_bpcl_emb = true;
    bool use_bpcl_logit = true;
    bool use_ce = true;
    void validate() const;
};

// Supervised-contrastive objective over unit rows. Positives of point i
// are every other point with the same label plus the counterpart view;
// unlabeled points fall back to the counterpart only, which is exactly
// the InfoNCE form. When grad is non-null it receives dLoss/dP.
double contrastive_general(const Matrix& p, const BatchLabelMap& labels, double tau,
                           Matrix* grad = nullptr);

// embedding-level term: rows are normalized internally
double bpcl_emb(const Matrix& z_views, const BatchLabelMap& labels, double tau);
// logit-level term: expects rows already normalized by the head
double bpcl_logit(const Matrix& e_views, const BatchLabelMap& labels, double tau);

// Mean softmax cross-entropy over raw (un-normalized) logits. Every row
// must carry a manual label.
double ce_loss(const Matrix& raw_logits, const std::vector<int>& labels,
               Matrix* grad = nullptr);

double total_objective(double bpcl_emb_part, double bpcl_logit_part, double ce_part,
                       const LossConfig& config);

// baselines for the loss ablation
double infonce(const Matrix& z_views, double tau);
double supcon(const Matrix& z_views, const BatchLabelMap& labels, double tau);

// tape builders used by the training loop
ad::Var contrastive_op(ad::Tape& tape, ad::Var p_rows, const BatchLabelMap& labels, double tau);
ad::Var ce_op(ad::Tape& tape, ad::Var raw_logits, const std::vector<std::size_t>& rows,
              const std::vector<int>& labels);

}  // namespace openima
