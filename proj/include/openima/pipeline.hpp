#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "openima/alignment.hpp"
#include "openima/config.hpp"
#include "openima/encoder.hpp"
#include "openima/graph.hpp"
#include "openima/metrics.hpp"

namespace openima {

// Graph + split with the label bookkeeping the trainer needs: compact
// class ids (seen classes first, then novel), per-node role masks, and
// the total cluster count.
struct DataBundle {
    Graph graph;
    OpenWorldSplit split;
    int n_seen = 0;
    int n_classes = 0;
    int k_total = 0;                 // seen + configured novel count
    std::vector<int> compact_label;  // per node
    std::vector<int> manual_label;   // compact label on labeled nodes, else -1
    std::vector<bool> is_labeled, is_val, is_test;
};

DataBundle prepare_data(const ExperimentConfig& config);

struct TrainResult {
    EncoderParams params;
    std::vector<MetricsRecord> history;  // one record per epoch
    MetricsRecord final_record;          // epoch == -1
};

// The transductive training loop: per epoch refresh (eval-mode forward,
// K-Means, alignment, pseudo-label selection), then two-view batches with
// Adam updates of the selected objective, then an epoch-end evaluation.
TrainResult run_training(const ExperimentConfig& config, const DataBundle& data);
TrainResult run_training(const ExperimentConfig& config);

std::string metrics_to_jsonl(const TrainResult& result);
void write_metrics_jsonl(const TrainResult& result, const std::string& path);

struct InferenceResult {
    std::vector<int> predicted;  // per node, compact class ids
    std::vector<int> clusters;   // raw cluster ids
    GroupAccuracy accuracy;      // test-set protocol accuracy
};

InferenceResult run_inference(const EncoderParams& params, const DataBundle& data,
                              int k_total, std::uint64_t seed);
// unlabeled nodes only, lines node_id,predicted_class
void write_predictions_csv(const InferenceResult& result, const DataBundle& data,
                           const std::string& path);

struct SweepCandidate {
    double eta = 1.0;
    double tau = 0.7;
    double rho = 75.0;
    double learning_rate = 1e-3;
    bool operator==(const SweepCandidate&) const = default;
};

struct SweepOutcome {
    std::vector<SweepCandidate> grid;
    std::vector<MetricsRecord> finals;  // per candidate, sc_acc_score filled
    std::size_t selected = 0;
};

// Model selection rule shared by the sweep: argmax of the sc_acc score,
// ties resolved toward the earlier candidate.
std::size_t select_candidate(const std::vector<std::pair<double, double>>& sc_and_acc);

SweepOutcome run_sweep(const ExperimentConfig& base, const std::vector<SweepCandidate>& grid,
                       const DataBundle& data);
void write_sweep_csv(const SweepOutcome& outcome, const std::string& path);

struct EstimateOutcome {
    int novel_count = 0;
    std::vector<std::pair<int, double>> silhouettes;  // candidate -> score
};

// Novel-class-count estimation: cluster representations learned by an
// unsupervised-only run at K = n_seen + c over the candidate range and
// keep the silhouette argmax (ties toward the smaller count).
EstimateOutcome estimate_novel_count(const ExperimentConfig& config, const DataBundle& data,
                                     int k_min = 1, int k_max = 10);
void write_estimate_csv(const EstimateOutcome& outcome, const std::string& path);

struct AblationRow {
    std::string variant;
    double imbalance_rate = 0.0;
    double separation_rate = 0.0;
    double acc_seen = 0.0;
    double acc_novel = 0.0;
    double acc_all = 0.0;  // kept for trend checks, not part of the table
};

// Mean final metrics per seed for one loss variant.
AblationRow mean_variant_stats(const ExperimentConfig& base, Variant variant,
                               const std::vector<std::uint64_t>& seeds);

// The four-row loss ablation table (unsupervised CL, + supervised CL,
// + cross-entropy, full method), averaged over the given seeds.
std::vector<AblationRow> run_ablation(const ExperimentConfig& base,
                                      const std::vector<std::uint64_t>& seeds);
void write_ablation_csv(const std::vector<AblationRow>& rows, const std::string& path);

}  // namespace openima
