#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "openima/autodiff.hpp"
#include "openima/graph.hpp"
#include "openima/matrix.hpp"
#include "openima/rng.hpp"

namespace openima {

struct GatConfig {
    int layers = 2;
    int heads = 4;
    int hidden = 32;        // concatenated output width of every layer
    int feature_dim = 0;
    int num_classes = 0;    // classification head width
    double dropout = 0.5;
    double leaky_slope = 0.2;
    bool mean_aggregation = false;  // uniform neighborhood weights instead of attention

    int head_dim() const { return hidden / heads; }
    void validate() const;
};

// Per-head attention layer: projection plus the two halves of the
// attention vector (self part pairs with the attending node, neighbor
// part with the message source).
struct HeadParams {
    Matrix w;        // in_dim x head_dim
    Matrix a_self;   // head_dim x 1
    Matrix a_neigh;  // head_dim x 1
};

struct EncoderParams {
    GatConfig config;
    std::vector<std::vector<HeadParams>> layers;  // [layer][head]
    Matrix w_head;                                // hidden x num_classes, no bias
    std::uint64_t version = 0;  // bumped on every optimizer step

    // visits every weight matrix in declaration order (layer, head, then
    // the classification head); this order defines the flat packing and
    // the checkpoint layout
    template <typename F>
    void visit(F&& f) {
        for (auto& layer : layers)
            for (auto& head : layer) {
                f(head.w);
                f(head.a_self);
                f(head.a_neigh);
            }
        f(w_head);
    }
    template <typename F>
    void visit(F&& f) const {
        for (const auto& layer : layers)
            for (const auto& head : layer) {
                f(head.w);
                f(head.a_self);
                f(head.a_neigh);
            }
        f(w_head);
    }

    std::size_t param_count() const;
    std::vector<double> pack() const;
    void unpack(const std::vector<double>& flat);
};

// Uniform +-sqrt(6/(fan_in+fan_out)) initialization.
EncoderParams init_params(const GatConfig& config, Rng& rng);
// zero-filled gradients/accumulators shaped like the given parameters
EncoderParams zeros_like(const EncoderParams& params);

// Versioned binary checkpoint: magic, version, dims, then all weights as
// little-endian 64-bit floats in declaration order.
void save_checkpoint(const EncoderParams& params, const std::string& path);
EncoderParams load_checkpoint(const std::string& path);

// Incoming-message index: per node the contiguous block of sources,
// neighbors plus self, self first then ascending neighbor ids.
struct NeighborIndex {
    std::vector<std::size_t> offsets;    // num_nodes + 1
    std::vector<std::uint32_t> sources;
};
NeighborIndex build_neighbor_index(const Graph& g);

struct ForwardTrace {
    ad::Tape tape;
    std::vector<ad::Var> param_vars;   // declaration order
    std::vector<ad::Var> attentions;   // per layer x head, slot weights
    ad::Var z;                         // embeddings exposed by this pass
    std::uint64_t params_version = 0;
};

// Full-graph pass. In training mode dropout masks are drawn from rng on
// the layer inputs and the attention weights; eval mode ignores rng and
// is a pure function of (graph, params).
ForwardTrace forward(const Graph& g, const EncoderParams& params, Rng* rng, bool training);
Matrix forward_eval(const Graph& g, const EncoderParams& params);

// Two training-mode passes with independent dropout masks; trace.z holds
// the 2|batch| interleaved rows (2t = view one of batch[t], 2t+1 = view
// two).
ForwardTrace two_views(const Graph& g, const std::vector<std::uint32_t>& batch,
                       const EncoderParams& params, Rng& rng);

// Row-normalized head output e_i = l2_norm(W^T z_i).
Matrix head_logits(const Matrix& z_rows, const Matrix& w_head,
                   std::vector<std::size_t>* degenerate = nullptr);

// Exact reverse-mode gradients of a scalar loss on the trace's tape,
// shaped like the parameters. Rejects traces taken before the last
// parameter update.
EncoderParams backward(const EncoderParams& params, ForwardTrace& trace, ad::Var loss);

}  // namespace openima
