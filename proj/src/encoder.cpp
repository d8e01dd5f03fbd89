#include "openima/encoder.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace openima {

void GatConfig::validate() const {
    if (layers < 1 || layers > 2)
        throw std::invalid_argument("encoder: layers must be 1 or 2");
    if (heads < 1) throw std::invalid_argument("encoder: heads must be >= 1");
    if (hidden < 1 || hidden % heads != 0)
        throw std::invalid_argument("encoder: hidden must be a positive multiple of heads");
    if (feature_dim < 1) throw std::invalid_argument("encoder: feature_dim must be >= 1");
    if (num_classes < 1) throw std::invalid_argument("encoder: num_classes must be >= 1");
    if (dropout < 0.0 || dropout >= 1.0)
        throw std::invalid_argument("encoder: dropout must be in [0, 1)");
}

std::size_t EncoderParams::param_count() const {
    std::size_t n = 0;
    visit([&](const Matrix& m) { n += m.data().size(); });
    return n;
}

std::vector<double> EncoderParams::pack() const {
    std::vector<double> flat;
    flat.reserve(param_count());
    visit([&](const Matrix& m) {
        flat.insert(flat.end(), m.data().begin(), m.data().end());
    });
    return flat;
}

void EncoderParams::unpack(const std::vector<double>& flat) {
    if (flat.size() != param_count())
        throw std::invalid_argument("encoder: flat parameter size mismatch");
    std::size_t off = 0;
    visit([&](Matrix& m) {
        std::copy(flat.begin() + off, flat.begin() + off + m.data().size(), m.data().begin());
        off += m.data().size();
    });
}

EncoderParams init_params(const GatConfig& config, Rng& rng) {
    config.validate();
    EncoderParams p;
    p.config = config;
    int hd = config.head_dim();
    for (int l = 0; l < config.layers; ++l) {
        int in_dim = l == 0 ? config.feature_dim : config.hidden;
        std::vector<HeadParams> heads;
        for (int h = 0; h < config.heads; ++h) {
            HeadParams head;
            head.w = Matrix(in_dim, hd);
            double limit = std::sqrt(6.0 / (in_dim + hd));
            for (double& v : head.w.data()) v = rng.uniform(-limit, limit);
            double alimit = std::sqrt(6.0 / (2 * hd + 1));
            head.a_self = Matrix(hd, 1);
            head.a_neigh = Matrix(hd, 1);
            for (double& v : head.a_self.data()) v = rng.uniform(-alimit, alimit);
            for (double& v : head.a_neigh.data()) v = rng.uniform(-alimit, alimit);
            heads.push_back(std::move(head));
        }
        p.layers.push_back(std::move(heads));
    }
    p.w_head = Matrix(config.hidden, config.num_classes);
    double limit = std::sqrt(6.0 / (config.hidden + config.num_classes));
    for (double& v : p.w_head.data()) v = rng.uniform(-limit, limit);
    return p;
}

EncoderParams zeros_like(const EncoderParams& params) {
    EncoderParams g = params;
    g.version = 0;
    g.visit([](Matrix& m) { std::fill(m.data().begin(), m.data().end(), 0.0); });
    return g;
}

namespace {

constexpr char kMagic[4] = {'O', 'I', 'M', 'A'};
constexpr std::uint32_t kCheckpointVersion = 1;

void put_u32(std::ofstream& out, std::uint32_t v) {
    char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out.write(b, 4);
}

std::uint32_t get_u32(std::ifstream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in) throw std::runtime_error("checkpoint: truncated header");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
}

void put_f64(std::ofstream& out, double v) {
    std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
    char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((bits >> (8 * i)) & 0xff);
    out.write(b, 8);
}

double get_f64(std::ifstream& in) {
    unsigned char b[8];
    in.read(reinterpret_cast<char*>(b), 8);
    if (!in) throw std::runtime_error("checkpoint: truncated weights");
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return std::bit_cast<double>(bits);
}

}  // namespace

void save_checkpoint(const EncoderParams& params, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("checkpoint: cannot write " + path);
    out.write(kMagic, 4);
    put_u32(out, kCheckpointVersion);
    put_u32(out, static_cast<std::uint32_t>(params.config.layers));
    put_u32(out, static_cast<std::uint32_t>(params.config.heads));
    put_u32(out, static_cast<std::uint32_t>(params.config.hidden));
    put_u32(out, static_cast<std::uint32_t>(params.config.feature_dim));
    put_u32(out, static_cast<std::uint32_t>(params.config.num_classes));
    put_u32(out, params.config.mean_aggregation ? 1 : 0);
    put_f64(out, params.config.dropout);
    put_f64(out, params.config.leaky_slope);
    params.visit([&](const Matrix& m) {
        for (double v : m.data()) put_f64(out, v);
    });
    if (!out) throw std::runtime_error("checkpoint: write failed for " + path);
}

EncoderParams load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("checkpoint: cannot read " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0)
        throw std::runtime_error("checkpoint: bad magic in " + path);
    std::uint32_t version = get_u32(in);
    if (version != kCheckpointVersion)
        throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version));
    GatConfig config;
    config.layers = static_cast<int>(get_u32(in));
    config.heads = static_cast<int>(get_u32(in));
    config.hidden = static_cast<int>(get_u32(in));
    config.feature_dim = static_cast<int>(get_u32(in));
    config.num_classes = static_cast<int>(get_u32(in));
    config.mean_aggregation = get_u32(in) != 0;
    config.dropout = get_f64(in);
    config.leaky_slope = get_f64(in);
    Rng scratch(0);
    EncoderParams params = init_params(config, scratch);
    params.visit([&](Matrix& m) {
        for (double& v : m.data()) v = get_f64(in);
    });
    return params;
}

NeighborIndex build_neighbor_index(const Graph& g) {
    auto adj = g.adjacency();
    NeighborIndex idx;
    idx.offsets.resize(g.num_nodes + 1, 0);
    for (std::size_t i = 0; i < g.num_nodes; ++i)
        idx.offsets[i + 1] = idx.offsets[i] + adj[i].size() + 1;  // +1 for self
    idx.sources.reserve(idx.offsets.back());
    for (std::size_t i = 0; i < g.num_nodes; ++i) {
        idx.sources.push_back(static_cast<std::uint32_t>(i));
        for (auto j : adj[i]) idx.sources.push_back(j);
    }
    return idx;
}

namespace {

struct ParamVarIndex {
    std::vector<std::vector<std::array<ad::Var, 3>>> heads;  // [layer][head] = {w, a_self, a_neigh}
    ad::Var w_head;
};

ParamVarIndex make_param_vars(ad::Tape& tape, const EncoderParams& params,
                              std::vector<ad::Var>& flat) {
    ParamVarIndex idx;
    for (const auto& layer : params.layers) {
        std::vector<std::array<ad::Var, 3>> row;
        for (const auto& head : layer) {
            ad::Var w = tape.leaf(head.w);
            ad::Var as = tape.leaf(head.a_self);
            ad::Var an = tape.leaf(head.a_neigh);
            flat.push_back(w);
            flat.push_back(as);
            flat.push_back(an);
            row.push_back({w, as, an});
        }
        idx.heads.push_back(std::move(row));
    }
    idx.w_head = tape.leaf(params.w_head);
    flat.push_back(idx.w_head);
    return idx;
}

Matrix dropout_mask(std::size_t rows, std::size_t cols, double rate, Rng& rng) {
    Matrix mask(rows, cols);
    double keep = 1.0 - rate;
    double scale = 1.0 / keep;
    for (double& v : mask.data()) v = rng.bernoulli(keep) ? scale : 0.0;
    return mask;
}

// One full pass over the graph; returns the final-layer embedding var.
ad::Var build_view(ad::Tape& tape, const Graph& g, const NeighborIndex& nbr,
                   const ParamVarIndex& pv, const GatConfig& config, Rng* rng,
                   bool training, std::vector<ad::Var>* attentions) {
    bool use_dropout = training && config.dropout > 0.0;
    if (use_dropout && rng == nullptr)
        throw std::invalid_argument("encoder: training-mode dropout needs an rng");

    ad::Var x = tape.constant(g.features);
    for (int l = 0; l < config.layers; ++l) {
        if (use_dropout)
            x = tape.mul_elem(x, dropout_mask(tape.value(x).rows(), tape.value(x).cols(),
                                              config.dropout, *rng));
        std::vector<ad::Var> head_outs;
        for (int h = 0; h < config.heads; ++h) {
            ad::Var proj = tape.matmul(x, pv.heads[l][h][0]);
            ad::Var alpha;
            if (config.mean_aggregation) {
                Matrix uniform(nbr.sources.size(), 1);
                for (std::size_t i = 0; i + 1 < nbr.offsets.size(); ++i) {
                    double w = 1.0 / static_cast<double>(nbr.offsets[i + 1] - nbr.offsets[i]);
                    for (std::size_t e = nbr.offsets[i]; e < nbr.offsets[i + 1]; ++e)
                        uniform(e, 0) = w;
                }
                alpha = tape.constant(std::move(uniform));
            } else {
                ad::Var scores = tape.edge_scores(proj, pv.heads[l][h][1], pv.heads[l][h][2],
                                                  nbr.offsets, nbr.sources);
                scores = tape.leaky_relu(scores, config.leaky_slope);
                alpha = tape.segment_softmax(scores, nbr.offsets);
            }
            if (attentions) attentions->push_back(alpha);
            if (use_dropout)
                alpha = tape.mul_elem(alpha, dropout_mask(nbr.sources.size(), 1,
                                                          config.dropout, *rng));
            head_outs.push_back(tape.segment_weighted_sum(alpha, proj, nbr.offsets,
                                                          nbr.sources));
        }
        x = head_outs.size() > 1 ? tape.concat_cols(head_outs) : head_outs[0];
        if (l + 1 < config.layers) x = tape.elu(x);
    }
    return x;
}

}  // namespace

ForwardTrace forward(const Graph& g, const EncoderParams& params, Rng* rng, bool training) {
    params.config.validate();
    if (static_cast<int>(g.feature_dim()) != params.config.feature_dim)
        throw std::invalid_argument("encoder: graph feature dim " +
                                    std::to_string(g.feature_dim()) + " != configured " +
                                    std::to_string(params.config.feature_dim));
    NeighborIndex nbr = build_neighbor_index(g);
    ForwardTrace trace;
    trace.params_version = params.version;
    ParamVarIndex pv = make_param_vars(trace.tape, params, trace.param_vars);
    trace.z = build_view(trace.tape, g, nbr, pv, params.config, rng, training,
                         &trace.attentions);
    return trace;
}

Matrix forward_eval(const Graph& g, const EncoderParams& params) {
    ForwardTrace t = forward(g, params, nullptr, false);
    return t.tape.value(t.z);
}

ForwardTrace two_views(const Graph& g, const std::vector<std::uint32_t>& batch,
                       const EncoderParams& params, Rng& rng) {
    if (batch.empty()) throw std::invalid_argument("two_views: empty batch");
    params.config.validate();
    if (static_cast<int>(g.feature_dim()) != params.config.feature_dim)
        throw std::invalid_argument("encoder: graph feature dim mismatch");
    for (auto n : batch)
        if (n >= g.num_nodes) throw std::invalid_argument("two_views: node id out of range");

    NeighborIndex nbr = build_neighbor_index(g);
    ForwardTrace trace;
    trace.params_version = params.version;
    ParamVarIndex pv = make_param_vars(trace.tape, params, trace.param_vars);
    ad::Var z1 = build_view(trace.tape, g, nbr, pv, params.config, &rng, true,
                            &trace.attentions);
    ad::Var z2 = build_view(trace.tape, g, nbr, pv, params.config, &rng, true,
                            &trace.attentions);

    std::vector<std::size_t> rows(batch.begin(), batch.end());
    ad::Var g1 = trace.tape.gather_rows(z1, rows);
    ad::Var g2 = trace.tape.gather_rows(z2, rows);
    ad::Var cat = trace.tape.concat_rows(g1, g2);
    std::vector<std::size_t> interleave(2 * batch.size());
    for (std::size_t t = 0; t < batch.size(); ++t) {
        interleave[2 * t] = t;
        interleave[2 * t + 1] = batch.size() + t;
    }
    trace.z = trace.tape.gather_rows(cat, interleave);
    return trace;
}

Matrix head_logits(const Matrix& z_rows, const Matrix& w_head,
                   std::vector<std::size_t>* degenerate) {
    return l2_normalize_rows(matmul(z_rows, w_head), 1e-12, degenerate);
}

EncoderParams backward(const EncoderParams& params, ForwardTrace& trace, ad::Var loss) {
    if (trace.params_version != params.version)
        throw std::runtime_error("encoder backward: stale trace (parameters were updated "
                                 "after the forward pass)");
    trace.tape.backward(loss);
    EncoderParams grads = zeros_like(params);
    std::size_t i = 0;
    grads.visit([&](Matrix& m) {
        ad::Var v = trace.param_vars[i++];
        if (trace.tape.has_grad(v)) m = trace.tape.grad(v);
    });
    return grads;
}

}  // namespace openima
