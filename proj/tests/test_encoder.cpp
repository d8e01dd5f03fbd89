#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <unistd.h>

#include "openima/encoder.hpp"
#include "openima/finite_diff.hpp"
#include "openima/losses.hpp"

using namespace openima;

namespace {

Graph tiny_graph(std::size_t n, std::vector<std::pair<std::uint32_t, std::uint32_t>> edges,
                 int feature_dim, std::uint64_t seed) {
    Graph g;
    g.num_nodes = n;
    g.edges = std::move(edges);
    g.features = Matrix(n, feature_dim);
    Rng rng(seed);
    for (double& v : g.features.data()) v = rng.uniform(-1.0, 1.0);
    return g;
}

GatConfig small_config(int layers, int heads, int hidden, int feature_dim, int classes,
                       double dropout) {
    GatConfig c;
    c.layers = layers;
    c.heads = heads;
    c.hidden = hidden;
    c.feature_dim = feature_dim;
    c.num_classes = classes;
    c.dropout = dropout;
    return c;
}

}  // namespace

TEST_CASE("isolated node reduces to a dense layer") {
    Graph g = tiny_graph(2, {}, 3, 1);
    GatConfig cfg = small_config(1, 1, 4, 3, 2, 0.0);
    Rng rng(2);
    EncoderParams params = init_params(cfg, rng);
    Matrix z = forward_eval(g, params);

    Matrix expect = matmul(g.features, params.layers[0][0].w);
    CHECK(max_abs_diff(z, expect) < 1e-12);
}

TEST_CASE("two-node attention matches a hand computation") {
    Graph g;
    g.num_nodes = 2;
    g.edges = {{0, 1}};
    g.features = Matrix::from_rows({{1.0, 2.0}, {-1.0, 0.5}});

    GatConfig cfg = small_config(1, 1, 2, 2, 2, 0.0);
    Rng rng(0);
    EncoderParams params = init_params(cfg, rng);
    params.layers[0][0].w = Matrix::from_rows({{0.5, -0.25}, {0.1, 0.3}});
    params.layers[0][0].a_self = Matrix::from_rows({{0.2}, {-0.4}});
    params.layers[0][0].a_neigh = Matrix::from_rows({{0.7}, {0.05}});

    Matrix h = matmul(g.features, params.layers[0][0].w);  // 2x2 projections
    auto leaky = [](double x) { return x > 0 ? x : 0.2 * x; };
    auto score = [&](int i, int j) {
        double s = 0.2 * h(i, 0) - 0.4 * h(i, 1) + 0.7 * h(j, 0) + 0.05 * h(j, 1);
        return leaky(s);
    };
    // node 0 attends over {self, 1}; node 1 over {self, 0}
    double e00 = score(0, 0), e01 = score(0, 1);
    double m0 = std::max(e00, e01);
    double a00 = std::exp(e00 - m0), a01 = std::exp(e01 - m0);
    double z0 = a00 + a01;
    a00 /= z0;
    a01 /= z0;
    double e11 = score(1, 1), e10 = score(1, 0);
    double m1 = std::max(e11, e10);
    double a11 = std::exp(e11 - m1), a10 = std::exp(e10 - m1);
    double z1 = a11 + a10;
    a11 /= z1;
    a10 /= z1;

    Matrix expect(2, 2);
    for (int f = 0; f < 2; ++f) {
        expect(0, f) = a00 * h(0, f) + a01 * h(1, f);
        expect(1, f) = a11 * h(1, f) + a10 * h(0, f);
    }
    Matrix z = forward_eval(g, params);
    CHECK(max_abs_diff(z, expect) < 1e-12);
}

TEST_CASE("eval mode is deterministic") {
    Graph g = tiny_graph(6, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5}, {0, 5}}, 4, 3);
    GatConfig cfg = small_config(2, 2, 6, 4, 3, 0.5);
    Rng rng(4);
    EncoderParams params = init_params(cfg, rng);
    Matrix a = forward_eval(g, params);
    Matrix b = forward_eval(g, params);
    CHECK(a == b);
}

TEST_CASE("attention weights sum to one over each neighborhood") {
    Graph g = tiny_graph(7, {{0, 1}, {0, 2}, {1, 2}, {3, 4}, {5, 6}, {2, 5}}, 4, 5);
    GatConfig cfg = small_config(2, 2, 6, 4, 3, 0.0);
    Rng rng(6);
    EncoderParams params = init_params(cfg, rng);
    ForwardTrace trace = forward(g, params, nullptr, false);
    NeighborIndex nbr = build_neighbor_index(g);
    REQUIRE(!trace.attentions.empty());
    for (ad::Var alpha : trace.attentions) {
        const Matrix& w = trace.tape.value(alpha);
        for (std::size_t i = 0; i + 1 < nbr.offsets.size(); ++i) {
            double s = 0.0;
            for (std::size_t e = nbr.offsets[i]; e < nbr.offsets[i + 1]; ++e) s += w(e, 0);
            CHECK(std::abs(s - 1.0) < 1e-12);
        }
    }
}

TEST_CASE("two views: shape, zero-dropout identity, dropout variability") {
    Graph g = tiny_graph(8, {{0, 1}, {2, 3}, {4, 5}, {6, 7}, {1, 2}}, 4, 7);
    std::vector<std::uint32_t> batch{0, 3, 5};

    GatConfig cfg0 = small_config(1, 2, 6, 4, 3, 0.0);
    Rng rng(8);
    EncoderParams p0 = init_params(cfg0, rng);
    Rng vr(9);
    ForwardTrace t0 = two_views(g, batch, p0, vr);
    const Matrix& z = t0.tape.value(t0.z);
    CHECK(z.rows() == 2 * batch.size());
    for (std::size_t t = 0; t < batch.size(); ++t)
        for (std::size_t f = 0; f < z.cols(); ++f)
            CHECK(z(2 * t, f) == z(2 * t + 1, f));  // identical views at dropout 0

    GatConfig cfg5 = small_config(1, 2, 16, 4, 3, 0.5);
    Rng rng2(10);
    EncoderParams p5 = init_params(cfg5, rng2);
    int differing = 0;
    Rng vr2(11);
    for (int trial = 0; trial < 100; ++trial) {
        ForwardTrace t = two_views(g, batch, p5, vr2);
        const Matrix& zz = t.tape.value(t.z);
        bool diff = false;
        for (std::size_t f = 0; f < zz.cols(); ++f)
            if (zz(0, f) != zz(1, f)) diff = true;
        differing += diff ? 1 : 0;
    }
    CHECK(differing == 100);

    CHECK_THROWS_AS(two_views(g, {}, p0, vr), std::invalid_argument);
}

TEST_CASE("head_logits: identity head, scale invariance, unit rows") {
    Rng rng(12);
    Matrix z(5, 4);
    for (double& v : z.data()) v = rng.uniform(-2.0, 2.0);

    Matrix e_id = head_logits(z, Matrix::identity(4));
    CHECK(max_abs_diff(e_id, l2_normalize_rows(z)) < 1e-15);

    Matrix w(4, 3);
    for (double& v : w.data()) v = rng.uniform(-1.0, 1.0);
    Matrix e1 = head_logits(z, w);
    Matrix e2 = head_logits(z, scale(w, 3.7));
    CHECK(max_abs_diff(e1, e2) < 1e-12);
    for (std::size_t i = 0; i < e1.rows(); ++i)
        CHECK(std::abs(row_norm(e1, i) - 1.0) < 1e-12);
}

TEST_CASE("checkpoint round-trips bit-exactly and rejects bad headers") {
    GatConfig cfg = small_config(2, 2, 8, 5, 4, 0.3);
    Rng rng(13);
    EncoderParams params = init_params(cfg, rng);
    std::string path = (std::filesystem::temp_directory_path() /
                        ("ckpt_" + std::to_string(::getpid()) + ".bin"))
                           .string();
    save_checkpoint(params, path);
    EncoderParams loaded = load_checkpoint(path);
    CHECK(loaded.pack() == params.pack());
    CHECK(loaded.config.layers == cfg.layers);
    CHECK(loaded.config.dropout == cfg.dropout);

    {
        std::ofstream out(path, std::ios::binary);
        out << "JUNKDATA";
    }
    CHECK_THROWS_WITH_AS(load_checkpoint(path), doctest::Contains("magic"),
                         std::runtime_error);
    std::filesystem::remove(path);
}

TEST_CASE("mean aggregation flag averages the neighborhood") {
    Graph g = tiny_graph(3, {{0, 1}, {0, 2}}, 3, 14);
    GatConfig cfg = small_config(1, 1, 4, 3, 2, 0.0);
    cfg.mean_aggregation = true;
    Rng rng(15);
    EncoderParams params = init_params(cfg, rng);
    Matrix h = matmul(g.features, params.layers[0][0].w);
    Matrix z = forward_eval(g, params);
    for (int f = 0; f < 4; ++f) {
        CHECK(z(0, f) == doctest::Approx((h(0, f) + h(1, f) + h(2, f)) / 3.0));
        CHECK(z(1, f) == doctest::Approx((h(1, f) + h(0, f)) / 2.0));
    }
}

// ---------------------------------------------------------------------------
// gradient certification
// ---------------------------------------------------------------------------

namespace {

enum class LossKind { CeOnly, EmbOnly, LogitOnly, Full };

// deterministic loss of the flat parameter vector; dropout masks are
// replayed from a fixed stream so the function is smooth in the params
double loss_of_params(const Graph& g,
                      const EncoderParams& shape, const std::vector<double>& flat,
                      const std::vector<std::uint32_t>& batch, const BatchLabelMap& map,
                      const std::vector<std::size_t>& manual_rows,
                      const std::vector<int>& manual_labels, LossKind kind, double eta,
                      double tau, ad::Var* loss_out = nullptr, ForwardTrace* trace_out = nullptr,
                      EncoderParams* params_out = nullptr) {
    EncoderParams params = shape;
    params.unpack(flat);
    Rng rng(777);
    ForwardTrace trace = two_views(g, batch, params, rng);
    ad::Tape& tape = trace.tape;
    ad::Var w_head_var = trace.param_vars.back();

    ad::Var total;
    switch (kind) {
        case LossKind::CeOnly: {
            ad::Var logits = tape.matmul(trace.z, w_head_var);
            total = ce_op(tape, logits, manual_rows, manual_labels);
            break;
        }
        case LossKind::EmbOnly: {
            ad::Var p = tape.l2_normalize_rows(trace.z);
            total = contrastive_op(tape, p, map, tau);
            break;
        }
        case LossKind::LogitOnly: {
            ad::Var logits = tape.matmul(trace.z, w_head_var);
            ad::Var e = tape.l2_normalize_rows(logits);
            total = contrastive_op(tape, e, map, tau);
            break;
        }
        case LossKind::Full: {
            ad::Var p = tape.l2_normalize_rows(trace.z);
            ad::Var emb = contrastive_op(tape, p, map, tau);
            ad::Var logits = tape.matmul(trace.z, w_head_var);
            ad::Var e = tape.l2_normalize_rows(logits);
            ad::Var logit = contrastive_op(tape, e, map, tau);
            ad::Var ce = ce_op(tape, logits, manual_rows, manual_labels);
            total = tape.add_scaled(tape.add(emb, logit), ce, 1.0, eta);
            break;
        }
    }
    double value = tape.value(total)(0, 0);
    if (loss_out) *loss_out = total;
    if (trace_out) *trace_out = std::move(trace);
    if (params_out) *params_out = std::move(params);
    return value;
}

double max_rel_error(const std::vector<double>& analytic, const std::vector<double>& fd) {
    double worst = 0.0;
    for (std::size_t i = 0; i < analytic.size(); ++i) {
        double denom = std::max({std::abs(analytic[i]), std::abs(fd[i]), 1e-6});
        worst = std::max(worst, std::abs(analytic[i] - fd[i]) / denom);
    }
    return worst;
}

void certify(LossKind kind, double dropout) {
    Graph g = tiny_graph(8, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5}, {5, 6}, {6, 7}, {0, 4}},
                         5, 100);
    GatConfig cfg = small_config(1, 2, 6, 5, 4, dropout);
    Rng rng(101);
    EncoderParams params = init_params(cfg, rng);

    std::vector<std::uint32_t> batch(8);
    for (std::size_t i = 0; i < 8; ++i) batch[i] = static_cast<std::uint32_t>(i);

    // labels: two manual classes, one pseudo (possibly novel), rest none
    std::vector<int> node_label{0, 0, 1, -1, 2, -1, 3, 1};
    std::vector<Provenance> node_prov{
        Provenance::Manual, Provenance::Manual, Provenance::Manual, Provenance::None,
        Provenance::Pseudo, Provenance::None,   Provenance::Pseudo, Provenance::Manual};
    BatchLabelMap map = BatchLabelMap::interleaved(node_label, node_prov);
    std::vector<std::size_t> manual_rows;
    std::vector<int> manual_labels;
    for (std::size_t t = 0; t < node_label.size(); ++t) {
        if (node_prov[t] != Provenance::Manual) continue;
        manual_rows.push_back(2 * t);
        manual_rows.push_back(2 * t + 1);
        manual_labels.push_back(node_label[t]);
        manual_labels.push_back(node_label[t]);
    }

    const double eta = 1.0, tau = 0.7;
    std::vector<double> flat = params.pack();

    ad::Var loss_var;
    ForwardTrace trace;
    EncoderParams eval_params;
    loss_of_params(g, params, flat, batch, map, manual_rows, manual_labels, kind, eta,
                   tau, &loss_var, &trace, &eval_params);
    EncoderParams grads = backward(eval_params, trace, loss_var);
    std::vector<double> analytic = grads.pack();

    auto f = [&](const std::vector<double>& p) {
        return loss_of_params(g, params, p, batch, map, manual_rows, manual_labels,
                              kind, eta, tau);
    };
    std::vector<double> fd = finite_diff_grad(f, flat, 1e-5);
    CHECK(max_rel_error(analytic, fd) < 1e-4);
}

}  // namespace

TEST_CASE("gradient check: cross-entropy only") { certify(LossKind::CeOnly, 0.0); }
TEST_CASE("gradient check: embedding contrastive only") { certify(LossKind::EmbOnly, 0.0); }
TEST_CASE("gradient check: logit contrastive only") { certify(LossKind::LogitOnly, 0.0); }
TEST_CASE("gradient check: full objective") { certify(LossKind::Full, 0.0); }
TEST_CASE("gradient check: full objective with frozen dropout masks") {
    certify(LossKind::Full, 0.3);
}

TEST_CASE("zero-weighted loss gives zero gradients") {
    Graph g = tiny_graph(4, {{0, 1}, {2, 3}}, 3, 20);
    GatConfig cfg = small_config(1, 1, 4, 3, 2, 0.0);
    Rng rng(21);
    EncoderParams params = init_params(cfg, rng);
    Rng vr(22);
    ForwardTrace trace = two_views(g, {0, 1, 2, 3}, params, vr);
    ad::Var p = trace.tape.l2_normalize_rows(trace.z);
    ad::Var loss = contrastive_op(trace.tape, p, BatchLabelMap::unlabeled_pairs(4), 0.7);
    ad::Var zero = trace.tape.scale(loss, 0.0);
    EncoderParams grads = backward(params, trace, zero);
    for (double v : grads.pack()) CHECK(v == 0.0);
}

TEST_CASE("gradients are deterministic for a fixed seed") {
    Graph g = tiny_graph(5, {{0, 1}, {1, 2}, {3, 4}}, 3, 23);
    GatConfig cfg = small_config(1, 2, 4, 3, 2, 0.5);
    Rng rng(24);
    EncoderParams params = init_params(cfg, rng);
    auto run = [&]() {
        Rng vr(25);
        ForwardTrace trace = two_views(g, {0, 2, 4}, params, vr);
        ad::Var p = trace.tape.l2_normalize_rows(trace.z);
        ad::Var loss = contrastive_op(trace.tape, p, BatchLabelMap::unlabeled_pairs(3), 0.7);
        return backward(params, trace, loss).pack();
    };
    CHECK(run() == run());
}

TEST_CASE("stale trace is rejected") {
    Graph g = tiny_graph(4, {{0, 1}}, 3, 26);
    GatConfig cfg = small_config(1, 1, 4, 3, 2, 0.0);
    Rng rng(27);
    EncoderParams params = init_params(cfg, rng);
    Rng vr(28);
    ForwardTrace trace = two_views(g, {0, 1}, params, vr);
    ad::Var p = trace.tape.l2_normalize_rows(trace.z);
    ad::Var loss = contrastive_op(trace.tape, p, BatchLabelMap::unlabeled_pairs(2), 0.7);
    params.version += 1;  // simulate an optimizer step
    CHECK_THROWS_WITH_AS(backward(params, trace, loss), doctest::Contains("stale"),
                         std::runtime_error);
}
