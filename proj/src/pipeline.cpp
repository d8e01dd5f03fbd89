#include "openima/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "openima/clustering.hpp"
#include "openima/losses.hpp"
#include "openima/pseudolabel.hpp"

namespace openima {

namespace {

// RNG stream ids; every consumer reconstructs its stream from (seed,
// stream) so reruns and concurrent jobs are reproducible.
constexpr std::uint64_t kStreamData = 2;
constexpr std::uint64_t kStreamSplit = 3;
constexpr std::uint64_t kStreamInit = 4;
constexpr std::uint64_t kStreamRefresh = 0x10000;
constexpr std::uint64_t kStreamEval = 0x20000;
constexpr std::uint64_t kStreamEpoch = 0x30000;
constexpr std::uint64_t kStreamInfer = 0x40000;
constexpr std::uint64_t kStreamEstimate = 0x50000;

KMeansConfig pipeline_kmeans() {
    KMeansConfig cfg;  // spec'd defaults
    return cfg;
}

}  // namespace

DataBundle prepare_data(const ExperimentConfig& config) {
    config.validate();
    DataBundle data;
    if (config.use_sbm) {
        Rng rng(config.data_seed, kStreamData);
        data.graph = generate_sbm(config.sbm, rng);
    } else {
        data.graph = load_graph(config.edges_path, config.features_path, config.labels_path);
        if (!data.graph.has_labels())
            throw ConfigError("file dataset must provide labels for the split protocol");
    }

    Rng split_rng(config.seed, kStreamSplit);
    data.split = make_open_world_split(data.graph, split_rng, config.seen_fraction,
                                       config.labeled_per_class, config.val_per_class);

    data.n_seen = static_cast<int>(data.split.seen_classes.size());
    data.n_classes = data.n_seen + static_cast<int>(data.split.novel_classes.size());

    int novel = config.novel_count > 0
                    ? config.novel_count
                    : static_cast<int>(data.split.novel_classes.size());
    if (novel < 1)
        throw ConfigError("cluster count must exceed the seen class count; set novel_count");
    data.k_total = data.n_seen + novel;

    // compact ids: seen classes first (ascending), then novel (ascending)
    std::vector<int> remap;
    remap = data.split.seen_classes;
    remap.insert(remap.end(), data.split.novel_classes.begin(), data.split.novel_classes.end());
    auto compact_of = [&](int original) {
        for (std::size_t i = 0; i < remap.size(); ++i)
            if (remap[i] == original) return static_cast<int>(i);
        throw std::logic_error("prepare_data: label outside the split's class set");
    };

    std::size_t n = data.graph.num_nodes;
    data.compact_label.resize(n);
    for (std::size_t i = 0; i < n; ++i) data.compact_label[i] = compact_of(data.graph.labels[i]);

    data.is_labeled.assign(n, false);
    data.is_val.assign(n, false);
    data.is_test.assign(n, false);
    for (auto v : data.split.labeled) data.is_labeled[v] = true;
    for (auto v : data.split.validation) data.is_val[v] = true;
    for (auto v : data.split.test) data.is_test[v] = true;

    data.manual_label.assign(n, -1);
    for (auto v : data.split.labeled) data.manual_label[v] = data.compact_label[v];
    return data;
}

namespace {

struct AdamState {
    std::vector<double> m, v;
    long t = 0;
};

void adam_step(EncoderParams& params, const EncoderParams& grads, AdamState& state,
               double lr, double weight_decay) {
    constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    std::vector<double> theta = params.pack();
    std::vector<double> g = grads.pack();
    if (state.m.empty()) {
        state.m.assign(theta.size(), 0.0);
        state.v.assign(theta.size(), 0.0);
    }
    state.t += 1;
    double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.t));
    double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.t));
    for (std::size_t i = 0; i < theta.size(); ++i) {
        double gi = g[i] + weight_decay * theta[i];
        state.m[i] = beta1 * state.m[i] + (1.0 - beta1) * gi;
        state.v[i] = beta2 * state.v[i] + (1.0 - beta2) * gi * gi;
        double mhat = state.m[i] / bc1;
        double vhat = state.v[i] / bc2;
        theta[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
    params.unpack(theta);
    params.version += 1;
}

struct RefreshState {
    ClusterModel model;
    ClassAlignment alignment;
    std::vector<int> pseudo;  // per node, compact class id or -1
};

RefreshState refresh_clustering(const ExperimentConfig& config, const DataBundle& data,
                                const EncoderParams& params, int epoch) {
    Matrix z = forward_eval(data.graph, params);
    Rng rng(config.seed, kStreamRefresh + static_cast<std::uint64_t>(epoch));
    RefreshState state;
    state.model = kmeans_fit(z, data.k_total, pipeline_kmeans(), rng);

    std::vector<int> clusters_l, labels_l;
    for (auto v : data.split.labeled) {
        clusters_l.push_back(state.model.assignments[v]);
        labels_l.push_back(data.manual_label[v]);
    }
    state.alignment = fit_alignment(clusters_l, labels_l, data.k_total, data.n_seen);

    PseudoLabelSet set =
        select_pseudo(state.model, state.alignment, data.is_labeled, config.rho, epoch);
    state.pseudo.assign(data.graph.num_nodes, -1);
    for (const auto& [node, cls] : set.entries) state.pseudo[node] = cls;
    return state;
}

// Epoch-end snapshot: protocol accuracy on test, validation clustering
// accuracy, variance metrics over test embeddings, silhouette over the
// transductive pool.
MetricsRecord evaluate_model(const ExperimentConfig& config, const DataBundle& data,
                             const EncoderParams& params, int epoch_tag,
                             std::uint64_t stream) {
    Matrix z = forward_eval(data.graph, params);
    Rng rng(config.seed, stream);
    ClusterModel model = kmeans_fit(z, data.k_total, pipeline_kmeans(), rng);

    MetricsRecord rec;
    rec.epoch = epoch_tag;

    {
        std::vector<int> y, c;
        std::vector<bool> seen;
        for (auto v : data.split.test) {
            y.push_back(data.compact_label[v]);
            c.push_back(model.assignments[v]);
            seen.push_back(data.compact_label[v] < data.n_seen);
        }
        GroupAccuracy acc = eval_accuracy(y, c, seen, data.n_classes, data.k_total);
        rec.acc_all = acc.all;
        rec.acc_seen = acc.seen;
        rec.acc_novel = acc.novel;
    }
    {
        std::vector<int> y, c;
        std::vector<bool> seen;
        for (auto v : data.split.validation) {
            y.push_back(data.compact_label[v]);
            c.push_back(model.assignments[v]);
            seen.push_back(true);
        }
        rec.val_acc =
            y.empty() ? 0.0 : eval_accuracy(y, c, seen, data.n_classes, data.k_total).all;
    }
    {
        Matrix z_test(data.split.test.size(), z.cols());
        std::vector<int> labels_test(data.split.test.size());
        for (std::size_t i = 0; i < data.split.test.size(); ++i) {
            auto v = data.split.test[i];
            for (std::size_t f = 0; f < z.cols(); ++f) z_test(i, f) = z(v, f);
            labels_test[i] = data.compact_label[v];
        }
        auto stats = class_stats(z_test, labels_test);
        std::vector<ClassStats> seen_stats, novel_stats;
        for (auto& s : stats)
            (s.class_id < data.n_seen ? seen_stats : novel_stats).push_back(s);
        rec.imbalance_rate = imbalance_rate(seen_stats, novel_stats);
        rec.separation_rate = separation_rate(seen_stats, novel_stats);
    }
    {
        std::vector<std::uint32_t> pool;
        pool.insert(pool.end(), data.split.validation.begin(), data.split.validation.end());
        pool.insert(pool.end(), data.split.test.begin(), data.split.test.end());
        std::sort(pool.begin(), pool.end());
        Matrix z_pool(pool.size(), z.cols());
        std::vector<int> label_pool(pool.size());
        for (std::size_t i = 0; i < pool.size(); ++i) {
            for (std::size_t f = 0; f < z.cols(); ++f) z_pool(i, f) = z(pool[i], f);
            label_pool[i] = model.assignments[pool[i]];
        }
        rec.sc = silhouette(z_pool, label_pool);
    }
    return rec;
}

ad::Var build_objective(ad::Tape& tape, ad::Var z2n, ad::Var w_head_var,
                        const BatchLabelMap& map, const std::vector<std::size_t>& manual_rows,
                        const std::vector<int>& manual_labels, const ExperimentConfig& config) {
    LossConfig lc;
    lc.eta = config.eta;
    lc.tau = config.tau;

    ad::Var p = tape.l2_normalize_rows(z2n);
    auto ce_term = [&]() -> ad::Var {
        ad::Var logits = tape.matmul(z2n, w_head_var);
        if (manual_rows.empty()) return tape.constant(Matrix(1, 1, 0.0));
        return ce_op(tape, logits, manual_rows, manual_labels);
    };

    switch (config.variant) {
        case Variant::OpenIMA: {
            ad::Var emb = contrastive_op(tape, p, map, lc.tau);
            ad::Var logits = tape.matmul(z2n, w_head_var);
            ad::Var e = tape.l2_normalize_rows(logits);
            ad::Var logit = contrastive_op(tape, e, map, lc.tau);
            ad::Var bpcl = tape.add(emb, logit);
            if (manual_rows.empty()) return bpcl;
            ad::Var ce = ce_op(tape, logits, manual_rows, manual_labels);
            return tape.add_scaled(bpcl, ce, 1.0, lc.eta);
        }
        case Variant::InfoNCE:
            return contrastive_op(tape, p, map.erased(), lc.tau);
        case Variant::InfoNCESupCon: {
            ad::Var nce = contrastive_op(tape, p, map.erased(), lc.tau);
            ad::Var sup = contrastive_op(tape, p, map.manual_only(), lc.tau);
            return tape.add(nce, sup);
        }
        case Variant::InfoNCESupConCE: {
            ad::Var nce = contrastive_op(tape, p, map.erased(), lc.tau);
            ad::Var sup = contrastive_op(tape, p, map.manual_only(), lc.tau);
            return tape.add_scaled(tape.add(nce, sup), ce_term(), 1.0, lc.eta);
        }
        case Variant::CEOnly:
            return ce_term();
    }
    throw std::logic_error("build_objective: unhandled variant");
}

}  // namespace

TrainResult run_training(const ExperimentConfig& config, const DataBundle& data) {
    config.validate();

    GatConfig gc;
    gc.layers = config.layers;
    gc.heads = config.heads;
    gc.hidden = config.hidden;
    gc.feature_dim = static_cast<int>(data.graph.feature_dim());
    gc.num_classes = data.k_total;
    gc.dropout = config.dropout;
    gc.mean_aggregation = config.mean_aggregation;

    Rng init_rng(config.seed, kStreamInit);
    TrainResult result;
    result.params = init_params(gc, init_rng);

    const bool needs_pseudo = config.variant == Variant::OpenIMA;
    AdamState adam;
    RefreshState refresh;
    refresh.pseudo.assign(data.graph.num_nodes, -1);

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        if (needs_pseudo && epoch % config.refresh_period == 0)
            refresh = refresh_clustering(config, data, result.params, epoch);

        Rng ernG(config.seed, kStreamEpoch + static_cast<std::uint64_t>(epoch));
        std::vector<std::uint32_t> order(data.graph.num_nodes);
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<std::uint32_t>(i);
        ernG.shuffle(order);

        const std::size_t bs = static_cast<std::size_t>(config.batch_size);
        std::size_t n_batches = (order.size() + bs - 1) / bs;
        for (std::size_t b = 0; b < n_batches; ++b) {
            std::size_t lo = b * bs;
            std::size_t hi = std::min(order.size(), lo + bs);
            std::vector<std::uint32_t> batch(order.begin() + lo, order.begin() + hi);

            ForwardTrace trace = two_views(data.graph, batch, result.params, ernG);

            std::vector<int> node_label(batch.size(), -1);
            std::vector<Provenance> node_prov(batch.size(), Provenance::None);
            std::vector<std::size_t> manual_rows;
            std::vector<int> manual_labels;
            for (std::size_t t = 0; t < batch.size(); ++t) {
                auto v = batch[t];
                if (data.manual_label[v] >= 0) {
                    node_label[t] = data.manual_label[v];
                    node_prov[t] = Provenance::Manual;
                    manual_rows.push_back(2 * t);
                    manual_rows.push_back(2 * t + 1);
                    manual_labels.push_back(data.manual_label[v]);
                    manual_labels.push_back(data.manual_label[v]);
                } else if (needs_pseudo && refresh.pseudo[v] >= 0) {
                    node_label[t] = refresh.pseudo[v];
                    node_prov[t] = Provenance::Pseudo;
                }
            }
            BatchLabelMap map = BatchLabelMap::interleaved(node_label, node_prov);

            ad::Var w_head_var = trace.param_vars.back();
            ad::Var total = build_objective(trace.tape, trace.z, w_head_var, map,
                                            manual_rows, manual_labels, config);
            double loss = trace.tape.value(total)(0, 0);
            if (!std::isfinite(loss))
                throw std::runtime_error("training diverged (non-finite loss) at epoch " +
                                         std::to_string(epoch) + ", batch " +
                                         std::to_string(b));

            EncoderParams grads = backward(result.params, trace, total);
            adam_step(result.params, grads, adam, config.learning_rate, config.weight_decay);
        }

        result.history.push_back(
            evaluate_model(config, data, result.params, epoch,
                           kStreamEval + static_cast<std::uint64_t>(epoch)));
    }

    result.final_record =
        evaluate_model(config, data, result.params, -1,
                       kStreamEval + static_cast<std::uint64_t>(config.epochs));
    return result;
}

TrainResult run_training(const ExperimentConfig& config) {
    return run_training(config, prepare_data(config));
}

std::string metrics_to_jsonl(const TrainResult& result) {
    std::string out;
    for (const auto& rec : result.history) out += rec.to_json() + "\n";
    out += result.final_record.to_json() + "\n";
    return out;
}

void write_metrics_jsonl(const TrainResult& result, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write metrics file: " + path);
    out << metrics_to_jsonl(result);
}

InferenceResult run_inference(const EncoderParams& params, const DataBundle& data,
                              int k_total, std::uint64_t seed) {
    Matrix z = forward_eval(data.graph, params);
    Rng rng(seed, kStreamInfer);
    ClusterModel model = kmeans_fit(z, k_total, pipeline_kmeans(), rng);

    std::vector<int> clusters_l, labels_l;
    for (auto v : data.split.labeled) {
        clusters_l.push_back(model.assignments[v]);
        labels_l.push_back(data.manual_label[v]);
    }
    ClassAlignment alignment = fit_alignment(clusters_l, labels_l, k_total, data.n_seen);

    InferenceResult result;
    result.clusters = model.assignments;
    result.predicted = predict(alignment, model.assignments);

    std::vector<int> y, c;
    std::vector<bool> seen;
    for (auto v : data.split.test) {
        y.push_back(data.compact_label[v]);
        c.push_back(model.assignments[v]);
        seen.push_back(data.compact_label[v] < data.n_seen);
    }
    result.accuracy = eval_accuracy(y, c, seen, data.n_classes, k_total);
    return result;
}

void write_predictions_csv(const InferenceResult& result, const DataBundle& data,
                           const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write predictions file: " + path);
    out << "node_id,predicted_class\n";
    for (std::size_t v = 0; v < data.graph.num_nodes; ++v)
        if (!data.is_labeled[v]) out << v << "," << result.predicted[v] << "\n";
}

std::size_t select_candidate(const std::vector<std::pair<double, double>>& sc_and_acc) {
    auto scores = sc_acc(sc_and_acc);
    std::size_t best = 0;
    for (std::size_t i = 1; i < scores.size(); ++i)
        if (scores[i] > scores[best]) best = i;
    return best;
}

SweepOutcome run_sweep(const ExperimentConfig& base, const std::vector<SweepCandidate>& grid,
                       const DataBundle& data) {
    std::size_t distinct = 0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        bool dup = false;
        for (std::size_t j = 0; j < i; ++j)
            if (grid[j] == grid[i]) dup = true;
        if (!dup) ++distinct;
    }
    if (distinct < 2)
        throw ConfigError("sweep needs at least two distinct candidates, got " +
                          std::to_string(distinct));

    SweepOutcome outcome;
    outcome.grid = grid;
    std::vector<std::pair<double, double>> pairs;
    for (const auto& cand : grid) {
        ExperimentConfig cfg = base;
        cfg.eta = cand.eta;
        cfg.tau = cand.tau;
        cfg.rho = cand.rho;
        cfg.learning_rate = cand.learning_rate;
        TrainResult run = run_training(cfg, data);
        pairs.emplace_back(run.final_record.sc, run.final_record.val_acc);
        outcome.finals.push_back(run.final_record);
    }
    auto scores = sc_acc(pairs);
    for (std::size_t i = 0; i < scores.size(); ++i) outcome.finals[i].sc_acc_score = scores[i];
    outcome.selected = select_candidate(pairs);
    return outcome;
}

void write_sweep_csv(const SweepOutcome& outcome, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write sweep table: " + path);
    out.precision(12);
    out << "eta,tau,rho,learning_rate,sc,val_acc,sc_acc_score,selected\n";
    for (std::size_t i = 0; i < outcome.grid.size(); ++i) {
        const auto& c = outcome.grid[i];
        const auto& f = outcome.finals[i];
        out << c.eta << "," << c.tau << "," << c.rho << "," << c.learning_rate << ","
            << f.sc << "," << f.val_acc << "," << *f.sc_acc_score << ","
            << (i == outcome.selected ? 1 : 0) << "\n";
    }
}

EstimateOutcome estimate_novel_count(const ExperimentConfig& config, const DataBundle& data,
                                     int k_min, int k_max) {
    if (k_min < 1 || k_max < k_min) throw ConfigError("estimate-k: bad candidate range");
    ExperimentConfig cfg = config;
    cfg.variant = Variant::InfoNCE;
    TrainResult run = run_training(cfg, data);
    Matrix z = forward_eval(data.graph, run.params);

    EstimateOutcome outcome;
    outcome.novel_count = k_min;
    double best = -2.0;
    for (int c = k_min; c <= k_max; ++c) {
        Rng rng(config.seed, kStreamEstimate + static_cast<std::uint64_t>(c));
        ClusterModel model = kmeans_fit(z, data.n_seen + c, pipeline_kmeans(), rng);
        double score = silhouette(z, model.assignments);
        outcome.silhouettes.emplace_back(c, score);
        if (score > best) {
            best = score;
            outcome.novel_count = c;
        }
    }
    return outcome;
}

void write_estimate_csv(const EstimateOutcome& outcome, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write estimate table: " + path);
    out.precision(12);
    out << "novel_count,silhouette,selected\n";
    for (const auto& [c, s] : outcome.silhouettes)
        out << c << "," << s << "," << (c == outcome.novel_count ? 1 : 0) << "\n";
}

AblationRow mean_variant_stats(const ExperimentConfig& base, Variant variant,
                               const std::vector<std::uint64_t>& seeds) {
    if (seeds.empty()) throw ConfigError("ablation needs at least one seed");
    AblationRow row;
    row.variant = variant_name(variant);
    for (auto seed : seeds) {
        ExperimentConfig cfg = base;
        cfg.variant = variant;
        cfg.seed = seed;
        TrainResult run = run_training(cfg);
        const MetricsRecord& rec = run.final_record;
        row.imbalance_rate += rec.imbalance_rate;
        row.separation_rate += rec.separation_rate;
        row.acc_seen += rec.acc_seen.value_or(0.0);
        row.acc_novel += rec.acc_novel.value_or(0.0);
        row.acc_all += rec.acc_all;
    }
    double inv = 1.0 / static_cast<double>(seeds.size());
    row.imbalance_rate *= inv;
    row.separation_rate *= inv;
    row.acc_seen *= inv;
    row.acc_novel *= inv;
    row.acc_all *= inv;
    return row;
}

std::vector<AblationRow> run_ablation(const ExperimentConfig& base,
                                      const std::vector<std::uint64_t>& seeds) {
    std::vector<AblationRow> rows;
    for (Variant v : {Variant::InfoNCE, Variant::InfoNCESupCon, Variant::InfoNCESupConCE,
                      Variant::OpenIMA})
        rows.push_back(mean_variant_stats(base, v, seeds));
    return rows;
}

void write_ablation_csv(const std::vector<AblationRow>& rows, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write ablation table: " + path);
    out.precision(12);
    // metrics computed over test-set embeddings, accuracies over test nodes
    out << "variant,imbalance_rate,separation_rate,acc_seen,acc_novel\n";
    for (const auto& r : rows)
        out << r.variant << "," << r.imbalance_rate << "," << r.separation_rate << ","
            << r.acc_seen << "," << r.acc_novel << "\n";
}

}  // namespace openima
