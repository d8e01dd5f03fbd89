// Command-line front end: dataset generation, splits, training, inference,
// hyper-parameter sweeps, the loss ablation, novel-class-count estimation,
// and the two-Gaussian clustering-theory checks.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "openima/clustering.hpp"
#include "openima/config.hpp"
#include "openima/pipeline.hpp"
#include "openima/pseudolabel.hpp"
#include "openima/theory.hpp"

namespace fs = std::filesystem;
using namespace openima;

namespace {

std::vector<double> parse_list(const std::string& csv, const std::string& what) {
    std::vector<double> out;
    std::stringstream ss(csv);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        try {
            out.push_back(std::stod(tok));
        } catch (const std::exception&) {
            throw ConfigError(what + ": bad number '" + tok + "'");
        }
    }
    if (out.empty()) throw ConfigError(what + ": empty list");
    return out;
}

std::vector<std::uint64_t> parse_seeds(const std::string& csv) {
    std::vector<std::uint64_t> out;
    for (double v : parse_list(csv, "seeds")) out.push_back(static_cast<std::uint64_t>(v));
    return out;
}

void add_config_flags(CLI::App* cmd, ExperimentConfig& cfg) {
    cmd->add_option("--edges", cfg.edges_path, "edge list file (switches to file dataset)");
    cmd->add_option("--features", cfg.features_path, "feature file");
    cmd->add_option("--labels", cfg.labels_path, "label file");
    cmd->add_option("--data-seed", cfg.data_seed, "generator seed for the synthetic graph");
    cmd->add_option("--sbm-classes", cfg.sbm.classes, "planted classes");
    cmd->add_option("--sbm-nodes-per-class", cfg.sbm.nodes_per_class, "nodes per class");
    cmd->add_option("--sbm-p-in", cfg.sbm.p_in, "intra-class edge probability");
    cmd->add_option("--sbm-p-out", cfg.sbm.p_out, "inter-class edge probability");
    cmd->add_option("--sbm-feature-dim", cfg.sbm.feature_dim, "feature dimension");
    cmd->add_option("--sbm-center-scale", cfg.sbm.center_scale, "class center scale");
    cmd->add_option("--sbm-noise-scale", cfg.sbm.noise_scale, "feature noise scale");
    cmd->add_option("--seen-fraction", cfg.seen_fraction, "fraction of classes kept seen");
    cmd->add_option("--labeled-per-class", cfg.labeled_per_class, "labeled nodes per seen class");
    cmd->add_option("--val-per-class", cfg.val_per_class, "validation nodes per seen class");
    cmd->add_option("--layers", cfg.layers, "attention layers (1 or 2)");
    cmd->add_option("--heads", cfg.heads, "attention heads");
    cmd->add_option("--hidden", cfg.hidden, "layer output width");
    cmd->add_option("--dropout", cfg.dropout, "dropout rate");
    cmd->add_flag("--mean-aggregation", cfg.mean_aggregation,
                  "uniform neighborhood weights instead of attention");
    cmd->add_option("--eta", cfg.eta, "cross-entropy scaling");
    cmd->add_option("--tau", cfg.tau, "contrastive temperature");
    cmd->add_option("--rho", cfg.rho, "pseudo-label selection rate (percent)");
    cmd->add_option("--lr", cfg.learning_rate, "learning rate");
    cmd->add_option("--weight-decay", cfg.weight_decay, "weight decay");
    cmd->add_option("--epochs", cfg.epochs, "training epochs");
    cmd->add_option("--batch-size", cfg.batch_size, "nodes per batch");
    cmd->add_option("--refresh-period", cfg.refresh_period,
                    "epochs between clustering refreshes");
    cmd->add_option("--novel-count", cfg.novel_count,
                    "novel classes to cluster for (0 = use the split's count)");
    cmd->add_option("--seed", cfg.seed, "split/training seed");
    cmd->add_option("--out-dir", cfg.out_dir, "output directory");
    cmd->add_option_function<std::string>(
        "--variant",
        [&cfg](const std::string& v) { cfg.variant = variant_from_string(v); },
        "objective: openima, infonce, infonce+supcon, infonce+supcon+ce, ce");
}

ExperimentConfig preload_config(int argc, char** argv) {
    for (int i = 1; i + 1 < argc; ++i)
        if (std::string(argv[i]) == "--config") return load_config_file(argv[i + 1]);
    return ExperimentConfig{};
}

fs::path ensure_out_dir(const ExperimentConfig& cfg) {
    fs::path dir(cfg.out_dir);
    fs::create_directories(dir);
    return dir;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"open-world semi-supervised node classification toolkit"};
    app.require_subcommand(1);

    ExperimentConfig cfg;
    try {
        cfg = preload_config(argc, argv);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    std::string config_path;

    auto* gen = app.add_subcommand("gen-sbm", "generate a synthetic graph and write it out");
    auto* split_cmd = app.add_subcommand("split", "emit an open-world split file");
    auto* train = app.add_subcommand("train", "train and write metrics.jsonl + checkpoint");
    auto* infer = app.add_subcommand("infer", "load a checkpoint and predict");
    auto* sweep = app.add_subcommand("sweep", "hyper-parameter sweep with sc_acc selection");
    auto* ablation = app.add_subcommand("ablation", "loss ablation table over seeds");
    auto* estimate = app.add_subcommand("estimate-k", "estimate the novel-class count");
    auto* tsweep = app.add_subcommand("theory-sweep", "variance-imbalance monotonicity sweep");
    auto* tcheck = app.add_subcommand("theory-check", "fixed-point and accuracy checks");

    for (auto* cmd : {gen, split_cmd, train, infer, sweep, ablation, estimate}) {
        cmd->add_option("--config", config_path, "flat key=value config file");
        add_config_flags(cmd, cfg);
    }

    std::string checkpoint_path;
    infer->add_option("--checkpoint", checkpoint_path, "encoder checkpoint")->required();

    std::string sweep_eta = "1", sweep_tau = "0.7", sweep_rho = "75", sweep_lr = "0.001";
    sweep->add_option("--eta-grid", sweep_eta, "comma list of eta values");
    sweep->add_option("--tau-grid", sweep_tau, "comma list of tau values");
    sweep->add_option("--rho-grid", sweep_rho, "comma list of rho values");
    sweep->add_option("--lr-grid", sweep_lr, "comma list of learning rates");

    std::string seeds_csv = "0,1,2,3,4,5,6,7,8,9";
    ablation->add_option("--seeds", seeds_csv, "comma list of split seeds");

    int k_min = 1, k_max = 10;
    estimate->add_option("--k-min", k_min, "smallest candidate novel count");
    estimate->add_option("--k-max", k_max, "largest candidate novel count");

    bool dump_pseudo = false;
    train->add_flag("--dump-pseudo", dump_pseudo, "write the final pseudo-label set");

    // theory flags
    double mu1 = 0.0, mu2 = 4.0, sigma1 = 0.8, sigma2 = 1.0;
    int dim = 1, repeats = 20;
    long n_samples = 20000;
    std::uint64_t tseed = 0;
    std::string sigma1_grid = "0.55,0.60,0.65,0.70,0.75,0.80,0.85,0.90,0.95";
    std::string tout;
    for (auto* cmd : {tsweep, tcheck}) {
        cmd->add_option("--mu1", mu1, "first component mean");
        cmd->add_option("--mu2", mu2, "second component mean");
        cmd->add_option("--sigma2", sigma2, "second component sigma");
        cmd->add_option("--dim", dim, "sample dimension");
        cmd->add_option("--n", n_samples, "samples per simulation");
        cmd->add_option("--seed", tseed, "simulation seed");
    }
    tsweep->add_option("--sigma1-grid", sigma1_grid, "comma list of sigma1 values");
    tsweep->add_option("--repeats", repeats, "simulations per grid point");
    tsweep->add_option("--out", tout, "also write the table to this file");
    tcheck->add_option("--sigma1", sigma1, "first component sigma");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) {
            ensure_out_dir(cfg);
            Rng rng(cfg.data_seed, 2);
            Graph g = generate_sbm(cfg.sbm, rng);
            fs::path dir(cfg.out_dir);
            write_graph(g, (dir / "edges.txt").string(), (dir / "features.txt").string(),
                        (dir / "labels.txt").string());
            std::cout << "wrote " << g.num_nodes << " nodes, " << g.edges.size()
                      << " edges to " << dir.string() << "\n";
        } else if (split_cmd->parsed()) {
            DataBundle data = prepare_data(cfg);
            fs::path dir = ensure_out_dir(cfg);
            write_split(data.split, (dir / "split.csv").string());
            std::cout << "seen classes: " << data.n_seen << ", labeled "
                      << data.split.labeled.size() << ", val " << data.split.validation.size()
                      << ", test " << data.split.test.size() << "\n";
        } else if (train->parsed()) {
            DataBundle data = prepare_data(cfg);
            TrainResult result = run_training(cfg, data);
            fs::path dir = ensure_out_dir(cfg);
            write_metrics_jsonl(result, (dir / "metrics.jsonl").string());
            save_checkpoint(result.params, (dir / "encoder.ckpt").string());
            if (dump_pseudo) {
                Matrix z = forward_eval(data.graph, result.params);
                Rng rng(cfg.seed, 0x10000 + static_cast<std::uint64_t>(cfg.epochs));
                ClusterModel model = kmeans_fit(z, data.k_total, KMeansConfig{}, rng);
                std::vector<int> cl, ll;
                for (auto v : data.split.labeled) {
                    cl.push_back(model.assignments[v]);
                    ll.push_back(data.manual_label[v]);
                }
                auto align = fit_alignment(cl, ll, data.k_total, data.n_seen);
                auto set = select_pseudo(model, align, data.is_labeled, cfg.rho, cfg.epochs);
                write_pseudo_dump(set, model, (dir / "pseudo.csv").string());
            }
            std::cout << result.final_record.to_json() << "\n";
        } else if (infer->parsed()) {
            DataBundle data = prepare_data(cfg);
            EncoderParams params = load_checkpoint(checkpoint_path);
            InferenceResult result = run_inference(params, data, params.config.num_classes,
                                                   cfg.seed);
            fs::path dir = ensure_out_dir(cfg);
            write_predictions_csv(result, data, (dir / "predictions.csv").string());
            std::cout << "acc_all=" << result.accuracy.all;
            if (result.accuracy.seen) std::cout << " acc_seen=" << *result.accuracy.seen;
            if (result.accuracy.novel) std::cout << " acc_novel=" << *result.accuracy.novel;
            std::cout << "\n";
        } else if (sweep->parsed()) {
            DataBundle data = prepare_data(cfg);
            std::vector<SweepCandidate> grid;
            for (double e : parse_list(sweep_eta, "eta-grid"))
                for (double t : parse_list(sweep_tau, "tau-grid"))
                    for (double r : parse_list(sweep_rho, "rho-grid"))
                        for (double l : parse_list(sweep_lr, "lr-grid"))
                            grid.push_back({e, t, r, l});
            SweepOutcome outcome = run_sweep(cfg, grid, data);
            fs::path dir = ensure_out_dir(cfg);
            write_sweep_csv(outcome, (dir / "result_table.csv").string());
            const auto& sel = outcome.grid[outcome.selected];
            std::cout << "selected: eta=" << sel.eta << " tau=" << sel.tau
                      << " rho=" << sel.rho << " lr=" << sel.learning_rate << "\n";
        } else if (ablation->parsed()) {
            auto rows = run_ablation(cfg, parse_seeds(seeds_csv));
            fs::path dir = ensure_out_dir(cfg);
            write_ablation_csv(rows, (dir / "result_table.csv").string());
            for (const auto& r : rows)
                std::cout << r.variant << ": imbalance=" << r.imbalance_rate
                          << " separation=" << r.separation_rate << " seen=" << r.acc_seen
                          << " novel=" << r.acc_novel << "\n";
        } else if (estimate->parsed()) {
            DataBundle data = prepare_data(cfg);
            EstimateOutcome outcome = estimate_novel_count(cfg, data, k_min, k_max);
            fs::path dir = ensure_out_dir(cfg);
            write_estimate_csv(outcome, (dir / "result_table.csv").string());
            std::cout << "estimated novel classes: " << outcome.novel_count << "\n";
        } else if (tsweep->parsed()) {
            SweepResult result = monotonicity_sweep(parse_list(sigma1_grid, "sigma1-grid"),
                                                    mu1, mu2, sigma2, dim, n_samples,
                                                    repeats, tseed);
            std::cout << result.to_csv();
            std::cout << "spearman_empirical=" << result.spearman_empirical
                      << " spearman_analytic=" << result.spearman_analytic
                      << " s_star_trend=" << result.s_star_trend << "\n";
            if (!tout.empty()) {
                std::ofstream out(tout, std::ios::binary);
                if (!out) throw std::runtime_error("cannot write " + tout);
                out << result.to_csv();
            }
        } else if (tcheck->parsed()) {
            MixtureSpec spec{mu1, mu2, sigma1, sigma2, dim, n_samples};
            double s_star = solve_threshold(spec);
            auto [t1, t2] = theta_pair(s_star, spec);
            auto [a1, a2] = analytic_acc(spec, s_star);
            Rng rng(tseed, 0);
            auto [points, comp] = sample_mixture(spec, rng);
            KMeansConfig kcfg;
            kcfg.restarts = 2;
            kcfg.max_iter = 100;
            ClusterModel model = kmeans_fit(points, 2, kcfg, rng);
            auto [e1, e2] = empirical_acc(points, comp, model);
            std::cout << "alpha=" << spec.alpha() << " gamma=" << spec.gamma()
                      << " s_star=" << s_star << "\n"
                      << "theta1=" << t1 << " theta2=" << t2 << "\n"
                      << "analytic acc1=" << a1 << " acc2=" << a2 << "\n"
                      << "empirical acc1=" << e1 << " acc2=" << e2 << "\n";
        }
    } catch (const ConfigError& e) {
        std::cerr << "invalid config: " << e.what() << "\n";
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid config: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
