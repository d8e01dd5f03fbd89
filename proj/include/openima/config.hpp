#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include "openima/graph.hpp"

namespace openima {

// Invalid configuration; the CLI maps this to exit code 1.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Variant { OpenIMA, InfoNCE, InfoNCESupCon, InfoNCESupConCE, CEOnly };

Variant variant_from_string(const std::string& name);
std::string variant_name(Variant v);

struct ExperimentConfig {
    // dataset source
    bool use_sbm = true;
    SbmSpec sbm;  // desk-scale defaults
    std::uint64_t data_seed = 42;
    std::string edges_path, features_path, labels_path;

    // open-world split
    double seen_fraction = 0.5;
    int labeled_per_class = 50;
    int val_per_class = 50;

    // encoder
    int layers = 2;
    int heads = 4;
    int hidden = 32;
    double dropout = 0.5;
    bool mean_aggregation = false;

    // objective
    double eta = 1.0;
    double tau = 0.7;
    double rho = 75.0;  // pseudo-label selection rate, percent
    Variant variant = Variant::OpenIMA;

    // optimization
    double learning_rate = 3e-3;
    double weight_decay = 1e-4;
    int epochs = 20;
    int batch_size = 256;
    int refresh_period = 1;  // epochs between clustering/pseudo-label refreshes

    // cluster count: seen classes + this many novel ones; 0 means use the
    // split's true novel-class count
    int novel_count = 0;

    std::uint64_t seed = 0;
    std::string out_dir = ".";

    void validate() const;
};

// Flat key=value file; # starts a comment. CLI flags override file values.
ExperimentConfig load_config_file(const std::string& path);
void apply_config_entry(ExperimentConfig& config, const std::string& key,
                        const std::string& value);

}  // namespace openima
