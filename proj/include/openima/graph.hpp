#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "openima/matrix.hpp"
#include "openima/rng.hpp"

namespace openima {

// Undirected simple graph with dense node features and optional labels.
// Edges are stored once with the smaller endpoint first; self loops are
// never stored (the encoder adds self-attention itself).
struct Graph {
    std::size_t num_nodes = 0;
    std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
    Matrix features;           // num_nodes x F
    std::vector<int> labels;   // empty when the graph is unlabeled

    bool has_labels() const { return !labels.empty(); }
    std::size_t feature_dim() const { return features.cols(); }
    void validate() const;
    // neighbor lists without self loops, sorted per node
    std::vector<std::vector<std::uint32_t>> adjacency() const;

    friend bool operator==(const Graph& a, const Graph& b) {
        return a.num_nodes == b.num_nodes && a.edges == b.edges &&
               a.features == b.features && a.labels == b.labels;
    }
};

struct LoadReport {
    std::size_t dropped_self_loops = 0;
    std::size_t dropped_duplicates = 0;
};

// Text formats: edge file has one "u v" pair per line, feature file one
// comma-separated row per node (line i = node i), label file lines
// "node_id,class_id". Malformed content is rejected with the line number.
Graph load_graph(const std::string& edge_path, const std::string& feature_path,
                 const std::string& label_path = "", LoadReport* report = nullptr);
void write_graph(const Graph& g, const std::string& edge_path,
                 const std::string& feature_path, const std::string& label_path = "");

// Planted-partition generator used as the desk-scale dataset.
struct SbmSpec {
    int classes = 5;
    int nodes_per_class = 150;
    double p_in = 0.05;
    double p_out = 0.01;
    int feature_dim = 16;
    double center_scale = 2.0;
    double noise_scale = 1.6;
    void validate() const;
};

// Features of class c are drawn around center_scale * (distinct unit
// direction for c) with isotropic per-coordinate noise; every node gets
// its class label attached.
Graph generate_sbm(const SbmSpec& spec, Rng& rng);

// Open-world protocol: a fraction of classes is seen, each seen class
// contributes fixed-size labeled and validation samples, and everything
// else (including every novel-class node) is test.
struct OpenWorldSplit {
    std::vector<int> seen_classes;              // sorted
    std::vector<int> novel_classes;             // sorted
    std::vector<std::uint32_t> labeled;         // sorted node ids
    std::vector<std::uint32_t> validation;
    std::vector<std::uint32_t> test;
};

OpenWorldSplit make_open_world_split(const Graph& g, Rng& rng,
                                     double seen_fraction = 0.5,
                                     int labeled_per_class = 50,
                                     int val_per_class = 50);

// Lines "node_id,role" with role in {labeled, val, test}.
void write_split(const OpenWorldSplit& split, const std::string& path);

}  // namespace openima
