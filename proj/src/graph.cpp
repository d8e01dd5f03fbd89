#include "openima/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace openima {

void Graph::validate() const {
    if (features.rows() != num_nodes)
        throw std::invalid_argument("graph: feature rows != num_nodes");
    std::set<std::pair<std::uint32_t, std::uint32_t>> seen;
    for (const auto& [a, b] : edges) {
        if (a >= num_nodes || b >= num_nodes)
            throw std::invalid_argument("graph: edge endpoint out of range");
        if (a == b) throw std::invalid_argument("graph: self loop stored");
        if (a > b) throw std::invalid_argument("graph: edge not normalized");
        if (!seen.insert({a, b}).second)
            throw std::invalid_argument("graph: duplicate edge");
    }
    if (has_labels() && labels.size() != num_nodes)
        throw std::invalid_argument("graph: label count != num_nodes");
}

std::vector<std::vector<std::uint32_t>> Graph::adjacency() const {
    std::vector<std::vector<std::uint32_t>> adj(num_nodes);
    for (const auto& [a, b] : edges) {
        adj[a].push_back(b);
        adj[b].push_back(a);
    }
    for (auto& nbrs : adj) std::sort(nbrs.begin(), nbrs.end());
    return adj;
}

namespace {

std::vector<std::string> read_lines(const std::string& path, const char* what) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error(std::string(what) + " file not readable: " + path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    return lines;
}

bool blank(const std::string& s) {
    return s.find_first_not_of(" \t\r\n") == std::string::npos;
}

long parse_long(const std::string& tok, const char* what, std::size_t lineno) {
    try {
        std::size_t pos = 0;
        long v = std::stol(tok, &pos);
        if (pos != tok.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        throw std::runtime_error(std::string(what) + " file line " + std::to_string(lineno) +
                                 ": bad integer '" + tok + "'");
    }
}

double parse_double(const std::string& tok, const char* what, std::size_t lineno) {
    try {
        std::size_t pos = 0;
        double v = std::stod(tok, &pos);
        if (pos != tok.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        throw std::runtime_error(std::string(what) + " file line " + std::to_string(lineno) +
                                 ": bad float '" + tok + "'");
    }
}

std::vector<std::string> split_on(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, sep)) out.push_back(tok);
    return out;
}

}  // namespace

Graph load_graph(const std::string& edge_path, const std::string& feature_path,
                 const std::string& label_path, LoadReport* report) {
    Graph g;

    // features first: they define the node count
    auto feat_lines = read_lines(feature_path, "feature");
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < feat_lines.size(); ++i) {
        if (blank(feat_lines[i])) continue;
        auto toks = split_on(feat_lines[i], ',');
        std::vector<double> row;
        row.reserve(toks.size());
        for (const auto& t : toks) row.push_back(parse_double(t, "feature", i + 1));
        if (!rows.empty() && row.size() != rows.front().size())
            throw std::runtime_error("feature file line " + std::to_string(i + 1) +
                                     ": ragged row (" + std::to_string(row.size()) + " vs " +
                                     std::to_string(rows.front().size()) + " columns)");
        rows.push_back(std::move(row));
    }
    g.num_nodes = rows.size();
    g.features = Matrix(g.num_nodes, rows.empty() ? 0 : rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j) g.features(i, j) = rows[i][j];

    auto edge_lines = read_lines(edge_path, "edge");
    std::set<std::pair<std::uint32_t, std::uint32_t>> seen;
    LoadReport rep;
    for (std::size_t i = 0; i < edge_lines.size(); ++i) {
        if (blank(edge_lines[i])) continue;
        std::stringstream ss(edge_lines[i]);
        std::string ta, tb, extra;
        if (!(ss >> ta >> tb))
            throw std::runtime_error("edge file line " + std::to_string(i + 1) +
                                     ": expected two node ids");
        if (ss >> extra)
            throw std::runtime_error("edge file line " + std::to_string(i + 1) +
                                     ": trailing tokens");
        long a = parse_long(ta, "edge", i + 1);
        long b = parse_long(tb, "edge", i + 1);
        if (a < 0 || b < 0 || a >= static_cast<long>(g.num_nodes) ||
            b >= static_cast<long>(g.num_nodes))
            throw std::runtime_error("edge file line " + std::to_string(i + 1) +
                                     ": node id out of range [0, " +
                                     std::to_string(g.num_nodes) + ")");
        if (a == b) {
            ++rep.dropped_self_loops;
            continue;
        }
        auto e = std::minmax(static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(b));
        if (!seen.insert({e.first, e.second}).second) {
            ++rep.dropped_duplicates;
            continue;
        }
    }
    g.edges.assign(seen.begin(), seen.end());

    if (!label_path.empty()) {
        auto label_lines = read_lines(label_path, "label");
        g.labels.assign(g.num_nodes, -1);
        for (std::size_t i = 0; i < label_lines.size(); ++i) {
            if (blank(label_lines[i])) continue;
            auto toks = split_on(label_lines[i], ',');
            if (toks.size() != 2)
                throw std::runtime_error("label file line " + std::to_string(i + 1) +
                                         ": expected node_id,class_id");
            long node = parse_long(toks[0], "label", i + 1);
            long cls = parse_long(toks[1], "label", i + 1);
            if (node < 0 || node >= static_cast<long>(g.num_nodes))
                throw std::runtime_error("label file line " + std::to_string(i + 1) +
                                         ": node id out of range");
            if (cls < 0)
                throw std::runtime_error("label file line " + std::to_string(i + 1) +
                                         ": unknown class id " + std::to_string(cls));
            g.labels[node] = static_cast<int>(cls);
        }
        for (std::size_t n = 0; n < g.num_nodes; ++n)
            if (g.labels[n] < 0)
                throw std::runtime_error("label file: node " + std::to_string(n) +
                                         " has no label");
    }

    if (report) *report = rep;
    g.validate();
    return g;
}

void write_graph(const Graph& g, const std::string& edge_path,
                 const std::string& feature_path, const std::string& label_path) {
    {
        std::ofstream out(edge_path);
        if (!out) throw std::runtime_error("cannot write edge file: " + edge_path);
        for (const auto& [a, b] : g.edges) out << a << " " << b << "\n";
    }
    {
        std::ofstream out(feature_path);
        if (!out) throw std::runtime_error("cannot write feature file: " + feature_path);
        out.precision(17);
        for (std::size_t i = 0; i < g.num_nodes; ++i) {
            for (std::size_t j = 0; j < g.features.cols(); ++j) {
                if (j) out << ",";
                out << g.features(i, j);
            }
            out << "\n";
        }
    }
    if (!label_path.empty() && g.has_labels()) {
        std::ofstream out(label_path);
        if (!out) throw std::runtime_error("cannot write label file: " + label_path);
        for (std::size_t i = 0; i < g.num_nodes; ++i) out << i << "," << g.labels[i] << "\n";
    }
}

void SbmSpec::validate() const {
    if (classes < 1) throw std::invalid_argument("sbm: classes must be >= 1");
    if (nodes_per_class < 1) throw std::invalid_argument("sbm: nodes_per_class must be >= 1");
    if (!(0.0 <= p_out && p_out < p_in && p_in <= 1.0))
        throw std::invalid_argument("sbm: need 0 <= p_out < p_in <= 1");
    if (feature_dim < 1) throw std::invalid_argument("sbm: feature_dim must be >= 1");
    if (noise_scale < 0.0) throw std::invalid_argument("sbm: noise_scale must be >= 0");
}

Graph generate_sbm(const SbmSpec& spec, Rng& rng) {
    spec.validate();
    Graph g;
    g.num_nodes = static_cast<std::size_t>(spec.classes) * spec.nodes_per_class;
    g.labels.resize(g.num_nodes);
    for (std::size_t n = 0; n < g.num_nodes; ++n)
        g.labels[n] = static_cast<int>(n / spec.nodes_per_class);

    // class centers: axis directions when they fit, random unit vectors
    // otherwise (distinct almost surely)
    Matrix centers(spec.classes, spec.feature_dim);
    if (spec.classes <= spec.feature_dim) {
        for (int c = 0; c < spec.classes; ++c) centers(c, c) = 1.0;
    } else {
        for (int c = 0; c < spec.classes; ++c) {
            double norm2 = 0.0;
            for (int f = 0; f < spec.feature_dim; ++f) {
                centers(c, f) = rng.normal();
                norm2 += centers(c, f) * centers(c, f);
            }
            double inv = 1.0 / std::sqrt(norm2);
            for (int f = 0; f < spec.feature_dim; ++f) centers(c, f) *= inv;
        }
    }

    g.features = Matrix(g.num_nodes, spec.feature_dim);
    for (std::size_t n = 0; n < g.num_nodes; ++n) {
        int c = g.labels[n];
        for (int f = 0; f < spec.feature_dim; ++f)
            g.features(n, f) = spec.center_scale * centers(c, f) + spec.noise_scale * rng.normal();
    }

    for (std::size_t a = 0; a < g.num_nodes; ++a) {
        for (std::size_t b = a + 1; b < g.num_nodes; ++b) {
            double p = (g.labels[a] == g.labels[b]) ? spec.p_in : spec.p_out;
            if (rng.bernoulli(p))
                g.edges.emplace_back(static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(b));
        }
    }
    return g;
}

OpenWorldSplit make_open_world_split(const Graph& g, Rng& rng, double seen_fraction,
                                     int labeled_per_class, int val_per_class) {
    if (!g.has_labels())
        throw std::invalid_argument("split: graph must be fully labeled");
    if (!(0.0 < seen_fraction && seen_fraction <= 1.0))
        throw std::invalid_argument("split: seen_fraction must be in (0, 1]");
    if (labeled_per_class < 1 || val_per_class < 0)
        throw std::invalid_argument("split: bad per-class sample sizes");

    std::vector<int> classes;
    for (int y : g.labels)
        if (std::find(classes.begin(), classes.end(), y) == classes.end()) classes.push_back(y);
    std::sort(classes.begin(), classes.end());

    std::size_t n_seen = static_cast<std::size_t>(
        std::ceil(seen_fraction * static_cast<double>(classes.size()) - 1e-12));
    if (n_seen == 0) n_seen = 1;

    std::vector<int> pool = classes;
    rng.shuffle(pool);
    OpenWorldSplit split;
    split.seen_classes.assign(pool.begin(), pool.begin() + n_seen);
    split.novel_classes.assign(pool.begin() + n_seen, pool.end());
    std::sort(split.seen_classes.begin(), split.seen_classes.end());
    std::sort(split.novel_classes.begin(), split.novel_classes.end());

    std::vector<bool> held(g.num_nodes, false);
    for (int c : split.seen_classes) {
        std::vector<std::uint32_t> members;
        for (std::size_t n = 0; n < g.num_nodes; ++n)
            if (g.labels[n] == c) members.push_back(static_cast<std::uint32_t>(n));
        if (members.size() < static_cast<std::size_t>(labeled_per_class + val_per_class))
            throw std::invalid_argument("split: seen class " + std::to_string(c) + " has only " +
                                        std::to_string(members.size()) + " nodes, needs " +
                                        std::to_string(labeled_per_class + val_per_class));
        rng.shuffle(members);
        for (int i = 0; i < labeled_per_class; ++i) {
            split.labeled.push_back(members[i]);
            held[members[i]] = true;
        }
        for (int i = 0; i < val_per_class; ++i) {
            split.validation.push_back(members[labeled_per_class + i]);
            held[members[labeled_per_class + i]] = true;
        }
    }
    for (std::size_t n = 0; n < g.num_nodes; ++n)
        if (!held[n]) split.test.push_back(static_cast<std::uint32_t>(n));

    std::sort(split.labeled.begin(), split.labeled.end());
    std::sort(split.validation.begin(), split.validation.end());
    std::sort(split.test.begin(), split.test.end());
    return split;
}

void write_split(const OpenWorldSplit& split, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write split file: " + path);
    for (auto n : split.labeled) out << n << ",labeled\n";
    for (auto n : split.validation) out << n << ",val\n";
    for (auto n : split.test) out << n << ",test\n";
}

}  // namespace openima
