#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <unistd.h>

#include "openima/graph.hpp"

using namespace openima;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("openima_test_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter++));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const char* name) const { return (path / name).string(); }
    static inline int counter = 0;
};

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    out << content;
}

}  // namespace

TEST_CASE("load a 3-node path graph") {
    TempDir dir;
    write_file(dir.file("e.txt"), "0 1\n1 2\n");
    write_file(dir.file("f.txt"), "1.0,0.0\n0.0,1.0\n1.0,1.0\n");
    write_file(dir.file("l.txt"), "0,0\n1,0\n2,1\n");
    Graph g = load_graph(dir.file("e.txt"), dir.file("f.txt"), dir.file("l.txt"));
    CHECK(g.num_nodes == 3);
    CHECK(g.edges == std::vector<std::pair<std::uint32_t, std::uint32_t>>{{0, 1}, {1, 2}});
    CHECK(g.feature_dim() == 2);
    CHECK(g.labels == std::vector<int>{0, 0, 1});
}

TEST_CASE("self loops and duplicates are dropped with counts") {
    TempDir dir;
    write_file(dir.file("e.txt"), "0 1\n5 5\n1 0\n2 3\n");
    write_file(dir.file("f.txt"), "1\n2\n3\n4\n5\n6\n");
    LoadReport report;
    Graph g = load_graph(dir.file("e.txt"), dir.file("f.txt"), "", &report);
    CHECK(report.dropped_self_loops == 1);
    CHECK(report.dropped_duplicates == 1);
    CHECK(g.edges.size() == 2);
}

TEST_CASE("malformed files are rejected with line numbers") {
    TempDir dir;
    write_file(dir.file("f.txt"), "1,2\n3,4\n");
    write_file(dir.file("ragged.txt"), "1,2\n3,4,5\n");
    write_file(dir.file("oob.txt"), "0 1\n0 7\n");
    write_file(dir.file("ok.txt"), "0 1\n");
    write_file(dir.file("badlabel.txt"), "0,0\n1,-2\n");

    CHECK_THROWS_WITH_AS(load_graph(dir.file("oob.txt"), dir.file("f.txt"), ""),
                         doctest::Contains("line 2"), std::runtime_error);
    CHECK_THROWS_WITH_AS(load_graph(dir.file("ok.txt"), dir.file("ragged.txt"), ""),
                         doctest::Contains("line 2"), std::runtime_error);
    CHECK_THROWS_WITH_AS(
        load_graph(dir.file("ok.txt"), dir.file("f.txt"), dir.file("badlabel.txt")),
        doctest::Contains("line 2"), std::runtime_error);
}

TEST_CASE("write then load round-trips the graph") {
    Rng rng(5);
    SbmSpec spec;
    spec.classes = 3;
    spec.nodes_per_class = 12;
    spec.p_in = 0.4;
    spec.p_out = 0.05;
    spec.feature_dim = 4;
    Graph g = generate_sbm(spec, rng);

    TempDir dir;
    write_graph(g, dir.file("e.txt"), dir.file("f.txt"), dir.file("l.txt"));
    Graph h = load_graph(dir.file("e.txt"), dir.file("f.txt"), dir.file("l.txt"));
    CHECK(g == h);
}

TEST_CASE("sbm extreme probabilities give per-class cliques") {
    Rng rng(1);
    SbmSpec spec;
    spec.classes = 3;
    spec.nodes_per_class = 6;
    spec.p_in = 1.0;
    spec.p_out = 0.0;
    spec.feature_dim = 4;
    Graph g = generate_sbm(spec, rng);
    std::size_t per_class_pairs = 6 * 5 / 2;
    CHECK(g.edges.size() == 3 * per_class_pairs);
    for (const auto& [a, b] : g.edges) CHECK(g.labels[a] == g.labels[b]);
}

TEST_CASE("sbm intra-class edge counts match the binomial oracle over seeds") {
    SbmSpec spec;
    spec.classes = 2;
    spec.nodes_per_class = 40;
    spec.p_in = 0.3;
    spec.p_out = 0.0;
    spec.feature_dim = 3;
    const int seeds = 50;
    long long total = 0;
    for (int s = 0; s < seeds; ++s) {
        Rng rng(static_cast<std::uint64_t>(s));
        Graph g = generate_sbm(spec, rng);
        total += static_cast<long long>(g.edges.size());
    }
    double pairs_per_graph = 2 * (40.0 * 39.0 / 2.0);
    double mean = seeds * pairs_per_graph * spec.p_in;
    double sd = std::sqrt(seeds * pairs_per_graph * spec.p_in * (1 - spec.p_in));
    CHECK(std::abs(total - mean) <= 4.0 * sd);
}

TEST_CASE("sbm noise limit gives identical same-class rows") {
    Rng rng(2);
    SbmSpec spec;
    spec.classes = 2;
    spec.nodes_per_class = 5;
    spec.p_in = 0.5;
    spec.p_out = 0.1;
    spec.feature_dim = 4;
    spec.noise_scale = 0.0;
    Graph g = generate_sbm(spec, rng);
    for (std::size_t i = 1; i < 5; ++i)
        for (std::size_t f = 0; f < 4; ++f) CHECK(g.features(i, f) == g.features(0, f));
}

TEST_CASE("split counts and determinism") {
    Rng grng(3);
    SbmSpec spec;
    spec.classes = 6;
    spec.nodes_per_class = 30;
    spec.p_in = 0.3;
    spec.p_out = 0.02;
    spec.feature_dim = 4;
    Graph g = generate_sbm(spec, grng);

    Rng s1(17), s2(17);
    OpenWorldSplit a = make_open_world_split(g, s1, 0.5, 10, 5);
    OpenWorldSplit b = make_open_world_split(g, s2, 0.5, 10, 5);
    CHECK(a.seen_classes.size() == 3);
    CHECK(a.novel_classes.size() == 3);
    CHECK(a.labeled.size() == 3 * 10);
    CHECK(a.validation.size() == 3 * 5);
    CHECK(a.seen_classes == b.seen_classes);
    CHECK(a.labeled == b.labeled);
    CHECK(a.validation == b.validation);
    CHECK(a.test == b.test);
}

TEST_CASE("split partitions the nodes and sends novel classes to test") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        Rng grng(seed);
        SbmSpec spec;
        spec.classes = 5;
        spec.nodes_per_class = 20;
        spec.p_in = 0.3;
        spec.p_out = 0.02;
        spec.feature_dim = 4;
        Graph g = generate_sbm(spec, grng);
        Rng srng(seed + 100);
        OpenWorldSplit split = make_open_world_split(g, srng, 0.5, 5, 5);

        CHECK(split.labeled.size() + split.validation.size() + split.test.size() ==
              g.num_nodes);
        std::set<std::uint32_t> all;
        for (auto v : split.labeled) all.insert(v);
        for (auto v : split.validation) all.insert(v);
        for (auto v : split.test) all.insert(v);
        CHECK(all.size() == g.num_nodes);

        std::set<int> novel(split.novel_classes.begin(), split.novel_classes.end());
        std::set<std::uint32_t> test(split.test.begin(), split.test.end());
        for (std::size_t n = 0; n < g.num_nodes; ++n)
            if (novel.count(g.labels[n])) CHECK(test.count(static_cast<std::uint32_t>(n)));
        std::set<int> seen(split.seen_classes.begin(), split.seen_classes.end());
        for (auto v : split.labeled) CHECK(seen.count(g.labels[v]));
        for (auto v : split.validation) CHECK(seen.count(g.labels[v]));
    }
}

TEST_CASE("split rejects a class that is too small, naming it") {
    Graph g;
    g.num_nodes = 6;
    g.features = Matrix(6, 2);
    g.labels = {0, 0, 0, 0, 1, 1};
    Rng rng(0);
    CHECK_THROWS_WITH_AS(make_open_world_split(g, rng, 1.0, 3, 2),
                         doctest::Contains("class 1"), std::invalid_argument);
}

TEST_CASE("split file format") {
    Graph g;
    g.num_nodes = 4;
    g.features = Matrix(4, 1);
    g.labels = {0, 0, 0, 0};
    Rng rng(0);
    OpenWorldSplit split = make_open_world_split(g, rng, 1.0, 2, 1);
    TempDir dir;
    write_split(split, dir.file("split.csv"));
    std::ifstream in(dir.file("split.csv"));
    std::string line;
    int labeled = 0, val = 0, test = 0;
    while (std::getline(in, line)) {
        if (line.find(",labeled") != std::string::npos) ++labeled;
        if (line.find(",val") != std::string::npos) ++val;
        if (line.find(",test") != std::string::npos) ++test;
    }
    CHECK(labeled == 2);
    CHECK(val == 1);
    CHECK(test == 1);
}
