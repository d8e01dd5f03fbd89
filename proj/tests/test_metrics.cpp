#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "openima/metrics.hpp"
#include "openima/rng.hpp"

using namespace openima;

namespace {

ClassStats stats_of(int id, std::vector<double> mean, double sd) {
    ClassStats s;
    s.class_id = id;
    s.mean = std::move(mean);
    s.stddev = sd;
    s.count = 10;
    return s;
}

// random rotation via Gram-Schmidt on a random square matrix
Matrix random_rotation(std::size_t d, Rng& rng) {
    Matrix q(d, d);
    for (std::size_t c = 0; c < d; ++c) {
        std::vector<double> v(d);
        for (auto& x : v) x = rng.normal();
        for (std::size_t p = 0; p < c; ++p) {
            double proj = 0.0;
            for (std::size_t i = 0; i < d; ++i) proj += v[i] * q(i, p);
            for (std::size_t i = 0; i < d; ++i) v[i] -= proj * q(i, p);
        }
        double norm = 0.0;
        for (double x : v) norm += x * x;
        norm = std::sqrt(norm);
        for (std::size_t i = 0; i < d; ++i) q(i, c) = v[i] / norm;
    }
    return q;
}

}  // namespace

TEST_CASE("class_stats computes RMS spread around the mean") {
    Matrix z = Matrix::from_rows({{0, 0}, {2, 0}, {10, 10}});
    std::vector<int> labels{0, 0, 1};
    auto stats = class_stats(z, labels);
    REQUIRE(stats.size() == 2);
    CHECK(stats[0].mean == std::vector<double>{1.0, 0.0});
    CHECK(stats[0].stddev == doctest::Approx(1.0));  // two points at distance 1 from the mean
    CHECK(stats[1].stddev == doctest::Approx(0.0));
    CHECK(stats[0].count == 2);
}

TEST_CASE("imbalance rate hand cases") {
    auto s1 = stats_of(0, {0.0}, 1.0);
    CHECK(imbalance_rate({s1}, {stats_of(1, {1.0}, 1.0)}) == doctest::Approx(1.0));
    CHECK(imbalance_rate({s1}, {stats_of(1, {1.0}, 2.0)}) == doctest::Approx(2.0));
    CHECK(imbalance_rate({stats_of(0, {0.0}, 1.0), stats_of(1, {0.0}, 2.0)},
                         {stats_of(2, {0.0}, 3.0)}) == doctest::Approx(2.25));
    CHECK_THROWS_WITH_AS(imbalance_rate({s1}, {stats_of(9, {0.0}, 0.0)}),
                         doctest::Contains("class 9"), std::invalid_argument);
}

TEST_CASE("imbalance rate is at least one") {
    Rng rng(1);
    for (int t = 0; t < 50; ++t) {
        std::vector<ClassStats> seen{stats_of(0, {0.0}, rng.uniform(0.1, 3.0)),
                                     stats_of(1, {0.0}, rng.uniform(0.1, 3.0))};
        std::vector<ClassStats> novel{stats_of(2, {0.0}, rng.uniform(0.1, 3.0))};
        CHECK(imbalance_rate(seen, novel) >= 1.0);
    }
    auto same = stats_of(0, {0.0}, 1.7);
    CHECK(imbalance_rate({same}, {stats_of(1, {1.0}, 1.7)}) == doctest::Approx(1.0));
}

TEST_CASE("separation rate hand cases") {
    CHECK(separation_rate({stats_of(0, {1.0, 2.0}, 1.0)},
                          {stats_of(1, {1.0, 2.0}, 2.0)}) == doctest::Approx(0.0));
    CHECK(separation_rate({stats_of(0, {0.0}, 1.0)}, {stats_of(1, {4.0}, 1.0)}) ==
          doctest::Approx(2.0));
}

TEST_CASE("separation rate matches a brute-force pair loop") {
    Rng rng(2);
    std::vector<ClassStats> seen, novel;
    for (int i = 0; i < 3; ++i)
        seen.push_back(stats_of(i, {rng.normal(), rng.normal()}, rng.uniform(0.5, 2.0)));
    for (int i = 0; i < 2; ++i)
        novel.push_back(stats_of(10 + i, {rng.normal(), rng.normal()}, rng.uniform(0.5, 2.0)));
    double expect = 0.0;
    for (const auto& s : seen)
        for (const auto& n : novel) {
            double dx = s.mean[0] - n.mean[0], dy = s.mean[1] - n.mean[1];
            expect += std::sqrt(dx * dx + dy * dy) / (s.stddev + n.stddev);
        }
    expect /= 6.0;
    CHECK(separation_rate(seen, novel) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("rates are invariant under rotation and translation") {
    Rng rng(3);
    const std::size_t n = 60, d = 4;
    Matrix z(n, d);
    std::vector<int> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
        labels[i] = static_cast<int>(i % 3);
        for (std::size_t f = 0; f < d; ++f)
            z(i, f) = rng.normal() + 2.0 * labels[i];
    }
    auto split_stats = [&](const Matrix& m) {
        auto stats = class_stats(m, labels);
        std::vector<ClassStats> seen{stats[0], stats[1]}, novel{stats[2]};
        return std::pair{imbalance_rate(seen, novel), separation_rate(seen, novel)};
    };
    auto [imb0, sep0] = split_stats(z);

    Matrix rot = random_rotation(d, rng);
    Matrix moved = matmul(z, rot);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t f = 0; f < d; ++f) moved(i, f) += 7.5;
    auto [imb1, sep1] = split_stats(moved);
    CHECK(std::abs(imb0 - imb1) < 1e-9);
    CHECK(std::abs(sep0 - sep1) < 1e-9);
}

TEST_CASE("sc_acc scoring") {
    // maximal in both -> 1.0
    auto scores = sc_acc({{0.9, 0.8}, {0.1, 0.2}, {0.5, 0.5}});
    CHECK(scores[0] == doctest::Approx(1.0));
    CHECK(scores[1] == doctest::Approx(0.0));

    // symmetric opposites both score 0.5
    auto sym = sc_acc({{0.0, 1.0}, {1.0, 0.0}});
    CHECK(sym[0] == doctest::Approx(0.5));
    CHECK(sym[1] == doctest::Approx(0.5));

    // constant column normalizes to zeros
    auto flat = sc_acc({{0.4, 0.1}, {0.4, 0.9}});
    CHECK(flat[0] == doctest::Approx(0.0));
    CHECK(flat[1] == doctest::Approx(0.5));

    CHECK_THROWS_AS(sc_acc({{1.0, 1.0}}), std::invalid_argument);
}

TEST_CASE("sc_acc argmax matches an independent recomputation") {
    Rng rng(4);
    std::vector<std::pair<double, double>> cands;
    for (int i = 0; i < 5; ++i) cands.emplace_back(rng.uniform(), rng.uniform());
    auto scores = sc_acc(cands);

    // spreadsheet-style recomputation
    double slo = 1e9, shi = -1e9, alo = 1e9, ahi = -1e9;
    for (auto& [s, a] : cands) {
        slo = std::min(slo, s);
        shi = std::max(shi, s);
        alo = std::min(alo, a);
        ahi = std::max(ahi, a);
    }
    std::size_t best = 0;
    double best_score = -1.0;
    for (std::size_t i = 0; i < cands.size(); ++i) {
        double score = 0.5 * (cands[i].first - slo) / (shi - slo) +
                       0.5 * (cands[i].second - alo) / (ahi - alo);
        CHECK(scores[i] == doctest::Approx(score).epsilon(1e-12));
        if (score > best_score) {
            best_score = score;
            best = i;
        }
    }
    std::size_t got = 0;
    for (std::size_t i = 1; i < scores.size(); ++i)
        if (scores[i] > scores[got]) got = i;
    CHECK(got == best);
}

TEST_CASE("sc_acc argmax is invariant under increasing affine rescaling") {
    Rng rng(5);
    std::vector<std::pair<double, double>> cands;
    for (int i = 0; i < 6; ++i) cands.emplace_back(rng.uniform(), rng.uniform());
    auto base = sc_acc(cands);
    std::size_t base_arg = 0;
    for (std::size_t i = 1; i < base.size(); ++i)
        if (base[i] > base[base_arg]) base_arg = i;

    auto scaled = cands;
    for (auto& [s, a] : scaled) {
        s = 3.0 * s + 11.0;
        a = 0.25 * a - 2.0;
    }
    auto moved = sc_acc(scaled);
    std::size_t moved_arg = 0;
    for (std::size_t i = 1; i < moved.size(); ++i)
        if (moved[i] > moved[moved_arg]) moved_arg = i;
    CHECK(moved_arg == base_arg);
    for (std::size_t i = 0; i < base.size(); ++i)
        CHECK(moved[i] == doctest::Approx(base[i]).epsilon(1e-12));
}

TEST_CASE("metrics record serializes with the full key set") {
    MetricsRecord rec;
    rec.epoch = 3;
    rec.acc_all = 0.5;
    rec.acc_seen = 0.75;
    rec.imbalance_rate = 1.25;
    rec.separation_rate = 2.0;
    rec.sc = 0.4;
    rec.val_acc = 0.8;
    std::string json = rec.to_json();
    for (const char* key : {"epoch", "acc_all", "acc_seen", "acc_novel", "imbalance_rate",
                            "separation_rate", "sc", "val_acc", "sc_acc_score"})
        CHECK(json.find(key) != std::string::npos);
    CHECK(json.find("\"acc_novel\":null") != std::string::npos);
}
