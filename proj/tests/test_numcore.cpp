#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>

#include "openima/finite_diff.hpp"
#include "openima/matrix.hpp"
#include "openima/rng.hpp"
#include "openima/special.hpp"

using namespace openima;

namespace {

// independent naive product, j-outer loop order
Matrix naive_matmul(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows(), b.cols());
    for (std::size_t j = 0; j < b.cols(); ++j)
        for (std::size_t i = 0; i < a.rows(); ++i) {
            double s = 0.0;
            for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
            out(i, j) = s;
        }
    return out;
}

Matrix random_matrix(std::size_t r, std::size_t c, Rng& rng) {
    Matrix m(r, c);
    for (double& v : m.data()) v = rng.uniform(-1.0, 1.0);
    return m;
}

// high-precision cdf oracle: 0.5 + pdf(x) * sum x^(2k+1)/(1*3*...*(2k+1))
double cdf_series_oracle(double x) {
    double term = x;
    double sum = x;
    for (int k = 1; k < 400; ++k) {
        term *= x * x / (2.0 * k + 1.0);
        sum += term;
        if (std::abs(term) < 1e-18) break;
    }
    return 0.5 + std_normal_pdf(x) * sum;
}

}  // namespace

TEST_CASE("matmul identity and hand cases") {
    Matrix a = Matrix::from_rows({{1, 2}, {3, 4}});
    CHECK(matmul(Matrix::identity(2), a) == a);

    Matrix row = Matrix::from_rows({{1, 2}});
    Matrix col = Matrix::from_rows({{3}, {4}});
    Matrix prod = matmul(row, col);
    CHECK(prod.rows() == 1);
    CHECK(prod.cols() == 1);
    CHECK(prod(0, 0) == doctest::Approx(11.0));
}

TEST_CASE("matmul matches the naive-loop oracle") {
    Rng rng(11);
    Matrix a = random_matrix(5, 4, rng);
    Matrix b = random_matrix(4, 3, rng);
    CHECK(max_abs_diff(matmul(a, b), naive_matmul(a, b)) < 1e-14);
}

TEST_CASE("matmul rejects mismatched shapes naming both") {
    Matrix a(2, 3), b(4, 2);
    CHECK_THROWS_WITH_AS(matmul(a, b), doctest::Contains("2x3"), std::invalid_argument);
    CHECK_THROWS_WITH_AS(matmul(a, b), doctest::Contains("4x2"), std::invalid_argument);
}

TEST_CASE("matmul associativity on random triples") {
    Rng rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        Matrix a = random_matrix(4, 6, rng);
        Matrix b = random_matrix(6, 5, rng);
        Matrix c = random_matrix(5, 3, rng);
        Matrix left = matmul(matmul(a, b), c);
        Matrix right = matmul(a, matmul(b, c));
        double scale_ref = 0.0;
        for (double v : left.data()) scale_ref = std::max(scale_ref, std::abs(v));
        CHECK(max_abs_diff(left, right) < 1e-9 * std::max(1.0, scale_ref));
    }
}

TEST_CASE("l2_normalize_rows") {
    Matrix m = Matrix::from_rows({{3, 4}});
    Matrix n = l2_normalize_rows(m);
    CHECK(n(0, 0) == doctest::Approx(0.6));
    CHECK(n(0, 1) == doctest::Approx(0.8));

    Matrix z = Matrix::from_rows({{0, 0}, {1, 1}});
    std::vector<std::size_t> degenerate;
    Matrix nz = l2_normalize_rows(z, 1e-12, &degenerate);
    CHECK(degenerate == std::vector<std::size_t>{0});
    CHECK(nz(0, 0) == 0.0);
    CHECK(nz(0, 1) == 0.0);

    Rng rng(3);
    Matrix r = random_matrix(10, 6, rng);
    Matrix nr = l2_normalize_rows(r);
    for (std::size_t i = 0; i < nr.rows(); ++i)
        CHECK(std::abs(row_norm(nr, i) - 1.0) < 1e-12);
}

TEST_CASE("normal cdf and pdf basics") {
    CHECK(std::abs(std_normal_cdf(0.0) - 0.5) < 1e-9);
    CHECK(std_normal_pdf(0.0) == doctest::Approx(0.3989422804014327).epsilon(1e-12));
    CHECK(std::abs(std_normal_cdf(1.96) - cdf_series_oracle(1.96)) < 1.5e-7);
    CHECK(std::abs(std_normal_cdf(1.96) - 0.9750021048517795) < 1.5e-7);
    CHECK(std_normal_pdf(2.5) == doctest::Approx(std_normal_pdf(-2.5)));
}

TEST_CASE("cdf approximation error bound over a wide range") {
    for (double x = -8.0; x <= 8.0; x += 0.05)
        CHECK(std::abs(std_normal_cdf(x) - cdf_series_oracle(x)) < 1.5e-7);
}

TEST_CASE("cdf monotone and reflective on the grid") {
    double prev = -1.0;
    for (int i = 0; i <= 10000; ++i) {
        double x = -8.0 + 16.0 * i / 10000.0;
        double c = std_normal_cdf(x);
        CHECK(c >= prev);
        CHECK(std::abs(c + std_normal_cdf(-x) - 1.0) < 1e-12);
        prev = c;
    }
}

TEST_CASE("finite differences on simple functions") {
    auto square = [](const std::vector<double>& p) { return p[0] * p[0]; };
    auto g = finite_diff_grad(square, {3.0}, 1e-5);
    CHECK(std::abs(g[0] - 6.0) < 1e-6);

    auto constant = [](const std::vector<double>&) { return 4.2; };
    auto gz = finite_diff_grad(constant, {1.0, 2.0, 3.0}, 1e-5);
    for (double v : gz) CHECK(v == 0.0);

    auto bad = [](const std::vector<double>& p) {
        return p[1] > 1.0 ? std::numeric_limits<double>::quiet_NaN() : 0.0;
    };
    CHECK_THROWS_WITH_AS(finite_diff_grad(bad, {0.0, 1.0}, 1e-3),
                         doctest::Contains("coordinate 1"), std::runtime_error);
}

TEST_CASE("rng replay and stream independence") {
    Rng a(42, 7), b(42, 7);
    for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());

    Rng c(42, 7), d(42, 8);
    int same = 0;
    for (int i = 0; i < 64; ++i) same += c.next_u64() == d.next_u64() ? 1 : 0;
    CHECK(same == 0);

    Rng e(42, 7), f(42, 7);
    for (int i = 0; i < 100; ++i) {
        CHECK(e.normal() == f.normal());
        CHECK(e.uniform_int(17) == f.uniform_int(17));
    }
}

TEST_CASE("rng distribution sanity") {
    Rng rng(0);
    double sum = 0.0, sum2 = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        double z = rng.normal();
        sum += z;
        sum2 += z * z;
    }
    CHECK(std::abs(sum / n) < 0.01);
    CHECK(std::abs(sum2 / n - 1.0) < 0.02);

    for (int i = 0; i < 1000; ++i) CHECK(rng.uniform_int(5) < 5);

    std::vector<int> v{1, 2, 3, 4, 5, 6};
    auto w = v;
    Rng s1(9), s2(9);
    s1.shuffle(v);
    s2.shuffle(w);
    CHECK(v == w);
}
