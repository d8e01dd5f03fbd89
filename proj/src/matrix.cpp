#include "openima/matrix.hpp"

#include <cmath>
#include <stdexcept>

namespace openima {

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    std::size_t nr = rows.size();
    std::size_t nc = nr ? rows.begin()->size() : 0;
    Matrix m(nr, nc);
    std::size_t r = 0;
    for (const auto& row : rows) {
        if (row.size() != nc) throw std::invalid_argument("from_rows: ragged rows");
        std::size_t c = 0;
        for (double v : row) m(r, c++) = v;
        ++r;
    }
    return m;
}

bool Matrix::all_finite() const {
    for (double v : data_)
        if (!std::isfinite(v)) return false;
    return true;
}

std::string Matrix::shape_str() const {
    return std::to_string(rows_) + "x" + std::to_string(cols_);
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows())
        throw std::invalid_argument("matmul: dimension mismatch (" + a.shape_str() +
                                    " vs " + b.shape_str() + ")");
    Matrix out(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const double* arow = a.row(i);
        double* orow = out.row(i);
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = arow[k];
            const double* brow = b.row(k);
            for (std::size_t j = 0; j < b.cols(); ++j) orow[j] += aik * brow[j];
        }
    }
    return out;
}

Matrix transpose(const Matrix& m) {
    Matrix out(m.cols(), m.rows());
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) out(j, i) = m(i, j);
    return out;
}

namespace {
void check_same_shape(const Matrix& a, const Matrix& b, const char* op) {
    if (!a.same_shape(b))
        throw std::invalid_argument(std::string(op) + ": shape mismatch (" + a.shape_str() +
                                    " vs " + b.shape_str() + ")");
}
}  // namespace

Matrix add(const Matrix& a, const Matrix& b) {
    check_same_shape(a, b, "add");
    Matrix out = a;
    for (std::size_t i = 0; i < out.data().size(); ++i) out.data()[i] += b.data()[i];
    return out;
}

Matrix sub(const Matrix& a, const Matrix& b) {
    check_same_shape(a, b, "sub");
    Matrix out = a;
    for (std::size_t i = 0; i < out.data().size(); ++i) out.data()[i] -= b.data()[i];
    return out;
}

Matrix scale(const Matrix& a, double c) {
    Matrix out = a;
    for (double& v : out.data()) v *= c;
    return out;
}

Matrix hadamard(const Matrix& a, const Matrix& b) {
    check_same_shape(a, b, "hadamard");
    Matrix out = a;
    for (std::size_t i = 0; i < out.data().size(); ++i) out.data()[i] *= b.data()[i];
    return out;
}

Matrix l2_normalize_rows(const Matrix& m, double eps, std::vector<std::size_t>* degenerate) {
    Matrix out = m;
    for (std::size_t r = 0; r < m.rows(); ++r) {
        double norm = row_norm(m, r);
        if (norm < eps) {
            if (degenerate) degenerate->push_back(r);
            continue;
        }
        double inv = 1.0 / norm;
        for (std::size_t c = 0; c < m.cols(); ++c) out(r, c) *= inv;
    }
    return out;
}

double dot(const double* a, const double* b, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
}

double squared_distance(const double* a, const double* b, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

double row_norm(const Matrix& m, std::size_t r) {
    return std::sqrt(dot(m.row(r), m.row(r), m.cols()));
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
    check_same_shape(a, b, "max_abs_diff");
    double worst = 0.0;
    for (std::size_t i = 0; i < a.data().size(); ++i)
        worst = std::max(worst, std::abs(a.data()[i] - b.data()[i]));
    return worst;
}

}  // namespace openima
