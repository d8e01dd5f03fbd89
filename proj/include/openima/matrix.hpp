#pragma once

#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

namespace openima {

// Dense row-major matrix of 64-bit floats. Everything numeric in the
// project (features, embeddings, weights, logits, cluster centers) lives
// in this type.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static Matrix identity(std::size_t n);
    static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool empty() const { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    double* row(std::size_t r) { return data_.data() + r * cols_; }
    const double* row(std::size_t r) const { return data_.data() + r * cols_; }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    bool same_shape(const Matrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }
    bool all_finite() const;
    std::string shape_str() const;

    friend bool operator==(const Matrix& a, const Matrix& b) {
        return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
    }

private:
    std::size_t rows_ = 0, cols_ = 0;
    std::vector<double> data_;
};

// Product with a fixed accumulation order (k ascending) so that results
// are bit-reproducible run to run. Throws std::invalid_argument on a
// dimension mismatch, reporting both shapes.
Matrix matmul(const Matrix& a, const Matrix& b);

Matrix transpose(const Matrix& m);
Matrix add(const Matrix& a, const Matrix& b);
Matrix sub(const Matrix& a, const Matrix& b);
Matrix scale(const Matrix& a, double c);
Matrix hadamard(const Matrix& a, const Matrix& b);

// Row-wise l2 normalization. Rows whose norm is below eps are passed
// through unchanged; their indices are appended to *degenerate when the
// caller provides it.
Matrix l2_normalize_rows(const Matrix& m, double eps = 1e-12,
                         std::vector<std::size_t>* degenerate = nullptr);

double dot(const double* a, const double* b, std::size_t n);
double squared_distance(const double* a, const double* b, std::size_t n);
double row_norm(const Matrix& m, std::size_t r);
double max_abs_diff(const Matrix& a, const Matrix& b);

}  // namespace openima
