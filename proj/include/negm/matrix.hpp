#pragma once

#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

namespace negm {

// Dense row-major matrix of doubles. The whole library runs in 64-bit
// precision; the datasets are small and test determinism matters more
// than speed.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> values;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), values(r * c, fill) {}

    static Matrix from_rows(std::initializer_list<std::initializer_list<double>> data);

    double& operator()(std::size_t r, std::size_t c) { return values[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return values[r * cols + c]; }

    double* row_ptr(std::size_t r) { return values.data() + r * cols; }
    const double* row_ptr(std::size_t r) const { return values.data() + r * cols; }

    bool same_shape(const Matrix& other) const {
        return rows == other.rows && cols == other.cols;
    }

    bool all_finite() const;
};

// c = a(m×k) · b(k×n)
Matrix matmul(const Matrix& a, const Matrix& b);
// c = aᵀ(m×k) · b(·×n), a stored k-major as (k×m)
Matrix matmul_tn(const Matrix& a, const Matrix& b);
// c = a(m×k) · bᵀ, b stored as (n×k)
Matrix matmul_nt(const Matrix& a, const Matrix& b);

Matrix concat_cols(const Matrix& left, const Matrix& right);
Matrix slice_cols(const Matrix& m, std::size_t begin, std::size_t end);
Matrix take_rows(const Matrix& m, const std::vector<std::size_t>& indices);

std::vector<double> column_mean(const Matrix& m);
// Sample variance with the given denominator offset: denominator = rows - ddof.
std::vector<double> column_variance(const Matrix& m, const std::vector<double>& mean,
                                    std::size_t ddof = 0);

double squared_distance(const double* a, const double* b, std::size_t n);
double euclidean_norm(const double* a, std::size_t n);

std::string shape_string(const Matrix& m);

}  // namespace negm
