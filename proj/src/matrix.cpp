#include "negm/matrix.hpp"

#include <cmath>
#include <cstring>

#include "negm/error.hpp"

#if NEGM_HAVE_CBLAS
#include <cblas.h>
#if __has_include(<dlfcn.h>)
#include <dlfcn.h>
#define NEGM_HAVE_DLFCN 1
#endif
#endif

namespace negm {

namespace {

// The gemm shapes here are small (mini-batches of ~50 rows); OpenBLAS thread
// fan-out costs more than it saves and single-threaded calls keep results
// bitwise stable regardless of machine load.
void pin_blas_threads() {
#if NEGM_HAVE_CBLAS && NEGM_HAVE_DLFCN
    static const bool done = [] {
        using SetThreads = void (*)(int);
        if (auto fn = reinterpret_cast<SetThreads>(
                dlsym(RTLD_DEFAULT, "openblas_set_num_threads"))) {
            fn(1);
        }
        return true;
    }();
    (void)done;
#endif
}

}  // namespace

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> data) {
    Matrix m;
    m.rows = data.size();
    m.cols = data.size() ? data.begin()->size() : 0;
    m.values.reserve(m.rows * m.cols);
    for (const auto& row : data) {
        if (row.size() != m.cols) fail(ErrorKind::usage, "from_rows: ragged row list");
        m.values.insert(m.values.end(), row.begin(), row.end());
    }
    return m;
}

bool Matrix::all_finite() const {
    for (double v : values) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

namespace {

void gemm(bool trans_a, bool trans_b, std::size_t m, std::size_t n, std::size_t k,
          const Matrix& a, const Matrix& b, Matrix& c) {
#if NEGM_HAVE_CBLAS
    pin_blas_threads();
    cblas_dgemm(CblasRowMajor, trans_a ? CblasTrans : CblasNoTrans,
                trans_b ? CblasTrans : CblasNoTrans, static_cast<int>(m),
                static_cast<int>(n), static_cast<int>(k), 1.0, a.values.data(),
                static_cast<int>(a.cols), b.values.data(), static_cast<int>(b.cols), 0.0,
                c.values.data(), static_cast<int>(c.cols));
#else
    // Fallback: ikj loops over the logical (non-transposed) operands.
    auto at = [&](std::size_t i, std::size_t j) { return trans_a ? a(j, i) : a(i, j); };
    auto bt = [&](std::size_t i, std::size_t j) { return trans_b ? b(j, i) : b(i, j); };
    for (std::size_t i = 0; i < m; ++i) {
        double* crow = c.row_ptr(i);
        for (std::size_t kk = 0; kk < k; ++kk) {
            const double av = at(i, kk);
            if (av == 0.0) continue;
            for (std::size_t j = 0; j < n; ++j) crow[j] += av * bt(kk, j);
        }
    }
#endif
}

}  // namespace

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols != b.rows)
        fail(ErrorKind::usage,
             "matmul: inner dimensions disagree: " + shape_string(a) + " x " + shape_string(b));
    Matrix c(a.rows, b.cols);
    gemm(false, false, a.rows, b.cols, a.cols, a, b, c);
    return c;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
    if (a.rows != b.rows)
        fail(ErrorKind::usage,
             "matmul_tn: inner dimensions disagree: " + shape_string(a) + "ᵀ x " + shape_string(b));
    Matrix c(a.cols, b.cols);
    gemm(true, false, a.cols, b.cols, a.rows, a, b, c);
    return c;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
    if (a.cols != b.cols)
        fail(ErrorKind::usage,
             "matmul_nt: inner dimensions disagree: " + shape_string(a) + " x " + shape_string(b) + "ᵀ");
    Matrix c(a.rows, b.rows);
    gemm(false, true, a.rows, b.rows, a.cols, a, b, c);
    return c;
}

Matrix concat_cols(const Matrix& left, const Matrix& right) {
    if (left.rows != right.rows)
        fail(ErrorKind::usage, "concat_cols: row counts disagree");
    Matrix out(left.rows, left.cols + right.cols);
    for (std::size_t r = 0; r < left.rows; ++r) {
        std::memcpy(out.row_ptr(r), left.row_ptr(r), left.cols * sizeof(double));
        std::memcpy(out.row_ptr(r) + left.cols, right.row_ptr(r), right.cols * sizeof(double));
    }
    return out;
}

Matrix slice_cols(const Matrix& m, std::size_t begin, std::size_t end) {
    if (begin > end || end > m.cols) fail(ErrorKind::usage, "slice_cols: range out of bounds");
    Matrix out(m.rows, end - begin);
    for (std::size_t r = 0; r < m.rows; ++r)
        std::memcpy(out.row_ptr(r), m.row_ptr(r) + begin, out.cols * sizeof(double));
    return out;
}

Matrix take_rows(const Matrix& m, const std::vector<std::size_t>& indices) {
    Matrix out(indices.size(), m.cols);
    for (std::size_t r = 0; r < indices.size(); ++r) {
        if (indices[r] >= m.rows) fail(ErrorKind::usage, "take_rows: index out of bounds");
        std::memcpy(out.row_ptr(r), m.row_ptr(indices[r]), m.cols * sizeof(double));
    }
    return out;
}

std::vector<double> column_mean(const Matrix& m) {
    std::vector<double> mean(m.cols, 0.0);
    for (std::size_t r = 0; r < m.rows; ++r) {
        const double* row = m.row_ptr(r);
        for (std::size_t c = 0; c < m.cols; ++c) mean[c] += row[c];
    }
    if (m.rows > 0)
        for (double& v : mean) v /= static_cast<double>(m.rows);
    return mean;
}

std::vector<double> column_variance(const Matrix& m, const std::vector<double>& mean,
                                    std::size_t ddof) {
    std::vector<double> var(m.cols, 0.0);
    if (m.rows <= ddof) return var;
    for (std::size_t r = 0; r < m.rows; ++r) {
        const double* row = m.row_ptr(r);
        for (std::size_t c = 0; c < m.cols; ++c) {
            const double d = row[c] - mean[c];
            var[c] += d * d;
        }
    }
    const double denom = static_cast<double>(m.rows - ddof);
    for (double& v : var) v /= denom;
    return var;
}

double squared_distance(const double* a, const double* b, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

double euclidean_norm(const double* a, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += a[i] * a[i];
    return std::sqrt(s);
}

std::string shape_string(const Matrix& m) {
    return "[" + std::to_string(m.rows) + "x" + std::to_string(m.cols) + "]";
}

}  // namespace negm
