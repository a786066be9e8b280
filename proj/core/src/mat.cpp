#include "stylerl/mat.hpp"

#include <cmath>

namespace stylerl {

// ikj loop order: the inner j-loop is a contiguous fused multiply-add over a
// row of B and a row of C, which the compiler vectorizes.
void matmul(const Mat& A, const Mat& B, Mat& C) {
    assert(A.cols == B.rows);
    C.rows = A.rows;
    C.cols = B.cols;
    C.a.assign(std::size_t(C.rows) * C.cols, 0.0);
    const int K = A.cols, N = B.cols;
    for (int i = 0; i < A.rows; ++i) {
        const double* ai = A.row(i);
        double* ci = C.row(i);
        for (int k = 0; k < K; ++k) {
            const double aik = ai[k];
            const double* bk = B.row(k);
            for (int j = 0; j < N; ++j) ci[j] += aik * bk[j];
        }
    }
}

void matmul_acc(const Mat& A, const Mat& B, Mat& C) {
    assert(A.cols == B.rows && C.rows == A.rows && C.cols == B.cols);
    const int K = A.cols, N = B.cols;
    for (int i = 0; i < A.rows; ++i) {
        const double* ai = A.row(i);
        double* ci = C.row(i);
        for (int k = 0; k < K; ++k) {
            const double aik = ai[k];
            const double* bk = B.row(k);
            for (int j = 0; j < N; ++j) ci[j] += aik * bk[j];
        }
    }
}

void matmul_nt(const Mat& A, const Mat& B, Mat& C) {
    assert(A.cols == B.cols);
    C.rows = A.rows;
    C.cols = B.rows;
    C.a.assign(std::size_t(C.rows) * C.cols, 0.0);
    const int K = A.cols;
    for (int i = 0; i < A.rows; ++i) {
        const double* ai = A.row(i);
        double* ci = C.row(i);
        for (int j = 0; j < B.rows; ++j) {
            const double* bj = B.row(j);
            double s = 0.0;
            for (int k = 0; k < K; ++k) s += ai[k] * bj[k];
            ci[j] = s;
        }
    }
}

void matmul_nt_acc(const Mat& A, const Mat& B, Mat& C) {
    assert(A.cols == B.cols && C.rows == A.rows && C.cols == B.rows);
    const int K = A.cols;
    for (int i = 0; i < A.rows; ++i) {
        const double* ai = A.row(i);
        double* ci = C.row(i);
        for (int j = 0; j < B.rows; ++j) {
            const double* bj = B.row(j);
            double s = 0.0;
            for (int k = 0; k < K; ++k) s += ai[k] * bj[k];
            ci[j] += s;
        }
    }
}

void matmul_tn_acc(const Mat& A, const Mat& B, Mat& C) {
    assert(A.rows == B.rows && C.rows == A.cols && C.cols == B.cols);
    const int N = B.cols;
    for (int k = 0; k < A.rows; ++k) {
        const double* ak = A.row(k);
        const double* bk = B.row(k);
        for (int i = 0; i < A.cols; ++i) {
            const double aki = ak[i];
            double* ci = C.row(i);
            for (int j = 0; j < N; ++j) ci[j] += aki * bk[j];
        }
    }
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
    assert(x.size() == y.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

double dot(std::span<const double> x, std::span<const double> y) {
    assert(x.size() == y.size());
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
    return s;
}

double l2_norm(std::span<const double> x) { return std::sqrt(dot(x, x)); }

}  // namespace stylerl
