#pragma once

#include <cassert>
#include <cstddef>
#include <span>
#include <vector>

namespace stylerl {

// Dense row-major matrix of doubles. All model math runs in 64-bit.
struct Mat {
    int rows = 0;
    int cols = 0;
    std::vector<double> a;

    Mat() = default;
    Mat(int r, int c) : rows(r), cols(c), a(std::size_t(r) * std::size_t(c), 0.0) {}

    double* row(int r) { return a.data() + std::size_t(r) * cols; }
    const double* row(int r) const { return a.data() + std::size_t(r) * cols; }
    double& at(int r, int c) { return a[std::size_t(r) * cols + c]; }
    double at(int r, int c) const { return a[std::size_t(r) * cols + c]; }
    std::size_t size() const { return a.size(); }
    void zero() { std::fill(a.begin(), a.end(), 0.0); }
    bool same_shape(const Mat& o) const { return rows == o.rows && cols == o.cols; }
};

// C = A * B
void matmul(const Mat& A, const Mat& B, Mat& C);
// C = A * B^T
void matmul_nt(const Mat& A, const Mat& B, Mat& C);
// C += A^T * B
void matmul_tn_acc(const Mat& A, const Mat& B, Mat& C);
// C += A * B
void matmul_acc(const Mat& A, const Mat& B, Mat& C);
// C += A * B^T
void matmul_nt_acc(const Mat& A, const Mat& B, Mat& C);

// y += x (flat)
void axpy(double alpha, std::span<const double> x, std::span<double> y);
double dot(std::span<const double> x, std::span<const double> y);
double l2_norm(std::span<const double> x);

}  // namespace stylerl
