#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <span>
#include <utility>
#include <vector>

#include "thermoscope/error.hpp"
#include "thermoscope/parallel.hpp"
#include "thermoscope/symbolic.hpp"

namespace thermoscope {

inline constexpr int kMaxCocycleDimension = 8;

/// Cocycle matrix; stack storage up to 8x8 so word products never allocate.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, kMaxCocycleDimension,
                             kMaxCocycleDimension>;

/// M_w = M_{w_n} ... M_{w_2} M_{w_1}: later symbols multiply on the left.
inline Matrix ordered_product(const std::vector<Matrix>& matrices, std::span<const Symbol> w)
{
    if (matrices.empty())
        throw ValidationError("empty matrix list");
    const auto d = matrices.front().rows();
    Matrix acc = Matrix::Identity(d, d);
    for (Symbol s : w) {
        if (s >= matrices.size())
            throw ValidationError("symbol has no matrix");
        acc = (matrices[s] * acc).eval();
    }
    return acc;
}

/// Singular values (sigma1, sigma2) of a real 2x2 matrix from the closed-form
/// eigenvalues of A^T A; sigma2 is taken as |det|/sigma1 for accuracy.
inline std::pair<double, double> singular_values_2x2(const Matrix& A)
{
    if (A.rows() != 2 || A.cols() != 2)
        throw ValidationError("singular_values_2x2 needs a 2x2 matrix");
    const double a = A(0, 0), b = A(0, 1), c = A(1, 0), d = A(1, 1);
    const double p = a * a + c * c;
    const double r = b * b + d * d;
    const double q = a * b + c * d;
    const double half_trace = 0.5 * (p + r);
    const double disc = std::hypot(0.5 * (p - r), q);
    const double top = half_trace + disc;
    const double sigma1 = std::sqrt(std::max(0.0, top));
    const double det = std::fabs(a * d - b * c);
    const double sigma2 = sigma1 > 0.0 ? std::min(sigma1, det / sigma1) : 0.0;
    return {sigma1, sigma2};
}

/// Spectral norm (largest singular value).
inline double operator_norm(const Matrix& A)
{
    if (A.rows() == 1 && A.cols() == 1)
        return std::fabs(A(0, 0));
    if (A.rows() == 2 && A.cols() == 2)
        return singular_values_2x2(A).first;
    Eigen::MatrixXd ata = (A.transpose() * A).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(ata, Eigen::EigenvaluesOnly);
    return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}

/// Perron eigendata of an entrywise nonnegative primitive matrix, stored as
/// log of the root (after an internal rescaling) plus positive left/right
/// eigenvectors with left . right = 1.
struct PerronData {
    double log_root = 0.0;
    Eigen::VectorXd left;
    Eigen::VectorXd right;
};

namespace detail {

inline Eigen::VectorXd positive_part(const Eigen::VectorXd& v)
{
    Eigen::VectorXd out = v;
    if (out.sum() < 0)
        out = -out;
    for (Eigen::Index i = 0; i < out.size(); ++i)
        out(i) = std::max(out(i), 0.0);
    return out;
}

inline Eigen::VectorXd perron_vector_dense(const Eigen::MatrixXd& A)
{
    Eigen::EigenSolver<Eigen::MatrixXd> es(A, true);
    const auto& vals = es.eigenvalues();
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < vals.size(); ++i)
        if (vals(i).real() > vals(best).real())
            best = i;
    Eigen::VectorXd v = es.eigenvectors().col(best).real();
    return positive_part(v);
}

// Power iteration with Rayleigh-quotient stopping for large state spaces.
inline Eigen::VectorXd perron_vector_power(const Eigen::MatrixXd& A, double tolerance = 1e-14)
{
    const auto n = A.rows();
    Eigen::VectorXd v = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
    double previous = 0.0;
    for (int it = 0; it < 200000; ++it) {
        // (A + I) shares the Perron vector and is aperiodic.
        Eigen::VectorXd w = A * v + v;
        const double rq = v.dot(w) / v.dot(v);
        v = w / w.norm();
        if (it > 0 && std::fabs(rq - previous) <= tolerance * std::fabs(rq))
            break;
        previous = rq;
    }
    return positive_part(v);
}

} // namespace detail

/// Perron root and eigenvectors of a nonnegative primitive matrix. Direct
/// eigensolve up to 256 states, power iteration beyond. The root is
/// polished by the two-sided Rayleigh quotient with compensated sums.
inline PerronData perron(const Eigen::MatrixXd& A_in)
{
    if (A_in.rows() != A_in.cols() || A_in.rows() == 0)
        throw ValidationError("perron needs a nonempty square matrix");
    const double scale = A_in.cwiseAbs().maxCoeff();
    if (!(scale > 0.0))
        throw ValidationError("perron needs a nonzero matrix");
    Eigen::MatrixXd A = A_in / scale;

    Eigen::VectorXd right, left;
    if (A.rows() <= 256) {
        right = detail::perron_vector_dense(A);
        left = detail::perron_vector_dense(A.transpose());
    } else {
        right = detail::perron_vector_power(A);
        left = detail::perron_vector_power(A.transpose());
    }
    // A few sweeps of the nonnegative matrix rebuild every entry as a sum of
    // positive terms, so tiny components come out with full relative accuracy.
    const Eigen::MatrixXd At = A.transpose();
    for (int sweep = 0; sweep < 32; ++sweep) {
        right = A * right;
        right /= right.sum();
        left = At * left;
        left /= left.sum();
    }
    Eigen::VectorXd Ar = A * right;
    CompensatedSum num, den;
    for (Eigen::Index i = 0; i < A.rows(); ++i) {
        num.add(left(i) * Ar(i));
        den.add(left(i) * right(i));
    }
    const double root = num.value() / den.value();
    if (!(root > 0.0))
        throw ValidationError("matrix is not primitive: Perron root vanished");
    PerronData out;
    out.log_root = std::log(root) + std::log(scale);
    out.right = right / right.sum();
    out.left = left / left.dot(out.right);
    return out;
}

} // namespace thermoscope
