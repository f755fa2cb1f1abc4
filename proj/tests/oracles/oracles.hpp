#pragma once

// Reference implementations used only by tests. Everything here is written from the
// definitions, dense and slow, and shares no code with the library's algorithms.

#include <algorithm>
#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;
using Index = Eigen::Index;

// Duplication matrix from its definition: column p has ones at vec positions (i,j) and (j,i)
// where p enumerates the lower triangle column by column.
inline RMatrix duplication(Index n) {
    RMatrix Q = RMatrix::Zero(n * n, n * (n + 1) / 2);
    Index p = 0;
    for (Index j = 0; j < n; ++j)
        for (Index i = j; i < n; ++i, ++p) {
            Q(i + j * n, p) = 1.0;
            Q(j + i * n, p) = 1.0;
        }
    return Q;
}

inline CVector lower_stack(const CMatrix& A) {
    const Index n = A.rows();
    CVector f(n * (n + 1) / 2);
    Index p = 0;
    for (Index j = 0; j < n; ++j)
        for (Index i = j; i < n; ++i) f(p++) = A(i, j);
    return f;
}

inline CVector vec(const CMatrix& A) { return Eigen::Map<const CVector>(A.data(), A.size()); }

// Kronecker product.
inline CMatrix kron(const CMatrix& A, const CMatrix& B) {
    CMatrix K(A.rows() * B.rows(), A.cols() * B.cols());
    for (Index i = 0; i < A.rows(); ++i)
        for (Index j = 0; j < A.cols(); ++j) K.block(i * B.rows(), j * B.cols(), B.rows(), B.cols()) = A(i, j) * B;
    return K;
}

// Dense design matrix (V^T kron I) Q.
inline CMatrix design(const CMatrix& V) {
    const Index n = V.rows();
    return kron(V.transpose(), CMatrix::Identity(n, n)) * duplication(n).cast<cplx>();
}

inline CMatrix random_cmatrix(Index r, Index c, std::mt19937_64& rng) {
    std::normal_distribution<double> nd;
    CMatrix M(r, c);
    for (Index i = 0; i < r; ++i)
        for (Index j = 0; j < c; ++j) M(i, j) = cplx(nd(rng), nd(rng));
    return M;
}

inline CMatrix random_symmetric(Index n, std::mt19937_64& rng) {
    CMatrix M = random_cmatrix(n, n, rng);
    return M + M.transpose();
}

// Weighted complex lasso  min ||Ax - b||^2 + lambda * sum w_i |x_i|  as the second-order
// cone program  min ||A x - b||^2 + lambda w^T t  s.t. |x_i| <= t_i, solved by a primal
// log-barrier interior-point method on the real variables (Re x, Im x, t).
struct SocpResult {
    CVector x;
    double objective = 0.0;
    double gap = 0.0;  // duality-gap bound 2n / tau at exit
};

inline SocpResult socp_lasso(const CMatrix& A, const CVector& b, double lambda, const RVector& w) {
    const Index m = A.rows(), n = A.cols();
    // real form: A x = (Ar + i Ai)(u + i v)
    RMatrix M(2 * m, 2 * n);
    M << A.real(), -A.imag(), A.imag(), A.real();
    RVector c(2 * m);
    c << b.real(), b.imag();
    const RMatrix H0 = 2.0 * M.transpose() * M;
    const RVector g0 = -2.0 * M.transpose() * c;

    auto f0 = [&](const RVector& z) {
        RVector r = M * z.head(2 * n) - c;
        return r.squaredNorm() + lambda * w.dot(z.tail(n));
    };
    // strictly feasible start
    RVector z = RVector::Zero(3 * n);
    z.tail(n).setOnes();
    double tau = 1.0;
    const double scale = std::max(1.0, c.squaredNorm());
    tau = 10.0 / scale;
    for (int outer = 0; outer < 200; ++outer) {
        for (int it = 0; it < 200; ++it) {
            RVector grad = RVector::Zero(3 * n);
            RMatrix Hs = RMatrix::Zero(3 * n, 3 * n);
            grad.head(2 * n) = tau * (H0 * z.head(2 * n) + g0);
            grad.tail(n) = tau * lambda * w;
            Hs.topLeftCorner(2 * n, 2 * n) = tau * H0;
            for (Index i = 0; i < n; ++i) {
                const Index iu = i, iv = n + i, it_ = 2 * n + i;
                const double u = z(iu), v = z(iv), t = z(it_);
                const double s = t * t - u * u - v * v;  // > 0
                // phi = -log s
                grad(iu) += 2.0 * u / s;
                grad(iv) += 2.0 * v / s;
                grad(it_) += -2.0 * t / s;
                const Index id[3] = {iu, iv, it_};
                const double ds[3] = {-2.0 * u, -2.0 * v, 2.0 * t};
                const double d2[3] = {-2.0, -2.0, 2.0};
                for (int a = 0; a < 3; ++a) {
                    for (int bq = 0; bq < 3; ++bq) Hs(id[a], id[bq]) += ds[a] * ds[bq] / (s * s);
                    Hs(id[a], id[a]) -= d2[a] / s;
                }
            }
            RVector dz = Hs.ldlt().solve(-grad);
            const double dec = -grad.dot(dz);
            if (dec / 2.0 <= 1e-12) break;
            auto phi = [&](const RVector& y) -> double {
                double val = tau * f0(y);
                for (Index i = 0; i < n; ++i) {
                    double s = y(2 * n + i) * y(2 * n + i) - y(i) * y(i) - y(n + i) * y(n + i);
                    if (!(s > 0.0) || y(2 * n + i) <= 0.0) return INFINITY;
                    val -= std::log(s);
                }
                return val;
            };
            const double p0 = phi(z);
            double step = 1.0;
            while (step > 1e-20) {
                RVector zn = z + step * dz;
                double pn = phi(zn);
                if (std::isfinite(pn) && pn <= p0 - 0.25 * step * dec) {
                    z = zn;
                    break;
                }
                step *= 0.5;
            }
            if (step <= 1e-20) break;
        }
        const double gap = 2.0 * static_cast<double>(n) / tau;
        if (gap <= 1e-13 * std::max(1.0, f0(z))) break;
        tau *= 8.0;
    }
    SocpResult out;
    out.x = CVector(n);
    for (Index i = 0; i < n; ++i) out.x(i) = cplx(z(i), z(n + i));
    out.objective = (A * out.x - b).squaredNorm() + lambda * (w.array() * out.x.array().abs()).sum();
    out.gap = 2.0 * static_cast<double>(n) / tau;
    return out;
}

// Turning points counted directly from the definition (strict local extrema).
inline long turning_points(const std::vector<double>& s) {
    long t = 0;
    for (size_t k = 1; k + 1 < s.size(); ++k) {
        bool peak = s[k] > s[k - 1] && s[k] > s[k + 1];
        bool trough = s[k] < s[k - 1] && s[k] < s[k + 1];
        t += (peak || trough) ? 1 : 0;
    }
    return t;
}

// Exhaustive expected turning-point count of n i.i.d. continuous samples: each interior
// triple is a turning point with probability 4/6, found by enumerating the 6 orderings.
inline double turning_point_mean(long n) {
    int tp = 0, total = 0;
    int p[3] = {0, 1, 2};
    do {
        ++total;
        bool peak = p[1] > p[0] && p[1] > p[2];
        bool trough = p[1] < p[0] && p[1] < p[2];
        tp += (peak || trough) ? 1 : 0;
    } while (std::next_permutation(p, p + 3));
    return static_cast<double>(n - 2) * tp / total;
}

}  // namespace oracle
