#include "linalg.hpp"

#include <lapacke.h>

#include <cmath>
#include <string>

#include "error.hpp"

namespace kdv {

BandedMatrix::BandedMatrix(std::size_t n, int kl, int ku)
    : n_(n), kl_(kl), ku_(ku), ldab_(2 * kl + ku + 1), ab_(static_cast<std::size_t>(ldab_) * n, 0.0)
{
}

void BandedMatrix::set(std::size_t row, std::size_t col, double v)
{
    long d = static_cast<long>(row) - static_cast<long>(col);
    require(d <= kl_ && -d <= ku_, Errc::invalid_parameter, "entry outside the band");
    // Column-major band storage with kl extra rows reserved for the LU fill-in.
    ab_[col * static_cast<std::size_t>(ldab_) + static_cast<std::size_t>(kl_ + ku_ + d)] = v;
}

double BandedMatrix::get(std::size_t row, std::size_t col) const
{
    long d = static_cast<long>(row) - static_cast<long>(col);
    if (d > kl_ || -d > ku_) return 0.0;
    return ab_[col * static_cast<std::size_t>(ldab_) + static_cast<std::size_t>(kl_ + ku_ + d)];
}

std::vector<double> BandedMatrix::multiply(const std::vector<double>& x) const
{
    std::vector<double> y(n_, 0.0);
    for (std::size_t i = 0; i < n_; ++i) {
        std::size_t lo = i > static_cast<std::size_t>(kl_) ? i - static_cast<std::size_t>(kl_) : 0;
        std::size_t hi = std::min(n_ - 1, i + static_cast<std::size_t>(ku_));
        double s = 0.0;
        for (std::size_t j = lo; j <= hi; ++j) s += get(i, j) * x[j];
        y[i] = s;
    }
    return y;
}

BandedMatrix::Factorization BandedMatrix::factorize() const
{
    Factorization f;
    f.n_ = n_;
    f.kl_ = kl_;
    f.ku_ = ku_;
    f.ldab_ = ldab_;
    f.lu_ = ab_;
    auto n = static_cast<lapack_int>(n_);
    std::vector<lapack_int> piv(n_);

    double anorm = 0.0;
    for (std::size_t j = 0; j < n_; ++j) {
        double col = 0.0;
        for (int r = kl_; r < ldab_; ++r) col += std::fabs(ab_[j * static_cast<std::size_t>(ldab_) + static_cast<std::size_t>(r)]);
        anorm = std::max(anorm, col);
    }
    lapack_int info = LAPACKE_dgbtrf(LAPACK_COL_MAJOR, n, n, kl_, ku_, f.lu_.data(), ldab_, piv.data());
    if (info != 0) fail(Errc::solver_failure, "banded LU failed (info " + std::to_string(info) + ")");
    info = LAPACKE_dgbcon(LAPACK_COL_MAJOR, '1', n, kl_, ku_, f.lu_.data(), ldab_, piv.data(), anorm, &f.rcond_);
    if (info != 0) f.rcond_ = 0.0;
    f.piv_.assign(piv.begin(), piv.end());
    return f;
}

std::vector<double> BandedMatrix::Factorization::solve(std::vector<double> rhs) const
{
    require(rhs.size() == n_, Errc::invalid_parameter, "right-hand side has the wrong length");
    std::vector<lapack_int> piv(piv_.begin(), piv_.end());
    auto n = static_cast<lapack_int>(n_);
    lapack_int info = LAPACKE_dgbtrs(LAPACK_COL_MAJOR, 'N', n, kl_, ku_, 1, lu_.data(), ldab_, piv.data(),
                                     rhs.data(), n);
    if (info != 0) fail(Errc::solver_failure, "banded back-substitution failed");
    return rhs;
}

BandedMatrix::Solution BandedMatrix::solve(const std::vector<double>& rhs) const
{
    auto f = factorize();
    Solution s;
    s.x = f.solve(rhs);
    s.rcond = f.rcond();
    return s;
}

std::vector<double> tridiagonal_lowest_eigenvalues(const std::vector<double>& diag,
                                                   const std::vector<double>& off, int count)
{
    auto n = static_cast<lapack_int>(diag.size());
    require(off.size() + 1 == diag.size(), Errc::invalid_parameter, "tridiagonal sizes disagree");
    auto d = diag;
    auto e = off;
    e.push_back(0.0);
    lapack_int found = 0;
    std::vector<double> w(diag.size());
    std::vector<lapack_int> isuppz(2 * diag.size());
    lapack_int info = LAPACKE_dstevr(LAPACK_COL_MAJOR, 'N', 'I', n, d.data(), e.data(), 0.0, 0.0, 1,
                                     count, 0.0, &found, w.data(), nullptr, 1, isuppz.data());
    if (info != 0 || found != count) fail(Errc::eigensolver_failure, "tridiagonal eigensolve failed");
    w.resize(static_cast<std::size_t>(count));
    return w;
}

LeastSquares least_squares(std::vector<double> a, std::size_t m, std::size_t k, std::vector<double> b)
{
    require(a.size() == m * k && b.size() == m && m >= k, Errc::invalid_parameter,
            "least-squares dimensions disagree");
    lapack_int info = LAPACKE_dgels(LAPACK_COL_MAJOR, 'N', static_cast<lapack_int>(m),
                                    static_cast<lapack_int>(k), 1, a.data(),
                                    static_cast<lapack_int>(m), b.data(), static_cast<lapack_int>(m));
    if (info != 0) fail(Errc::fit_failure, "least-squares solve failed");
    LeastSquares r;
    r.coef.assign(b.begin(), b.begin() + static_cast<long>(k));
    double s = 0.0;
    for (std::size_t i = k; i < m; ++i) s += b[i] * b[i];
    r.residual_norm = std::sqrt(s);
    return r;
}

}  // namespace kdv
