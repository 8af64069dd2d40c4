#pragma once

#include <cstddef>
#include <vector>

namespace kdv {

// General banded matrix in LAPACK band storage, solved by LU with partial pivoting.
class BandedMatrix {
public:
    BandedMatrix(std::size_t n, int kl, int ku);

    std::size_t size() const { return n_; }
    int lower() const { return kl_; }
    int upper() const { return ku_; }

    void set(std::size_t row, std::size_t col, double v);
    double get(std::size_t row, std::size_t col) const;
    // y = A x, using the entries as set (before factorization).
    std::vector<double> multiply(const std::vector<double>& x) const;

    struct Solution {
        std::vector<double> x;
        double rcond = 0.0;
    };
    // Factorizes a copy; the matrix itself is left untouched.
    Solution solve(const std::vector<double>& rhs) const;

    class Factorization {
    public:
        std::vector<double> solve(std::vector<double> rhs) const;
        double rcond() const { return rcond_; }

    private:
        friend class BandedMatrix;
        std::size_t n_ = 0;
        int kl_ = 0, ku_ = 0, ldab_ = 0;
        std::vector<double> lu_;
        std::vector<int> piv_;
        double rcond_ = 0.0;
    };
    Factorization factorize() const;

private:
    std::size_t n_;
    int kl_, ku_;
    int ldab_;
    std::vector<double> ab_;
};

// Selected smallest eigenvalues of a symmetric tridiagonal matrix.
std::vector<double> tridiagonal_lowest_eigenvalues(const std::vector<double>& diag,
                                                   const std::vector<double>& off, int count);

struct LeastSquares {
    std::vector<double> coef;
    double residual_norm = 0.0;
};
// Minimizes ||A c - b||_2 for a dense column-major m x k matrix.
LeastSquares least_squares(std::vector<double> a, std::size_t m, std::size_t k,
                           std::vector<double> b);

}  // namespace kdv
