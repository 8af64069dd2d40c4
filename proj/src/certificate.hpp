#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "foundations.hpp"

namespace kdv {

// Weighted L^2 space with product (f, g) = int f g / F0, and the span of Q^{5/2}, Q'.
struct WeightedSpace {
    Grid grid;
    Field F0;
    Field basisQ52;
    Field basisQp;
    double gram[2][2] = {{0.0, 0.0}, {0.0, 0.0}};

    static WeightedSpace build(const Grid& g);
    double inner(const std::vector<double>& f, const std::vector<double>& g) const;
};

struct Projection {
    Field value;
    double lambda1 = 0.0;  // along Q^{5/2}
    double lambda2 = 0.0;  // along Q'
};

// Projection onto the weighted orthogonal complement of span(Q^{5/2}, Q').
Projection weighted_projection(const Field& f, const WeightedSpace& space);
// N(f) = (int (Pf)^2 / F0)^{1/2}.
double weighted_norm(const Field& f, const WeightedSpace& space);

struct GDecomposition {
    Field G0;
    double alpha = 0.0;
    double beta = 0.0;
    // Same coefficients recomputed from the odd and even parts of G_c separately.
    double alpha_odd = 0.0;
    double beta_even = 0.0;
    double ortho_Q52 = 0.0;
    double ortho_Qp = 0.0;
};

// G_c = e^{-sqrt(c) x} Q^3 = G0 + alpha Q' + beta Q.
GDecomposition decompose_G(double c, const Grid& g);

struct CertificateReport {
    double c = 0.0;
    double alpha = 0.0;
    double beta = 0.0;
    double ip_G0_H0 = 0.0;
    double ip_G0_J0 = 0.0;
    double N_H0 = 0.0;
    double N_QpOverQ = 0.0;
    double N_J0 = 0.0;
    double N_Qp3 = 0.0;
    double N_composite = 0.0;
    double k1 = 0.0;
    double k2 = 0.0;
    double k = 0.0;
    double denominator = 0.0;
    double margin = 0.0;
};

// The five weighted norms and inner products; k1, k2 and k are left unset.
CertificateReport weighted_norms(double c, const Grid& g);
CertificateReport certificate_k(double c, const Grid& g);

struct CertificateSweep {
    std::vector<CertificateReport> rows;
    std::vector<std::string> failures;  // per-row errors, empty when every row evaluated
    double max_k = 0.0;
    double min_k2 = 0.0;
    bool passed = false;  // every row valid with 0 <= k <= 0.5
};

CertificateSweep certificate_sweep(const std::vector<double>& cs, const Grid& g, int threads = 1);
std::vector<double> default_certificate_speeds();

// Smooth trial function: 3 to 6 Gaussian bumps drawn from the seed, then projected in plain
// L^2 off Q^{5/2} and Q'.
Field trial_B0(std::uint64_t seed, const Grid& g);
Field gaussian_bumps(std::uint64_t seed, const Grid& g);

struct IdentityCheck {
    double lhs = 0.0;
    double rhs = 0.0;
    double relative = 0.0;
};

IdentityCheck check_LBB(const Field& B);
IdentityCheck check_DQ3(const Field& D);
IdentityCheck check_DQ6(const Field& D);
IdentityCheck check_genebeta(const Field& D, double beta);

struct CoercivityTrial {
    std::uint64_t seed = 0;
    double lhs_direct = 0.0;
    double lhs_identity = 0.0;
    double lower_bound = 0.0;
    double slack = 0.0;
    double norm2 = 0.0;
    // Smallest value over the speed sweep of the left side of the F0 bound minus int B^2 F0.
    double cnv_slack = 0.0;
    bool ok = false;
};

struct CoercivityReport {
    std::vector<CoercivityTrial> trials;
    double min_relative_slack = 0.0;
    double max_identity_mismatch = 0.0;
    bool passed = false;
};

CoercivityReport verify_coercivity(int trial_count, const Grid& g, std::uint64_t seed = 20240611,
                                   int threads = 1);

struct SpectralReport {
    double beta = 0.0;
    double coupling = 0.0;  // beta (2 beta + 3) / 5
    // Rayleigh quotient of -w'' - coupling Q^3 w at w = Q^beta; expected -beta^2.
    double ground_rayleigh = 0.0;
    double ground_expected = 0.0;
    double ground_residual = 0.0;  // sup |w'' + coupling Q^3 w - beta^2 w|
    bool has_second = false;
    double second_rayleigh = 0.0;
    double second_expected = 0.0;
    double second_residual = 0.0;
    // Lowest eigenvalues of the discretized operator after Richardson extrapolation.
    std::vector<double> eigenvalues;
    int negative_count = 0;
    // Bottom of the spectrum on the orthogonal complement of the negative eigenfunctions.
    double complement_bottom = 0.0;
    // Smallest Rayleigh quotient among random trials orthogonal to the negative eigenfunctions.
    double complement_trial_min = 0.0;
    double max_three_fifths_Q3 = 0.0;
};

SpectralReport verify_spectral_facts(double beta, double half_width = 30.0, double h = 0.01);

}  // namespace kdv
