#pragma once

#include <complex>

#include <Eigen/SparseCore>

#include "stabsched/case.hpp"

namespace stabsched {

/// Bus admittance matrix over internal bus indices.
struct AdmittanceMatrix {
    Eigen::SparseMatrix<std::complex<double>> Y;
    Eigen::VectorXd g_diag;  ///< Re(Y_ii)
    Eigen::VectorXd b_diag;  ///< Im(Y_ii)
};

/// Stamps every in-service branch (series r+jx, total charging b_sh split
/// half per end). Y is symmetric; out-of-service branches contribute nothing.
AdmittanceMatrix build_admittance(const NetworkCase& c);

/// Susceptance-only Laplacian B with B_ij = -1/x_ij, B_ii = sum of 1/x over
/// incident in-service branches. Shunts and resistance are ignored.
Eigen::SparseMatrix<double> build_susceptance(const NetworkCase& c);

}  // namespace stabsched
