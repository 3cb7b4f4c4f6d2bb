#include "stabsched/admittance.hpp"

#include <vector>

namespace stabsched {

AdmittanceMatrix build_admittance(const NetworkCase& c) {
    using cplx = std::complex<double>;
    const int n = c.n_buses();
    std::vector<Eigen::Triplet<cplx>> trip;
    trip.reserve(c.branches.size() * 4 + std::size_t(n));
    for (const auto& br : c.branches) {
        if (!br.in_service) continue;
        const int i = c.bus_of(br.from);
        const int j = c.bus_of(br.to);
        const cplx y = 1.0 / cplx(br.r, br.x);
        const cplx ysh(0.0, br.b_sh / 2.0);
        trip.emplace_back(i, i, y + ysh);
        trip.emplace_back(j, j, y + ysh);
        trip.emplace_back(i, j, -y);
        trip.emplace_back(j, i, -y);
    }
    AdmittanceMatrix m;
    m.Y.resize(n, n);
    m.Y.setFromTriplets(trip.begin(), trip.end());
    m.g_diag.setZero(n);
    m.b_diag.setZero(n);
    for (int i = 0; i < n; ++i) {
        const cplx d = m.Y.coeff(i, i);
        m.g_diag[i] = d.real();
        m.b_diag[i] = d.imag();
    }
    return m;
}

Eigen::SparseMatrix<double> build_susceptance(const NetworkCase& c) {
    const int n = c.n_buses();
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(c.branches.size() * 4);
    for (const auto& br : c.branches) {
        if (!br.in_service || br.x == 0.0) continue;
        const int i = c.bus_of(br.from);
        const int j = c.bus_of(br.to);
        const double b = 1.0 / br.x;
        trip.emplace_back(i, i, b);
        trip.emplace_back(j, j, b);
        trip.emplace_back(i, j, -b);
        trip.emplace_back(j, i, -b);
    }
    Eigen::SparseMatrix<double> B(n, n);
    B.setFromTriplets(trip.begin(), trip.end());
    return B;
}

}  // namespace stabsched
