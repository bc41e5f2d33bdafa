#pragma once

#include <Eigen/Dense>

#include "bflab/density.hpp"

namespace bflab {

inline constexpr std::size_t kDenseRowBudget = 4096;

/// Operator kernel K(x, x') sampled on grid x grid. The operator acting on
/// grid functions is K h^d; trace and norms use that continuum scaling.
struct DenseKernel {
    SpectralGrid grid;
    Eigen::MatrixXcd K;
    double hbar = 1.0;

    DenseKernel() = default;
    DenseKernel(const SpectralGrid& g, Eigen::MatrixXcd k, double h = 1.0) : grid(g), K(std::move(k)), hbar(h) {
        require(K.rows() == static_cast<Eigen::Index>(g.size()) && K.cols() == K.rows(),
                "kernel size does not match grid");
    }

    static DenseKernel zeros(const SpectralGrid& g, double h = 1.0) {
        check_budget(g);
        const auto n = static_cast<Eigen::Index>(g.size());
        return DenseKernel(g, Eigen::MatrixXcd::Zero(n, n), h);
    }

    static void check_budget(const SpectralGrid& g) {
        if (g.size() > kDenseRowBudget) throw BudgetExceeded("dense kernel exceeds the 4096-row budget");
    }

    Eigen::MatrixXcd op() const { return K * grid.cell_volume(); }

    cplx trace() const { return K.trace() * grid.cell_volume(); }

    double hermitian_defect() const {
        const double scale = std::max(1.0, K.cwiseAbs().maxCoeff());
        return (K - K.adjoint()).cwiseAbs().maxCoeff() / scale;
    }

    bool is_hermitian(double tol = 1e-10) const { return hermitian_defect() <= tol; }

    /// Smallest eigenvalue of the (Hermitian part of the) operator.
    double min_eigenvalue() const {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es((op() + op().adjoint()) * 0.5, Eigen::EigenvaluesOnly);
        return es.eigenvalues().minCoeff();
    }

    DenseKernel operator-(const DenseKernel& o) const {
        require_same_grid(grid, o.grid);
        return DenseKernel(grid, K - o.K, hbar);
    }
};

/// Materializes sum_i occ_i phi_i(x) conj(phi_i(x')).
inline DenseKernel to_dense(const DensityMatrix& omega, double hbar = 1.0) {
    const auto& g = omega.grid();
    DenseKernel::check_budget(g);
    const auto n = static_cast<Eigen::Index>(g.size());
    const auto m = static_cast<Eigen::Index>(omega.rank());
    Eigen::MatrixXcd A(n, m);
    for (Eigen::Index j = 0; j < m; ++j) {
        const double w = std::sqrt(omega.occupations()[j]);
        for (Eigen::Index i = 0; i < n; ++i) A(i, j) = w * omega.orbitals()[j][i];
    }
    return DenseKernel(g, A * A.adjoint(), hbar);
}

/// Kernel of |phi><phi| scaled by `weight`.
inline DenseKernel projector(const Field& phi, double weight = 1.0, double hbar = 1.0) {
    DenseKernel::check_budget(phi.grid);
    Eigen::Map<const Eigen::VectorXcd> v(phi.values.data(), static_cast<Eigen::Index>(phi.size()));
    return DenseKernel(phi.grid, weight * v * v.adjoint(), hbar);
}

/// Dense matrix of the spectral Laplacian acting on grid values.
inline Eigen::MatrixXcd laplacian_matrix(const SpectralGrid& g) {
    DenseKernel::check_budget(g);
    const auto n = static_cast<Eigen::Index>(g.size());
    Eigen::MatrixXcd L(n, n);
    std::vector<cplx> col(g.size());
    for (Eigen::Index j = 0; j < n; ++j) {
        std::fill(col.begin(), col.end(), cplx(0.0));
        col[static_cast<std::size_t>(j)] = 1.0;
        fft_forward(col, g.dims());
        for (std::size_t i = 0; i < col.size(); ++i) col[i] *= -g.k_squared(i);
        fft_inverse(col, g.dims());
        for (Eigen::Index i = 0; i < n; ++i) L(i, j) = col[static_cast<std::size_t>(i)];
    }
    return L;
}

}  // namespace bflab
