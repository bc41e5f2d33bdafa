#pragma once

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "bflab/grid.hpp"

namespace bflab {

/// Fermionic one-particle state omega = sum_i occ_i |phi_i><phi_i| kept as an
/// orbital ensemble. Orbitals are L^2-orthonormal in the continuum inner
/// product sum conj(a) b h^d.
class DensityMatrix {
public:
    static constexpr double kGramTolerance = 1e-8;

    DensityMatrix() = default;

    DensityMatrix(std::vector<Field> orbitals, std::vector<double> occupations)
        : orbitals_(std::move(orbitals)), occupations_(std::move(occupations)) {
        require(!orbitals_.empty(), "density matrix needs at least one orbital");
        require(orbitals_.size() == occupations_.size(), "one occupation per orbital");
        grid_ = orbitals_.front().grid;
        for (const auto& o : orbitals_) require_same_grid(o.grid, grid_);
        for (double occ : occupations_)
            require(occ >= 0.0 && occ <= 1.0 && std::isfinite(occ), "occupations must lie in [0, 1]");
        require(gram_deviation() <= kGramTolerance, "orbitals are not orthonormal");
    }

    /// Rank-M orthogonal projection: every occupation is exactly one.
    static DensityMatrix zero_temperature(std::vector<Field> orbitals) {
        std::vector<double> occ(orbitals.size(), 1.0);
        return DensityMatrix(std::move(orbitals), std::move(occ));
    }

    /// Builds the ensemble from a dense kernel by eigendecomposition of the
    /// operator K h^d. Eigenvalues below `cutoff` are dropped; values within
    /// 1e-9 outside [0, 1] are clamped, anything further is rejected.
    static DensityMatrix from_operator(const SpectralGrid& g, const Eigen::MatrixXcd& op, double cutoff = 1e-13) {
        require(op.rows() == static_cast<Eigen::Index>(g.size()) && op.cols() == op.rows(),
                "operator size does not match grid");
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es((op + op.adjoint()) * 0.5);
        std::vector<Field> orbitals;
        std::vector<double> occ;
        const double inv_sqrt_cell = 1.0 / std::sqrt(g.cell_volume());
        for (Eigen::Index j = es.eigenvalues().size() - 1; j >= 0; --j) {
            double lam = es.eigenvalues()[j];
            require(lam >= -1e-9 && lam <= 1.0 + 1e-9, "operator is not between 0 and 1");
            if (lam <= cutoff) continue;
            lam = std::min(lam, 1.0);
            Field phi(g);
            for (std::size_t i = 0; i < g.size(); ++i)
                phi[i] = es.eigenvectors()(static_cast<Eigen::Index>(i), j) * inv_sqrt_cell;
            orbitals.push_back(std::move(phi));
            occ.push_back(lam);
        }
        return DensityMatrix(std::move(orbitals), std::move(occ));
    }

    const SpectralGrid& grid() const { return grid_; }
    const std::vector<Field>& orbitals() const { return orbitals_; }
    std::vector<Field>& orbitals_mut() { return orbitals_; }
    const std::vector<double>& occupations() const { return occupations_; }
    std::size_t rank() const { return orbitals_.size(); }

    double trace() const {
        double s = 0.0;
        for (double o : occupations_) s += o;
        return s;
    }

    /// Tr omega recomputed as sum_i occ_i ||phi_i||^2, which sees norm drift.
    double trace_weighted_norm() const {
        double s = 0.0;
        for (std::size_t i = 0; i < orbitals_.size(); ++i) {
            const double nrm = l2_norm(orbitals_[i]);
            s += occupations_[i] * nrm * nrm;
        }
        return s;
    }

    bool is_projection() const {
        for (double o : occupations_)
            if (o != 1.0) return false;
        return true;
    }

    /// max |<phi_i, phi_j> - delta_ij|.
    double gram_deviation() const {
        double dev = 0.0;
        for (std::size_t i = 0; i < orbitals_.size(); ++i)
            for (std::size_t j = i; j < orbitals_.size(); ++j) {
                cplx g = inner(orbitals_[i], orbitals_[j]);
                if (i == j) g -= 1.0;
                dev = std::max(dev, std::abs(g));
            }
        return dev;
    }

    /// ||omega^2 - omega||_HS computed from the orbital Gram matrix, so that
    /// drift in orthonormality shows up directly.
    double idempotency_defect() const {
        const auto m = static_cast<Eigen::Index>(orbitals_.size());
        Eigen::MatrixXcd G(m, m);
        for (Eigen::Index i = 0; i < m; ++i)
            for (Eigen::Index j = 0; j < m; ++j) G(i, j) = inner(orbitals_[i], orbitals_[j]);
        Eigen::VectorXd occ(m);
        for (Eigen::Index i = 0; i < m; ++i) occ[i] = occupations_[i];
        Eigen::MatrixXcd D = occ.asDiagonal();
        // omega = A D A^*, omega^2 - omega = A (D G D - D) A^*; ||.||_HS^2 = Tr(G X G X^*).
        Eigen::MatrixXcd X = D * G * D - D;
        cplx hs2 = (G * X * G * X.adjoint()).trace();
        return std::sqrt(std::max(0.0, hs2.real()));
    }

private:
    SpectralGrid grid_;
    std::vector<Field> orbitals_;
    std::vector<double> occupations_;
};

/// Condensate wave function, unit norm.
class BosonField {
public:
    static constexpr double kNormTolerance = 1e-10;

    BosonField() = default;
    explicit BosonField(Field phi) : phi_(std::move(phi)) {
        require(std::abs(l2_norm(phi_) - 1.0) <= kNormTolerance, "boson field must have unit L2 norm");
    }

    static BosonField normalize(Field phi) { return BosonField(normalized(std::move(phi))); }

    const Field& phi() const { return phi_; }
    Field& phi_mut() { return phi_; }
    const SpectralGrid& grid() const { return phi_.grid; }

private:
    Field phi_;
};

/// rho_F(x) = (1/M) sum_i occ_i |phi_i(x)|^2 with M = Tr omega.
inline RealField fermion_density(const DensityMatrix& omega) {
    RealField rho(omega.grid());
    const auto& orb = omega.orbitals();
    const auto& occ = omega.occupations();
    for (std::size_t k = 0; k < orb.size(); ++k)
        for (std::size_t i = 0; i < rho.size(); ++i) rho[i] += occ[k] * std::norm(orb[k][i]);
    const double m = omega.trace();
    for (auto& v : rho.values) v /= m;
    return rho;
}

/// rho_B(x) = |phi(x)|^2.
inline RealField boson_density(const BosonField& phi) { return modulus_squared(phi.phi()); }

}  // namespace bflab
