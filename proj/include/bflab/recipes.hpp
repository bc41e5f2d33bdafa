#pragma once

#include <cmath>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "bflab/grid.hpp"
#include "bflab/phasespace.hpp"

namespace bflab {

/// Normalized packet exp(-|y - x0|^2 / 2w^2 + i p0 y / hbar) with minimum-image y - x0.
inline Field gaussian_packet(const SpectralGrid& g, const std::array<double, 3>& x0, const std::array<double, 3>& p0,
                             double width, double hbar = 1.0) {
    require(width > 0.0, "packet width must be positive");
    Field f(g);
    for (std::size_t i = 0; i < g.size(); ++i) {
        const auto x = g.position(i);
        double r2 = 0.0, ph = 0.0;
        for (int a = 0; a < g.dim(); ++a) {
            const double y = g.wrap(x[a] - x0[a]);
            r2 += y * y;
            ph += p0[a] * y / hbar;
        }
        f[i] = std::exp(-r2 / (2.0 * width * width)) * std::polar(1.0, ph);
    }
    return normalized(std::move(f));
}

/// First m Hermite functions y^j e^{-y^2/2w^2} about x0 (d = 1), made
/// orthonormal by modified Gram-Schmidt.
inline std::vector<Field> hermite_orbitals(const SpectralGrid& g, int m, double x0, double width) {
    require(g.dim() == 1, "Hermite orbitals are built for d = 1");
    require(m >= 1 && m <= g.points_per_dim(), "orbital count must lie in [1, n]");
    std::vector<Field> out;
    for (int j = 0; j < m; ++j) {
        Field f(g);
        for (std::size_t i = 0; i < g.size(); ++i) {
            const double y = g.wrap(g.position(i)[0] - x0) / width;
            f[i] = std::pow(y, j) * std::exp(-0.5 * y * y);
        }
        for (int pass = 0; pass < 2; ++pass)
            for (const auto& o : out) {
                const cplx c = inner(o, f);
                for (std::size_t i = 0; i < g.size(); ++i) f[i] -= c * o[i];
            }
        require(l2_norm(f) > 1e-8, "Hermite orbitals are not resolved by the grid");
        out.push_back(normalized(std::move(f)));
    }
    return out;
}

/// Lowest-|k| plane waves, ordered 0, +1, -1, +2, ...: the spectral
/// projector of the periodic Laplacian (d = 1).
inline std::vector<Field> plane_wave_orbitals(const SpectralGrid& g, int m) {
    require(g.dim() == 1, "plane-wave orbitals are built for d = 1");
    require(m >= 1 && m <= g.points_per_dim(), "orbital count must lie in [1, n]");
    std::vector<Field> out;
    const double amp = 1.0 / std::sqrt(g.length());
    for (int j = 0; j < m; ++j) {
        const int k = (j + 1) / 2 * (j % 2 ? 1 : -1);
        Field f(g);
        for (std::size_t i = 0; i < g.size(); ++i) f[i] = amp * std::polar(1.0, g.dk() * k * (g.position(i)[0] - g.origin()));
        out.push_back(std::move(f));
    }
    return out;
}

/// m orthonormal orbitals from a Householder QR of a complex Gaussian matrix
/// restricted to Fourier modes |j| < band (all modes when band <= 0).
inline std::vector<Field> random_orbitals(const SpectralGrid& g, int m, std::uint64_t seed, int band = 0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    const auto n = static_cast<Eigen::Index>(g.size());
    require(m >= 1 && m <= n, "orbital count must lie in [1, grid size]");
    Eigen::MatrixXcd A(n, m);
    for (int j = 0; j < m; ++j) {
        std::vector<cplx> spec(g.size(), cplx(0.0));
        for (std::size_t i = 0; i < g.size(); ++i) {
            bool keep = true;
            if (band > 0) {
                const auto idx = g.unflatten(i);
                for (int a = 0; a < g.dim(); ++a) keep = keep && std::abs(fft_frequency(idx[a], g.points_per_dim())) < band;
            }
            if (keep) spec[i] = {nd(rng), nd(rng)};
        }
        const Field f = from_spectrum(g, spec);
        for (Eigen::Index i = 0; i < n; ++i) A(i, j) = f[static_cast<std::size_t>(i)];
    }
    Eigen::HouseholderQR<Eigen::MatrixXcd> qr(A);
    const Eigen::MatrixXcd Q = qr.householderQ() * Eigen::MatrixXcd::Identity(n, m);
    std::vector<Field> out;
    const double s = 1.0 / std::sqrt(g.cell_volume());
    for (int j = 0; j < m; ++j) {
        Field f(g);
        for (Eigen::Index i = 0; i < n; ++i) f[static_cast<std::size_t>(i)] = s * Q(i, j);
        require(l2_norm(f) > 0.5, "random orbitals need band large enough for the orbital count");
        out.push_back(std::move(f));
    }
    return out;
}

struct ThomasFermiSpec {
    double left = 0.25;   ///< plateau edges as fractions of the box
    double right = 0.75;
    double edge = 0.4;    ///< tanh width of the density profile
    double p_edge = 0.08; ///< tanh width of the Fermi surface in p
    double c = pi * pi;   ///< Fermi momentum p_F(x) = sqrt(c) rho(x)^{1/d}
};

/// Smoothed Thomas-Fermi ball f0 = (2 pi)^{-d} S((p_F(x) - |p|) / p_edge),
/// S(u) = (1 + tanh u)/2, for a tanh-plateau density rho with int rho = 1.
/// Normalized to unit mass. With c = pi^2 (d = 1) the p-marginal reproduces
/// rho and 0 <= f0 <= (2 pi)^{-1}, so its anti-Wick quantization is a
/// density matrix with occupations in [0, 1].
inline PhaseSpaceDistribution thomas_fermi(const SpectralGrid& g, const PhaseAxis& paxis, const ThomasFermiSpec& tf) {
    require(g.dim() == 1, "Thomas-Fermi recipe is built for d = 1");
    require(tf.left < tf.right && tf.edge > 0.0 && tf.p_edge > 0.0 && tf.c > 0.0, "invalid Thomas-Fermi parameters");
    const double a = g.origin() + tf.left * g.length(), b = g.origin() + tf.right * g.length();
    std::vector<double> rho(g.size());
    double total = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double x = g.position(i)[0];
        rho[i] = 0.5 * (std::tanh((x - a) / tf.edge) - std::tanh((x - b) / tf.edge));
        total += rho[i] * g.cell_volume();
    }
    PhaseSpaceDistribution f(g, paxis);
    for (std::size_t ix = 0; ix < f.x_size(); ++ix) {
        const double pf = std::sqrt(tf.c) * rho[ix] / total;
        for (std::size_t ip = 0; ip < f.p_size(); ++ip) {
            const double p = std::abs(f.momentum(ip)[0]);
            f.values[f.index(ix, ip)] = 0.5 * (1.0 + std::tanh((pf - p) / tf.p_edge)) / (2.0 * pi);
        }
    }
    const double m = f.mass();
    for (auto& v : f.values) v /= m;
    return f;
}

/// Normalized phase-space Gaussian centered at (x0, p0) with variances sx, sp.
inline PhaseSpaceDistribution gaussian_phase_density(const SpectralGrid& g, const PhaseAxis& paxis,
                                                     const std::array<double, 3>& x0, const std::array<double, 3>& p0,
                                                     double sx, double sp) {
    require(sx > 0.0 && sp > 0.0, "variances must be positive");
    PhaseSpaceDistribution f(g, paxis);
    for (std::size_t ix = 0; ix < f.x_size(); ++ix) {
        const auto x = g.position(ix);
        for (std::size_t ip = 0; ip < f.p_size(); ++ip) {
            const auto p = f.momentum(ip);
            double e = 0.0;
            for (int a = 0; a < g.dim(); ++a) {
                const double dx = g.wrap(x[a] - x0[a]), dp = p[a] - p0[a];
                e += dx * dx / (2.0 * sx) + dp * dp / (2.0 * sp);
            }
            f.values[f.index(ix, ip)] = std::exp(-e);
        }
    }
    const double m = f.mass();
    for (auto& v : f.values) v /= m;
    return f;
}

}  // namespace bflab
