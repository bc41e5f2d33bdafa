#pragma once

// Shared test inputs: random orthonormal orbitals and Gaussian packets.

#include <random>
#include <vector>

#include <Eigen/Dense>

#include "bflab/dense.hpp"

namespace fixtures {

using namespace bflab;

// m orbitals orthonormal in the grid inner product, from a QR of a random
// complex matrix. When `band` > 0 only Fourier modes |j| < band are used.
inline std::vector<Field> random_orbitals(const SpectralGrid& g, int m, std::mt19937_64& rng, int band = 0) {
    std::normal_distribution<double> nd;
    const auto n = static_cast<Eigen::Index>(g.size());
    Eigen::MatrixXcd A(n, m);
    for (int j = 0; j < m; ++j) {
        std::vector<cplx> spec(g.size(), cplx(0.0));
        for (std::size_t i = 0; i < g.size(); ++i) {
            bool keep = true;
            if (band > 0) {
                auto idx = g.unflatten(i);
                for (int a = 0; a < g.dim(); ++a) keep = keep && std::abs(fft_frequency(idx[a], g.points_per_dim())) < band;
            }
            if (keep) spec[i] = {nd(rng), nd(rng)};
        }
        fft_inverse(spec, g.dims());
        for (Eigen::Index i = 0; i < n; ++i) A(i, j) = spec[static_cast<std::size_t>(i)];
    }
    Eigen::HouseholderQR<Eigen::MatrixXcd> qr(A);
    Eigen::MatrixXcd Q = qr.householderQ() * Eigen::MatrixXcd::Identity(n, m);
    std::vector<Field> out;
    const double s = 1.0 / std::sqrt(g.cell_volume());
    for (int j = 0; j < m; ++j) {
        Field f(g);
        for (Eigen::Index i = 0; i < n; ++i) f[static_cast<std::size_t>(i)] = Q(i, j) * s;
        out.push_back(std::move(f));
    }
    return out;
}

// Normalized exp(-|x - x0|^2 / (2 w^2)) e^{i p0 (x - x0) / hbar} with
// minimum-image distances.
inline Field packet(const SpectralGrid& g, std::array<double, 3> x0, std::array<double, 3> p0, double w,
                    double hbar = 1.0) {
    Field f(g);
    for (std::size_t i = 0; i < g.size(); ++i) {
        auto x = g.position(i);
        double r2 = 0.0, ph = 0.0;
        for (int a = 0; a < g.dim(); ++a) {
            const double dx = g.wrap(x[a] - x0[a]);
            r2 += dx * dx;
            ph += p0[a] * dx / hbar;
        }
        f[i] = std::exp(-r2 / (2.0 * w * w)) * std::polar(1.0, ph);
    }
    return normalized(std::move(f));
}

// M orthonormal orbitals obtained by Gram-Schmidt of Hermite-like packets
// x^j e^{-x^2/2w^2} centered at x0.
inline std::vector<Field> packet_orbitals(const SpectralGrid& g, int m, double x0, double w) {
    std::vector<Field> out;
    for (int j = 0; j < m; ++j) {
        Field f(g);
        for (std::size_t i = 0; i < g.size(); ++i) {
            const double y = g.wrap(g.position(i)[0] - x0);
            f[i] = std::pow(y / w, j) * std::exp(-y * y / (2.0 * w * w));
        }
        for (const auto& o : out) {
            const cplx c = inner(o, f);
            for (std::size_t i = 0; i < g.size(); ++i) f[i] -= c * o[i];
        }
        out.push_back(normalized(std::move(f)));
    }
    return out;
}

// Random Hermitian kernel with entries of order one.
inline DenseKernel random_hermitian(const SpectralGrid& g, std::mt19937_64& rng, double hbar = 1.0) {
    std::normal_distribution<double> nd;
    const auto n = static_cast<Eigen::Index>(g.size());
    Eigen::MatrixXcd A(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) A(i, j) = {nd(rng), nd(rng)};
    return DenseKernel(g, 0.5 * (A + A.adjoint()), hbar);
}

}  // namespace fixtures
