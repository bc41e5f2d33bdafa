#pragma once

// Independent reference computations used by the unit and acceptance tests.
// They deliberately avoid FFTs and the library's spectral helpers: every sum
// is written out directly so that a bug in the fast path cannot hide here.

#include <algorithm>
#include <cmath>
#include <limits>
#include <complex>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "bflab/grid.hpp"

namespace oracle {

using cplx = std::complex<double>;
using bflab::pi;

// Periodic direct sum (V * rho)(x_i) = sum_j V(x_i - x_j) rho(x_j) h^d on a
// grid of any dimension. V is evaluated at minimum-image displacements.
inline std::vector<double> direct_convolution(const bflab::SpectralGrid& g, const bflab::PotentialSpec& V,
                                              const std::vector<double>& rho) {
    std::vector<double> out(g.size(), 0.0);
    for (std::size_t i = 0; i < g.size(); ++i) {
        auto xi = g.unflatten(i);
        double s = 0.0;
        for (std::size_t j = 0; j < g.size(); ++j) {
            auto xj = g.unflatten(j);
            std::array<double, 3> dx{0, 0, 0};
            for (int a = 0; a < g.dim(); ++a) dx[a] = g.wrap((xi[a] - xj[a]) * g.spacing());
            s += V.at(dx, g) * rho[j];
        }
        out[i] = s * g.cell_volume();
    }
    return out;
}

// Discrete spectral Laplacian of a 1-d periodic grid written as the explicit
// sum (1/n) sum_k (-k^2) e^{i k (x_i - x_j)} over the n FFT wavenumbers.
inline Eigen::MatrixXcd laplacian_1d(int n, double L) {
    Eigen::MatrixXcd lap = Eigen::MatrixXcd::Zero(n, n);
    const double h = L / n;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            cplx s = 0.0;
            for (int m = -n / 2; m < n / 2; ++m) {
                const double k = 2.0 * pi * m / L;
                s += -k * k * std::polar(1.0, k * (i - j) * h);
            }
            lap(i, j) = s / static_cast<double>(n);
        }
    return lap;
}

// Dense Hartree-Hartree reference in d = 1 with the density matrix kept as the
// full operator matrix Omega = K h (acting on grid vectors). Classical RK4 on
//   i hbar Omega' = [H_F, Omega],  H_F = -(hbar^2/2m_F) Lap + lambda N U_F
//   i hbar phi'   = H_B phi,       H_B = -(hbar^2/2m_B) Lap + lambda M U_B
// with U_F = V * |phi|^2 and U_B = V * (diag(Omega) / (h M)).
struct DenseHH {
    int n;
    double L, h, lambda, hbar, mF, mB, N, M;
    Eigen::MatrixXcd lap;
    Eigen::MatrixXd vmat;  // V(x_i - x_j) h

    DenseHH(int n_, double L_, const bflab::PotentialSpec& V, double lambda_, double hbar_, double mF_, double mB_,
            double N_, double M_)
        : n(n_), L(L_), h(L_ / n_), lambda(lambda_), hbar(hbar_), mF(mF_), mB(mB_), N(N_), M(M_) {
        lap = laplacian_1d(n, L);
        bflab::SpectralGrid g(1, n, L);
        vmat.resize(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) vmat(i, j) = V.at({g.wrap((i - j) * h), 0, 0}, g) * h;
    }

    struct State {
        Eigen::MatrixXcd omega;
        Eigen::VectorXcd phi;
    };

    State rhs(const State& s) const {
        Eigen::VectorXd rho_b = s.phi.cwiseAbs2();
        Eigen::VectorXd rho_f(n);
        for (int i = 0; i < n; ++i) rho_f[i] = s.omega(i, i).real() / (h * M);
        Eigen::VectorXd uf = vmat * rho_b;
        Eigen::VectorXd ub = vmat * rho_f;
        Eigen::MatrixXcd hf = -(hbar * hbar / (2.0 * mF)) * lap;
        Eigen::MatrixXcd hb = -(hbar * hbar / (2.0 * mB)) * lap;
        for (int i = 0; i < n; ++i) {
            hf(i, i) += lambda * N * uf[i];
            hb(i, i) += lambda * M * ub[i];
        }
        const cplx c(0.0, -1.0 / hbar);
        return {c * (hf * s.omega - s.omega * hf), c * (hb * s.phi)};
    }

    State evolve(State s, double T, int steps) const {
        const double dt = T / steps;
        for (int k = 0; k < steps; ++k) {
            State k1 = rhs(s);
            State k2 = rhs({s.omega + 0.5 * dt * k1.omega, s.phi + 0.5 * dt * k1.phi});
            State k3 = rhs({s.omega + 0.5 * dt * k2.omega, s.phi + 0.5 * dt * k2.phi});
            State k4 = rhs({s.omega + dt * k3.omega, s.phi + dt * k3.phi});
            s.omega += dt / 6.0 * (k1.omega + 2.0 * k2.omega + 2.0 * k3.omega + k4.omega);
            s.phi += dt / 6.0 * (k1.phi + 2.0 * k2.phi + 2.0 * k3.phi + k4.phi);
        }
        return s;
    }
};

// Sum of singular values.
inline double trace_norm(const Eigen::MatrixXcd& A) {
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(A);
    return svd.singularValues().sum();
}


// (2 pi)^{-1} int psi(x + y/2) conj(psi(x - y/2)) e^{-i y p / hbar} dy for an
// analytic one-dimensional psi, by the trapezoid rule on [-Y, Y].
template <class Psi>
double wigner_quadrature_1d(Psi&& psi, double x, double p, double hbar, double Y, int ny) {
    const double dy = 2.0 * Y / ny;
    cplx s = 0.0;
    for (int k = 0; k <= ny; ++k) {
        const double y = -Y + k * dy;
        const double w = (k == 0 || k == ny) ? 0.5 : 1.0;
        s += w * psi(x + 0.5 * y) * std::conj(psi(x - 0.5 * y)) * std::polar(1.0, -y * p / hbar);
    }
    return (s * dy).real() / (2.0 * pi);
}

// Minimum transport cost over all basic feasible plans: every set of m + n - 1
// arcs whose flow equations have a unique nonnegative solution. Exhaustive,
// so only for tiny instances.
inline double transport_vertex_enumeration(const std::vector<double>& a, const std::vector<double>& b,
                                           const Eigen::MatrixXd& C) {
    const int m = static_cast<int>(a.size()), n = static_cast<int>(b.size()), k = m + n - 1, arcs = m * n;
    Eigen::VectorXd rhs(m + n);
    for (int i = 0; i < m; ++i) rhs[i] = a[i];
    for (int j = 0; j < n; ++j) rhs[m + j] = b[j];
    double best = std::numeric_limits<double>::infinity();
    std::vector<int> pick(k);
    for (int i = 0; i < k; ++i) pick[i] = i;
    while (true) {
        Eigen::MatrixXd A = Eigen::MatrixXd::Zero(m + n, k);
        for (int c = 0; c < k; ++c) {
            A(pick[c] / n, c) = 1.0;
            A(m + pick[c] % n, c) = 1.0;
        }
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
        if (qr.rank() == k) {
            Eigen::VectorXd x = qr.solve(rhs);
            if ((A * x - rhs).norm() < 1e-12 && x.minCoeff() > -1e-13) {
                double c = 0.0;
                for (int q = 0; q < k; ++q) c += x[q] * C(pick[q] / n, pick[q] % n);
                best = std::min(best, c);
            }
        }
        int i = k - 1;
        while (i >= 0 && pick[i] == arcs - k + i) --i;
        if (i < 0) break;
        ++pick[i];
        for (int j = i + 1; j < k; ++j) pick[j] = pick[j - 1] + 1;
    }
    return best;
}

// Squared W_2 on the line by the monotone (quantile) coupling.
inline double w2_squared_1d(std::vector<std::pair<double, double>> mu, std::vector<std::pair<double, double>> nu) {
    std::sort(mu.begin(), mu.end());
    std::sort(nu.begin(), nu.end());
    std::size_t i = 0, j = 0;
    double ra = mu[0].second, rb = nu[0].second, cost = 0.0;
    while (i < mu.size() && j < nu.size()) {
        const double t = std::min(ra, rb);
        const double d = mu[i].first - nu[j].first;
        cost += t * d * d;
        ra -= t;
        rb -= t;
        if (ra <= 1e-15 && ++i < mu.size()) ra = mu[i].second;
        if (rb <= 1e-15 && ++j < nu.size()) rb = nu[j].second;
    }
    return cost;
}

// Method-of-characteristics reference for the one-dimensional Vlasov-Hartree
// system with V = A exp(-x^2 / 2w^2). Weighted particles are pushed by
// leapfrog under the exact force -sum_j V'(x - x_j) |phi_j|^2 h; the boson
// field sees U(x_i) = sum_k w_k V(x_i - x_k) at the half-drift positions and
// is advanced with a dense matrix exponential of -Lap/2 + U.
struct ParticleVH {
    double L, A, width;
    int n;
    Eigen::MatrixXcd lap;
    std::vector<double> x, p, w;
    Eigen::VectorXcd phi;
    std::vector<Eigen::VectorXd> density_history;  // |phi|^2 at the start of every step
    std::vector<double> steps;

    ParticleVH(int n_, double L_, double A_, double width_) : L(L_), A(A_), width(width_), n(n_) {
        lap = laplacian_1d(n, L);
    }

    double wrap(double d) const { return d - L * std::round(d / L); }
    double V(double r) const { return A * std::exp(-r * r / (2 * width * width)); }
    double dV(double r) const { return -A * r / (width * width) * std::exp(-r * r / (2 * width * width)); }

    double force(double at, const Eigen::VectorXd& rho) const {
        const double h = L / n;
        double F = 0.0;
        for (int j = 0; j < n; ++j) F -= dV(wrap(at - j * h)) * rho[j] * h;
        return F;
    }

    void step(double dt) {
        density_history.push_back(phi.cwiseAbs2());
        steps.push_back(dt);
        const auto& rho = density_history.back();
        std::vector<double> xm(x.size());
        for (std::size_t k = 0; k < x.size(); ++k) xm[k] = x[k] + 0.5 * dt * p[k];
        for (std::size_t k = 0; k < x.size(); ++k) {
            p[k] += dt * force(xm[k], rho);
            x[k] = xm[k] + 0.5 * dt * p[k];
        }
        Eigen::MatrixXcd H = -0.5 * lap;
        for (int i = 0; i < n; ++i) {
            double U = 0.0;
            for (std::size_t k = 0; k < xm.size(); ++k) U += w[k] * V(wrap(i * (L / n) - xm[k]));
            H(i, i) += U;
        }
        Eigen::MatrixXcd prop = (cplx(0.0, -dt) * H).exp();
        phi = prop * phi;
    }

    // Foot of the characteristic through (x, p) at the current time: the
    // recorded leapfrog steps inverted in reverse order.
    std::pair<double, double> trace_back(double xq, double pq) const {
        for (std::size_t k = steps.size(); k-- > 0;) {
            const double dt = steps[k];
            xq -= 0.5 * dt * pq;
            pq -= dt * force(xq, density_history[k]);
            xq -= 0.5 * dt * pq;
        }
        return {xq, pq};
    }
};

}  // namespace oracle
