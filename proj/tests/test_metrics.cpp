#include <gtest/gtest.h>

#include "bflab/metrics.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace bflab;

namespace {

template <class F>
PhaseSpaceDistribution tabulate(const SpectralGrid& g, const PhaseAxis& pa, F&& fn) {
    PhaseSpaceDistribution f(g, pa);
    for (std::size_t ix = 0; ix < f.x_size(); ++ix)
        for (std::size_t ip = 0; ip < f.p_size(); ++ip) f(ix, ip) = fn(g.position(ix), f.momentum(ip));
    return f;
}

// Normalized Gaussian density of variance var per phase axis centered at
// (x0, p0) in d = 1.
PhaseSpaceDistribution gaussian_density(const SpectralGrid& g, const PhaseAxis& pa, double x0, double p0, double var) {
    auto f = tabulate(g, pa, [&](auto x, auto p) {
        const double dx = g.wrap(x[0] - x0), dp = p[0] - p0;
        return std::exp(-(dx * dx + dp * dp) / (2 * var)) / (2 * pi * var);
    });
    return f;
}

// Localized rank-2 state whose characteristic function vanishes on the window
// edges to well below 1e-12.
DenseKernel localized_state(double hbar) {
    auto g = make_grid(1, 96, 16.0);
    auto orb = fixtures::packet_orbitals(g, 2, 8.0, 0.7);
    Eigen::MatrixXcd K = Eigen::MatrixXcd::Zero(96, 96);
    const double w[2] = {0.7, 0.3};
    for (int j = 0; j < 2; ++j)
        for (int r = 0; r < 96; ++r)
            for (int c = 0; c < 96; ++c) K(r, c) += w[j] * orb[j][r] * std::conj(orb[j][c]);
    return DenseKernel(g, K, hbar);
}

}  // namespace

TEST(Norms, TraceAndHilbertSchmidt) {
    auto g = make_grid(1, 32, 6.0);
    std::mt19937_64 rng(3);
    auto orb = fixtures::random_orbitals(g, 1, rng);
    auto P = projector(orb[0]);
    EXPECT_NEAR(trace_norm(P), 1.0, 1e-12);
    EXPECT_NEAR(hs_norm(P), 1.0, 1e-12);

    auto A = fixtures::random_hermitian(g, rng);
    EXPECT_NEAR(trace_norm(A), oracle::trace_norm(A.op()), 1e-9 * trace_norm(A));
    const Eigen::MatrixXcd op = A.op();
    EXPECT_NEAR(hs_norm(A), std::sqrt((op.adjoint() * op).trace().real()), 1e-10 * hs_norm(A));
}

TEST(FourierNorm, MatchesDirectTransform) {
    auto g = make_grid(1, 8, 3.0, -1.0);
    auto pa = PhaseAxis::symmetric(6, 2.0);
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    PhaseSpaceDistribution f(g, pa);
    for (auto& v : f.values) v = u(rng);

    for (double s : {0.0, 1.0, 2.5}) {
        double best = 0.0;
        for (int jx = -4; jx < 4; ++jx)
            for (int jp = -3; jp < 3; ++jp) {
                const double zx = 2 * pi * jx / g.length(), zp = 2 * pi * jp / pa.period();
                cplx acc = 0.0;
                for (std::size_t ix = 0; ix < f.x_size(); ++ix)
                    for (std::size_t ip = 0; ip < f.p_size(); ++ip)
                        acc += f(ix, ip) * std::polar(1.0, -(zx * g.position(ix)[0] + zp * f.momentum(ip)[0]));
                const double w = std::pow(1.0 + std::hypot(zx, zp), -s);
                best = std::max(best, w * std::abs(acc) * f.cell_volume());
            }
        EXPECT_NEAR(fourier_norm(f, s), best, 1e-12 * std::max(1.0, best)) << "s=" << s;
    }
}

TEST(FourierNorm, GaussianWithShiftedMode) {
    // f = G (c + cos(k0 x)) with G of variance v centred at x = 6, where
    // e^{i 6 k0} = 1: |f_hat(k, 0)| = c e^{-v k^2/2} + (e^{-v (k-k0)^2/2} + e^{-v (k+k0)^2/2}) / 2,
    // and nonzero momentum frequencies only lower it.
    const double v = 0.3, L = 12.0;
    const double k0 = 2 * pi * 6 / L;
    auto g = make_grid(1, 128, L);
    auto pa = PhaseAxis::symmetric(128, 8.0);
    for (double c : {1.0, 0.0}) {
        auto f = tabulate(g, pa, [&](auto x, auto p) {
            const double dx = x[0] - 6.0;
            return std::exp(-(dx * dx + p[0] * p[0]) / (2 * v)) / (2 * pi * v) * (c + std::cos(k0 * x[0]));
        });
        for (double s : {0.0, 1.0, 2.0, 5.0}) {
            double best = 0.0;
            for (int j = -64; j < 64; ++j) {
                const double k = 2 * pi * j / L;
                const double amp = c * std::exp(-v * k * k / 2) +
                                   0.5 * (std::exp(-v * (k - k0) * (k - k0) / 2) + std::exp(-v * (k + k0) * (k + k0) / 2));
                best = std::max(best, amp * std::pow(1.0 + std::abs(k), -s));
            }
            EXPECT_NEAR(fourier_norm(f, s), best, 1e-10) << "c=" << c << " s=" << s;
        }
    }
}

TEST(OpFourierNorm, MatchesDenseTraceFormula) {
    const double hbar = 0.8;
    auto K = localized_state(hbar);
    const auto& g = K.grid;
    const int n = g.points_per_dim();
    const double h = g.spacing();

    // Spectral derivative as an explicit sum, then O = D exp(eta hbar d/dx) D.
    Eigen::MatrixXcd deriv = Eigen::MatrixXcd::Zero(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            cplx s = 0.0;
            for (int m = -n / 2; m < n / 2; ++m) {
                const double k = 2 * pi * m / g.length();
                s += cplx(0.0, k) * std::polar(1.0, k * (i - j) * h);
            }
            deriv(i, j) = s / static_cast<double>(n);
        }
    const Eigen::MatrixXcd rho = K.op();
    const auto chi = characteristic_window(K);

    // A sparse sample of lattice points keeps the dense exponentials cheap.
    const std::vector<int> as{-24, -7, 0, 3, 17}, bs{-30, -5, 0, 2, 11};
    for (int a : as)
        for (int b : bs) {
            const double xi = 2 * pi * a / g.length(), eta = b * h / hbar;
            Eigen::MatrixXcd S = (eta * hbar * deriv).exp();
            Eigen::VectorXcd d(n);
            for (int i = 0; i < n; ++i) d[i] = std::polar(1.0, 0.5 * xi * g.position(static_cast<std::size_t>(i))[0]);
            const Eigen::MatrixXcd O = d.asDiagonal() * S * d.asDiagonal();
            const double ref = std::abs((O * rho).trace());
            EXPECT_NEAR(std::abs(chi.at({a, 0, 0}, {b, 0, 0})), ref, 1e-10) << a << "," << b;
        }
}

TEST(OpFourierNorm, SupOverWindowAndWeights) {
    auto K = localized_state(1.0);
    // At s = 0 the supremum is |Tr K| = 1, attained at the origin.
    EXPECT_NEAR(op_fourier_norm(K, 0.0), 1.0, 1e-12);
    const double e1 = op_fourier_norm(K, 1.0);
    const double l1 = op_fourier_norm(K, 1.0, {FrequencyWeight::l1});
    EXPECT_LE(l1, e1 + 1e-15);
    EXPECT_LE(e1, 1.0 + 1e-12);
    // Trimming the lattice cannot increase the supremum.
    EXPECT_LE(op_fourier_norm(K, 2.0, {FrequencyWeight::euclidean, 4}), op_fourier_norm(K, 2.0) + 1e-15);
}

TEST(OpFourierNorm, AgreesWithWignerTransformNorm) {
    for (double hbar : {1.0, 0.5}) {
        auto K = localized_state(hbar);
        auto f = wigner(K, hbar);
        for (double s : {0.0, 1.0, 2.0}) {
            const double lhs = fourier_norm(f, s);
            const double rhs = hbar * op_fourier_norm(K, s);
            EXPECT_NEAR(lhs, rhs, 1e-10 * rhs) << "hbar=" << hbar << " s=" << s;
        }
    }
}

TEST(HMinus1, CosineModes) {
    const double L = 10.0;
    auto g = make_grid(1, 32, L);
    auto pa = PhaseAxis::symmetric(40, 5.0);
    const double kx = 2 * pi * 3 / L, kp = 2 * pi * 2 / pa.period();
    // u = cos(kx x + kp p) + 0.5 sin(kp p); g = -Lap u, so ||g||_{-1} = ||grad u||_2.
    auto f = tabulate(g, pa, [&](auto x, auto p) {
        return (kx * kx + kp * kp) * std::cos(kx * x[0] + kp * p[0]) + 0.5 * kp * kp * std::sin(kp * p[0]);
    });
    double grad2 = 0.0;
    for (std::size_t ix = 0; ix < f.x_size(); ++ix)
        for (std::size_t ip = 0; ip < f.p_size(); ++ip) {
            const double x = g.position(ix)[0], p = f.momentum(ip)[0];
            const double sn = std::sin(kx * x + kp * p);
            const double ux = -kx * sn, up = -kp * sn + 0.5 * kp * std::cos(kp * p);
            grad2 += ux * ux + up * up;
        }
    grad2 *= f.cell_volume();
    auto r = h_minus_1(f);
    EXPECT_NEAR(r.value, std::sqrt(grad2), 1e-10 * std::sqrt(grad2));
    EXPECT_LE(r.zero_mode, 1e-10);

    // Adding a constant only moves the zero mode.
    for (auto& v : f.values) v += 0.25;
    auto r2 = h_minus_1(f);
    EXPECT_NEAR(r2.value, r.value, 1e-10 * r.value);
    EXPECT_NEAR(r2.zero_mode, 0.25 * g.volume() * pa.period(), 1e-10);
}

TEST(TestFunctions, AdmissibilityNorms) {
    for (double sigma : {0.3, 1.0, 2.5}) {
        // d = 1: ||zeta h_hat||_2 = sqrt(pi) for every width.
        auto [a1, b1] = gaussian_test_norms(sigma, 1);
        EXPECT_NEAR(b1, std::sqrt(pi), 1e-8);
        // 1 <= E sqrt(1 + r^2) <= sqrt(1 + E r^2) under the Gaussian law of zeta.
        EXPECT_GE(a1, 1.0 - 1e-10);
        EXPECT_LE(a1, std::sqrt(1.0 + 2.0 / (sigma * sigma)) + 1e-10);
        EXPECT_GE(a1, std::sqrt(pi / 2) / sigma - 1e-10);

        // d = 2 from the Gaussian second moment in four dimensions.
        auto [a2, b2] = gaussian_test_norms(sigma, 2);
        const double l2sq = std::pow(2 * pi, -4) * std::pow(2 * pi * sigma * sigma, 4) * (4.0 / (2 * sigma * sigma)) *
                            std::pow(pi / (sigma * sigma), 2);
        EXPECT_NEAR(b2, std::sqrt(l2sq), 1e-8 * std::sqrt(l2sq));
        EXPECT_GE(a2, 1.0 - 1e-10);
        EXPECT_LE(a2, std::sqrt(1.0 + 4.0 / (sigma * sigma)) + 1e-10);
    }
    auto h = admissible_gaussian({0, 0, 0, 0}, 0.7, 1);
    auto [a, b] = gaussian_test_norms(0.7, 1);
    EXPECT_NEAR(std::max(a, b) * h.scale, 1.0, 1e-14);
}

TEST(Variational, PairingMatchesGaussianOverlap) {
    const double var = 0.2, sh = 0.6;
    auto g = make_grid(1, 96, 12.0);
    auto pa = PhaseAxis::symmetric(96, 6.0);
    auto f = gaussian_density(g, pa, 6.0, 0.0, var);
    TestFunction h{{6.4, -0.3, 0, 0}, sh, 1.0};
    const double s2 = sh * sh + var;
    const double expect = (sh * sh / s2) * std::exp(-(0.4 * 0.4 + 0.3 * 0.3) / (2 * s2));
    EXPECT_NEAR(pairing(h, f), expect, 1e-10);
}

TEST(Variational, DictionaryBoundBelowFourierNorm) {
    auto g = make_grid(1, 64, 10.0);
    auto pa = PhaseAxis::symmetric(64, 5.0);
    auto f = gaussian_density(g, pa, 5.0, 0.5, 0.15);
    auto f2 = gaussian_density(g, pa, 4.0, -0.5, 0.15);
    for (std::size_t i = 0; i < f.values.size(); ++i) f.values[i] -= f2.values[i];

    auto dict = gaussian_dictionary(g, 4.0, {0.3, 0.6, 1.2}, 60, 7);
    auto dict2 = gaussian_dictionary(g, 4.0, {0.3, 0.6, 1.2}, 60, 7);
    ASSERT_EQ(dict.size(), 60u);
    EXPECT_EQ(dict[17].center, dict2[17].center);
    auto vb = variational_norm(f, dict);
    EXPECT_GT(vb.lower_bound, 0.0);
    // |<h, g>| <= ||<zeta> h_hat||_1 sup |g_hat| / <zeta> <= |g|_1.
    EXPECT_LE(vb.lower_bound, fourier_norm(f, 1.0) * (1.0 + 1e-8));
}

TEST(CouplingCost, CoherentMomentsGiveUpperBound) {
    const double hbar = 0.1;
    auto g = make_grid(1, 64, 8.0);
    auto pa = PhaseAxis::symmetric(32, 2.0);
    PhaseSpaceDistribution f = gaussian_density(g, pa, 4.0, 0.0, 0.05);
    // Keep the support small: the cost scales with the number of positive nodes.
    for (auto& v : f.values)
        if (v < 1e-6 * f.max()) v = 0.0;
    const double m = f.mass();
    for (auto& v : f.values) v /= m;

    auto r = toeplitz_coupling_cost(f, hbar);
    EXPECT_DOUBLE_EQ(r.E_upper, std::sqrt(hbar / 2));
    EXPECT_DOUBLE_EQ(r.bound_sqrt_dh, std::sqrt(hbar));
    EXPECT_NEAR(r.E_numeric, r.E_upper, 1e-8 * r.E_upper);
    for (double c : r.cost_integrand) EXPECT_NEAR(c, hbar / 2, 1e-8);
    EXPECT_LE(r.E_numeric, r.bound_sqrt_dh);

    auto bad = f;
    bad.values[0] = -1.0;
    EXPECT_THROW(toeplitz_coupling_cost(bad, hbar), InvalidArgument);
    auto heavy = f;
    for (auto& v : heavy.values) v *= 2.0;
    EXPECT_THROW(toeplitz_coupling_cost(heavy, hbar), InvalidArgument);
}

TEST(FourierNorm, ZeroAndMonotoneInS) {
    auto g = make_grid(1, 16, 4.0);
    auto pa = PhaseAxis::symmetric(16, 3.0);
    PhaseSpaceDistribution zero(g, pa);
    EXPECT_EQ(fourier_norm(zero, 1.0), 0.0);
    EXPECT_EQ(h_minus_1(zero).value, 0.0);
    std::mt19937_64 rng(8);
    std::normal_distribution<double> nd;
    PhaseSpaceDistribution f(g, pa);
    for (auto& v : f.values) v = nd(rng);
    double prev = fourier_norm(f, 0.0);
    for (double s = 0.25; s <= 4.0; s += 0.25) {
        const double cur = fourier_norm(f, s);
        EXPECT_LE(cur, prev);
        prev = cur;
    }
}

TEST(OpFourierNorm, ParticleNumberScaling) {
    // M orbitals with hbar = 1/M in d = 1: the identity observable gives M and
    // the Wigner side carries the factor 1/M.
    const int M = 4;
    auto g = make_grid(1, 96, 16.0);
    auto orb = fixtures::packet_orbitals(g, M, 8.0, 0.6);
    const double hbar = 1.0 / M;
    auto K = to_dense(DensityMatrix::zero_temperature(orb), hbar);
    EXPECT_NEAR(op_fourier_norm(K, 0.0), M, 1e-10);
    auto f = wigner(K, hbar);
    for (double s : {0.0, 1.0, 2.0})
        EXPECT_NEAR(fourier_norm(f, s), op_fourier_norm(K, s) / M, 1e-10) << "s=" << s;
}

TEST(HMinus1, RandomMeanZeroMatchesDirectSum) {
    auto g = make_grid(1, 8, 2.0);
    auto pa = PhaseAxis::symmetric(6, 1.5);
    std::mt19937_64 rng(12);
    std::normal_distribution<double> nd;
    PhaseSpaceDistribution f(g, pa);
    for (auto& v : f.values) v = nd(rng);
    const double mean = f.mass() / f.cell_volume() / f.values.size();
    for (auto& v : f.values) v -= mean;

    double s = 0.0;
    for (int jx = -4; jx < 4; ++jx)
        for (int jp = -3; jp < 3; ++jp) {
            if (jx == 0 && jp == 0) continue;
            const double zx = 2 * pi * jx / g.length(), zp = 2 * pi * jp / pa.period();
            cplx acc = 0.0;
            for (std::size_t ix = 0; ix < f.x_size(); ++ix)
                for (std::size_t ip = 0; ip < f.p_size(); ++ip)
                    acc += f(ix, ip) * std::polar(1.0, -(zx * g.position(ix)[0] + zp * f.momentum(ip)[0]));
            s += std::norm(acc * f.cell_volume()) / (zx * zx + zp * zp);
        }
    const double ref = std::sqrt(s / (g.volume() * pa.period()));
    auto r = h_minus_1(f);
    EXPECT_NEAR(r.value, ref, 1e-10 * ref);
    EXPECT_LE(r.zero_mode, 1e-12);
}

TEST(Variational, SingleFunctionDictionary) {
    auto g = make_grid(1, 64, 10.0);
    auto pa = PhaseAxis::symmetric(64, 5.0);
    auto h = admissible_gaussian({5.0, 0.5, 0, 0}, 0.8, 1);
    auto f = tabulate(g, pa, [&](auto, auto) { return 0.0; });
    EXPECT_EQ(variational_norm(f, {h}).lower_bound, 0.0);
    for (std::size_t ix = 0; ix < f.x_size(); ++ix)
        for (std::size_t ip = 0; ip < f.p_size(); ++ip) f(ix, ip) = h(f, ix, ip);
    // <h, h> = scale^2 pi width^2 for a well-resolved Gaussian in two phase dimensions.
    EXPECT_NEAR(variational_norm(f, {h}).lower_bound, h.scale * h.scale * pi * 0.64, 1e-10);
}

TEST(CouplingCost, AnalyticValueBelowBound) {
    for (double hbar = 0.05; hbar <= 1.0; hbar += 0.05)
        for (int d : {1, 2}) EXPECT_LE(std::sqrt(d * hbar / 2), std::sqrt(d * hbar) + 1e-8);
    // hbar = 0.04 in d = 1.
    auto g = make_grid(1, 128, 8.0);
    auto pa = PhaseAxis::symmetric(16, 1.0);
    PhaseSpaceDistribution f(g, pa);
    f(64, 8) = 1.0 / f.cell_volume();
    auto r = toeplitz_coupling_cost(f, 0.04);
    EXPECT_NEAR(r.E_upper, 0.1414213562, 1e-9);
    EXPECT_NEAR(r.bound_sqrt_dh, 0.2, 1e-14);
    EXPECT_NEAR(r.E_numeric, r.E_upper, 0.02 * r.E_upper);
}
