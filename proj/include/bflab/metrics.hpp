#pragma once

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bflab/phasespace.hpp"

namespace bflab {

// Operator norms use the continuum scaling: the operator of a kernel K is
// K h^d, so a normalized projector has trace norm 1 on any grid.

inline double trace_norm(const DenseKernel& K) {
    // Jacobi rather than BDCSVD: the divide-and-conquer path loses accuracy on
    // clustered singular values, which projector differences produce routinely.
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(K.op());
    return svd.singularValues().sum();
}

inline double hs_norm(const DenseKernel& K) { return K.op().norm(); }

namespace detail {

// Angular frequency of every FFT node of a phase tensor, axis by axis.
inline std::vector<std::vector<double>> phase_frequencies(const PhaseSpaceDistribution& g) {
    std::vector<std::vector<double>> out;
    for (int a = 0; a < g.dim(); ++a) {
        std::vector<double> f(static_cast<std::size_t>(g.xgrid.points_per_dim()));
        for (int j = 0; j < g.xgrid.points_per_dim(); ++j) f[j] = g.xgrid.wavenumber(j);
        out.push_back(std::move(f));
    }
    for (int a = 0; a < g.dim(); ++a) {
        std::vector<double> f(static_cast<std::size_t>(g.paxis.count));
        for (int j = 0; j < g.paxis.count; ++j) f[j] = 2.0 * pi * fft_frequency(j, g.paxis.count) / g.paxis.period();
        out.push_back(std::move(f));
    }
    return out;
}

// |zeta|^2 of FFT node i.
inline double node_zeta2(std::size_t i, const std::vector<int>& dims, const std::vector<std::vector<double>>& freq) {
    double z2 = 0.0;
    for (int a = static_cast<int>(dims.size()) - 1; a >= 0; --a) {
        const double z = freq[a][i % dims[a]];
        i /= dims[a];
        z2 += z * z;
    }
    return z2;
}

// g_hat(zeta) = sum g(z) e^{-i zeta z} dz at every FFT node, up to a phase
// from the axis origins (moduli are exact).
inline std::vector<cplx> phase_spectrum(const PhaseSpaceDistribution& g) {
    std::vector<cplx> buf(g.values.begin(), g.values.end());
    fft_forward(buf, g.dims());
    const double cell = g.cell_volume();
    for (auto& v : buf) v *= cell;
    return buf;
}

}  // namespace detail

/// |g|_s = sup_zeta (1 + |zeta|)^{-s} |g_hat(zeta)| over the FFT nodes of the
/// phase grid, g_hat with the continuum normalization int g e^{-i zeta z} dz.
inline double fourier_norm(const PhaseSpaceDistribution& g, double s) {
    require(s >= 0.0, "fourier norm needs s >= 0");
    const auto spec = detail::phase_spectrum(g);
    const auto dims = g.dims();
    const auto freq = detail::phase_frequencies(g);
    double best = 0.0;
    for (std::size_t i = 0; i < spec.size(); ++i) {
        const double w = std::pow(1.0 + std::sqrt(detail::node_zeta2(i, dims, freq)), -s);
        best = std::max(best, w * std::abs(spec[i]));
    }
    return best;
}

enum class FrequencyWeight { euclidean, l1 };

/// Lattice and weight for op_fourier_norm. The default lattice is the full
/// characteristic window of the kernel grid, i.e. the frequencies of the
/// wigner phase grid that carry the transform; `max_index` < n/2 trims it.
struct OpFourierOptions {
    FrequencyWeight weight = FrequencyWeight::euclidean;
    int max_index = -1;
};

/// |||K|||_s = sup_{xi, eta} w(xi, eta)^{-s} |Tr(O_{xi,eta} K)| with
/// O = e^{i xi x/2} e^{i eta p} e^{i xi x/2}, xi = 2 pi a/L, eta = b h/hbar.
/// w is 1 + |(xi, eta)| by default and 1 + |xi| + |eta| with the l1 weight.
/// With the default weight and lattice, fourier_norm(wigner(K)) equals
/// hbar^d |||K|||_s whenever K's characteristic function vanishes on the
/// window edges (states localized within half the box and band-limited
/// below half the grid Nyquist frequency).
inline double op_fourier_norm(const DenseKernel& K, double s, const OpFourierOptions& opt = {}) {
    require(s >= 0.0, "fourier norm needs s >= 0");
    const auto& g = K.grid;
    const int d = g.dim(), half = g.points_per_dim() / 2;
    const int lim = opt.max_index < 0 ? half : std::min(opt.max_index, half);
    const CharacteristicWindow chi = characteristic_window(K);
    double best = 0.0;
    detail::for_each_box(d, -lim, lim, [&](const std::array<int, 3>& a) {
        detail::for_each_box(d, -lim, lim, [&](const std::array<int, 3>& b) {
            double xi2 = 0.0, eta2 = 0.0;
            for (int k = 0; k < d; ++k) {
                const double xi = 2.0 * pi * a[k] / g.length();
                const double eta = b[k] * g.spacing() / K.hbar;
                xi2 += xi * xi;
                eta2 += eta * eta;
            }
            const double w = opt.weight == FrequencyWeight::euclidean ? 1.0 + std::sqrt(xi2 + eta2)
                                                                      : 1.0 + std::sqrt(xi2) + std::sqrt(eta2);
            best = std::max(best, std::pow(w, -s) * std::abs(chi.at(a, b)));
        });
    });
    return best;
}

struct HMinus1 {
    double value = 0.0;
    double zero_mode = 0.0;  ///< |g_hat(0)|, excluded from the sum
};

/// ||g||_{H^-1} = ((2 pi)^{-2d} sum_{zeta != 0} |g_hat|^2 / |zeta|^2 dzeta)^{1/2}
/// on the FFT nodes of the phase grid; the zero mode is reported separately.
inline HMinus1 h_minus_1(const PhaseSpaceDistribution& g) {
    const auto spec = detail::phase_spectrum(g);
    const auto dims = g.dims();
    const auto freq = detail::phase_frequencies(g);
    double s = 0.0;
    for (std::size_t i = 1; i < spec.size(); ++i) s += std::norm(spec[i]) / detail::node_zeta2(i, dims, freq);
    const double volume = g.xgrid.volume() * std::pow(g.paxis.period(), g.dim());
    return {std::sqrt(s / volume), std::abs(spec[0])};
}

/// Gaussian test function h(z) = scale e^{-|z - center|^2 / (2 width^2)} on
/// phase space (position components by minimum image on the box).
struct TestFunction {
    std::array<double, 4> center{0, 0, 0, 0};  ///< (x..., p...)
    double width = 1.0;
    double scale = 1.0;

    double operator()(const PhaseSpaceDistribution& f, std::size_t ix, std::size_t ip) const {
        const int d = f.dim();
        auto x = f.xgrid.position(ix);
        auto p = f.momentum(ip);
        double r2 = 0.0;
        for (int a = 0; a < d; ++a) {
            const double dx = f.xgrid.wrap(x[a] - center[a]);
            const double dp = p[a] - center[d + a];
            r2 += dx * dx + dp * dp;
        }
        return scale * std::exp(-0.5 * r2 / (width * width));
    }
};

/// Both admissibility norms of the unit-amplitude Gaussian of width sigma in
/// D = 2d phase dimensions, with the Fourier measure dzeta / (2 pi)^D:
/// first = ||<zeta> h_hat||_{L^1}, second = ||zeta h_hat||_{L^2}.
inline std::pair<double, double> gaussian_test_norms(double sigma, int d) {
    const int D = 2 * d;
    const double sphere = D == 2 ? 2.0 * pi : 2.0 * pi * pi;  // |S^{D-1}|
    const double amp = std::pow(2.0 * pi * sigma * sigma, 0.5 * D);
    // Radial trapezoid; the integrands are negligible beyond r = 12 / sigma.
    const int steps = 20000;
    const double rmax = 12.0 / sigma, dr = rmax / steps;
    double l1 = 0.0, l2 = 0.0;
    for (int k = 1; k <= steps; ++k) {
        const double r = k * dr;
        const double wk = (k == steps) ? 0.5 : 1.0;
        const double hh = amp * std::exp(-0.5 * sigma * sigma * r * r);
        const double shell = sphere * std::pow(r, D - 1);
        l1 += wk * std::sqrt(1.0 + r * r) * hh * shell;
        l2 += wk * r * r * hh * hh * shell;
    }
    const double meas = std::pow(2.0 * pi, -D);
    return {l1 * dr * meas, std::sqrt(l2 * dr * meas)};
}

/// Test function scaled so that both constraints hold with the larger one
/// equal to 1.
inline TestFunction admissible_gaussian(std::array<double, 4> center, double width, int d) {
    auto [a, b] = gaussian_test_norms(width, d);
    return {center, width, 1.0 / std::max(a, b)};
}

/// `count` admissible Gaussians with centers drawn uniformly from the box x
/// [-pmax, pmax]^d and widths from `widths` in turn; deterministic in `seed`.
inline std::vector<TestFunction> gaussian_dictionary(const SpectralGrid& xgrid, double pmax,
                                                     const std::vector<double>& widths, int count,
                                                     std::uint64_t seed) {
    require(!widths.empty() && count >= 1, "dictionary needs widths and a positive count");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ux(0.0, 1.0);
    std::vector<TestFunction> out;
    const int d = xgrid.dim();
    for (int k = 0; k < count; ++k) {
        std::array<double, 4> c{0, 0, 0, 0};
        for (int a = 0; a < d; ++a) c[a] = xgrid.origin() + xgrid.length() * ux(rng);
        for (int a = 0; a < d; ++a) c[d + a] = pmax * (2.0 * ux(rng) - 1.0);
        out.push_back(admissible_gaussian(c, widths[static_cast<std::size_t>(k) % widths.size()], d));
    }
    return out;
}

/// <h, g> = int h g dz by the phase-grid quadrature.
inline double pairing(const TestFunction& h, const PhaseSpaceDistribution& g) {
    double s = 0.0;
    for (std::size_t ix = 0; ix < g.x_size(); ++ix)
        for (std::size_t ip = 0; ip < g.p_size(); ++ip) s += h(g, ix, ip) * g(ix, ip);
    return s * g.cell_volume();
}

struct VariationalBound {
    double lower_bound = 0.0;  ///< max_h |<h, g>| over the dictionary
    std::size_t argmax = 0;
};

/// Dictionary lower bound on sup{<h, g> : ||<zeta> h_hat||_1 <= 1, ||zeta h_hat||_2 <= 1}.
/// The dictionary is closed under h -> -h implicitly, hence the modulus.
inline VariationalBound variational_norm(const PhaseSpaceDistribution& g, const std::vector<TestFunction>& dict) {
    VariationalBound r;
    for (std::size_t k = 0; k < dict.size(); ++k) {
        const double v = std::abs(pairing(dict[k], g));
        if (v > r.lower_bound) r = {v, k};
    }
    return r;
}

struct CouplingCostReport {
    double hbar = 0.0;
    int dim = 1;
    double E_upper = 0.0;        ///< sqrt(d hbar / 2) from the coherent-state moments
    double bound_sqrt_dh = 0.0;  ///< sqrt(d hbar)
    double E_numeric = 0.0;      ///< same functional with moments integrated on the grid
    std::vector<double> cost_integrand;  ///< <c_z, c_hbar(z) c_z> at every node with f > 0
};

/// Cost of the coupling z -> hbar^{-d} f(z) |c_z><c_z| between f and its
/// anti-Wick quantization, E = hbar^{d/2} (int Tr[Q(z) c_hbar(z)] dz)^{1/2}
/// with c_hbar(z) = (|x - x_op|^2 + |p - p_op|^2) / 2.
inline CouplingCostReport toeplitz_coupling_cost(const PhaseSpaceDistribution& f, double hbar) {
    require(hbar > 0.0, "hbar must be positive");
    const double fmax = std::max(std::abs(f.max()), 1e-300);
    require(f.min() >= -1e-12 * fmax, "coupling cost needs f >= 0");
    require(std::abs(f.mass() - 1.0) <= 1e-8, "coupling cost needs a probability density");
    const int d = f.dim();
    CouplingCostReport r;
    r.hbar = hbar;
    r.dim = d;
    r.E_upper = std::sqrt(d * hbar / 2.0);
    r.bound_sqrt_dh = std::sqrt(d * hbar);

    const auto& g = f.xgrid;
    double acc = 0.0;
    for (std::size_t ix = 0; ix < f.x_size(); ++ix) {
        const auto x0 = g.position(ix);
        for (std::size_t ip = 0; ip < f.p_size(); ++ip) {
            const double w = f(ix, ip);
            if (w <= 0.0) continue;
            const auto p0 = f.momentum(ip);
            const Field c = coherent_state(g, x0, p0, hbar);
            double xm = 0.0;
            for (std::size_t i = 0; i < g.size(); ++i) {
                const auto y = g.position(i);
                double r2 = 0.0;
                for (int a = 0; a < d; ++a) {
                    const double dy = g.wrap(y[a] - x0[a]);
                    r2 += dy * dy;
                }
                xm += r2 * std::norm(c[i]);
            }
            xm *= g.cell_volume();
            const auto spec = spectrum(c);
            double pm = 0.0;
            for (std::size_t i = 0; i < g.size(); ++i) {
                const auto k = g.wavevector(i);
                double q2 = 0.0;
                for (int a = 0; a < d; ++a) {
                    const double q = hbar * k[a] - p0[a];
                    q2 += q * q;
                }
                pm += q2 * std::norm(spec[i]);
            }
            pm /= g.volume();
            const double moment = 0.5 * (xm + pm);
            r.cost_integrand.push_back(moment);
            acc += w * moment;
        }
    }
    acc *= f.cell_volume() * std::pow(hbar, -d);
    r.E_numeric = std::pow(hbar, 0.5 * d) * std::sqrt(acc);
    return r;
}

}  // namespace bflab
