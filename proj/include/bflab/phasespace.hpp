#pragma once

#include <array>
#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "bflab/dense.hpp"

namespace bflab {

/// Largest phase-space tensor (entries) any transform will allocate.
inline constexpr std::size_t kPhaseBudget = std::size_t(1) << 22;

/// Uniform momentum axis p_j = first + j * spacing, shared by every momentum
/// dimension.
struct PhaseAxis {
    int count = 0;
    double spacing = 1.0;
    double first = 0.0;

    double at(int j) const { return first + j * spacing; }
    double period() const { return count * spacing; }

    /// Cell-centred axis covering [-pmax, pmax].
    static PhaseAxis symmetric(int count, double pmax) {
        require(count >= 2 && pmax > 0.0, "momentum axis needs count >= 2 and pmax > 0");
        const double dp = 2.0 * pmax / count;
        return {count, dp, -pmax + 0.5 * dp};
    }

    /// p_j = (j - n) pi hbar / L for j in [0, 2n): hbar times the FFT dual of
    /// the half-step offset axis of an n-point grid.
    static PhaseAxis wigner_dual(const SpectralGrid& g, double hbar) {
        require(hbar > 0.0, "hbar must be positive");
        const int n = g.points_per_dim();
        const double dp = pi * hbar / g.length();
        return {2 * n, dp, -n * dp};
    }

    bool matches(const PhaseAxis& o) const {
        const double tol = 1e-12 * std::max(std::abs(spacing), std::abs(o.spacing));
        return count == o.count && std::abs(spacing - o.spacing) <= tol &&
               std::abs(first - o.first) <= tol * std::max(1, count);
    }
};

/// Real function f(x, p) on xgrid x (momentum axis)^d. Storage is row-major
/// with the position index outermost: values[ix * p_size() + ip], and the
/// momentum multi-index row-major with the last axis fastest.
struct PhaseSpaceDistribution {
    SpectralGrid xgrid;
    PhaseAxis paxis;
    std::vector<double> values;

    PhaseSpaceDistribution() = default;
    PhaseSpaceDistribution(const SpectralGrid& xg, const PhaseAxis& pa) : xgrid(xg), paxis(pa) {
        require(xg.dim() <= 2, "phase-space tensors are limited to d <= 2");
        require(pa.count >= 2 && pa.spacing > 0.0, "invalid momentum axis");
        if (static_cast<double>(xg.size()) * std::pow(static_cast<double>(pa.count), xg.dim()) >
            static_cast<double>(kPhaseBudget))
            throw BudgetExceeded("phase-space tensor exceeds the 2^22-entry budget");
        values.assign(size(), 0.0);
    }

    int dim() const { return xgrid.dim(); }
    std::size_t x_size() const { return xgrid.size(); }
    std::size_t p_size() const {
        std::size_t s = 1;
        for (int a = 0; a < dim(); ++a) s *= static_cast<std::size_t>(paxis.count);
        return s;
    }
    std::size_t size() const { return x_size() * p_size(); }
    std::size_t index(std::size_t ix, std::size_t ip) const { return ix * p_size() + ip; }

    double& operator()(std::size_t ix, std::size_t ip) { return values[index(ix, ip)]; }
    double operator()(std::size_t ix, std::size_t ip) const { return values[index(ix, ip)]; }

    std::array<int, 3> p_indices(std::size_t ip) const {
        std::array<int, 3> idx{0, 0, 0};
        for (int a = dim() - 1; a >= 0; --a) {
            idx[a] = static_cast<int>(ip % paxis.count);
            ip /= paxis.count;
        }
        return idx;
    }

    std::array<double, 3> momentum(std::size_t ip) const {
        auto idx = p_indices(ip);
        std::array<double, 3> p{0, 0, 0};
        for (int a = 0; a < dim(); ++a) p[a] = paxis.at(idx[a]);
        return p;
    }

    /// FFT shape: position axes first, then momentum axes.
    std::vector<int> dims() const {
        std::vector<int> d(static_cast<std::size_t>(dim()), xgrid.points_per_dim());
        for (int a = 0; a < dim(); ++a) d.push_back(paxis.count);
        return d;
    }

    double cell_volume() const { return xgrid.cell_volume() * std::pow(paxis.spacing, dim()); }

    double mass() const {
        double s = 0.0;
        for (double v : values) s += v;
        return s * cell_volume();
    }

    double min() const { return *std::min_element(values.begin(), values.end()); }
    double max() const { return *std::max_element(values.begin(), values.end()); }

    /// rho(x) = int f(x, p) dp.
    RealField position_density() const {
        RealField rho(xgrid);
        const double dp = std::pow(paxis.spacing, dim());
        for (std::size_t ix = 0; ix < x_size(); ++ix) {
            double s = 0.0;
            for (std::size_t ip = 0; ip < p_size(); ++ip) s += (*this)(ix, ip);
            rho[ix] = s * dp;
        }
        return rho;
    }

    /// int (|x|^2 + |p|^2) f with x the raw grid coordinate.
    double second_moment() const {
        double s = 0.0;
        for (std::size_t ix = 0; ix < x_size(); ++ix) {
            auto x = xgrid.position(ix);
            double x2 = 0.0;
            for (int a = 0; a < dim(); ++a) x2 += x[a] * x[a];
            for (std::size_t ip = 0; ip < p_size(); ++ip) {
                auto p = momentum(ip);
                double p2 = 0.0;
                for (int a = 0; a < dim(); ++a) p2 += p[a] * p[a];
                s += (x2 + p2) * (*this)(ix, ip);
            }
        }
        return s * cell_volume();
    }

    bool same_axes(const PhaseSpaceDistribution& o) const { return xgrid == o.xgrid && paxis.matches(o.paxis); }
};

/// Phase grid on which wigner(K) lives for kernels on `g`: positions at half
/// the kernel spacing (2n points on the same box) and the dual momentum axis.
inline PhaseSpaceDistribution wigner_phase_grid(const SpectralGrid& g, double hbar) {
    return PhaseSpaceDistribution(SpectralGrid(g.dim(), 2 * g.points_per_dim(), g.length(), g.origin()),
                                  PhaseAxis::wigner_dual(g, hbar));
}

namespace detail {

// Row-major flat index of a 2d-axis multi-index with periodic wrap.
inline std::size_t wrap_flat(const std::array<int, 6>& idx, int axes, int n) {
    std::size_t flat = 0;
    for (int a = 0; a < axes; ++a) flat = flat * n + static_cast<std::size_t>(((idx[a] % n) + n) % n);
    return flat;
}

// Iterates every d-dimensional integer vector with components in [lo, hi].
template <class F>
void for_each_box(int d, int lo, int hi, F&& fn) {
    std::array<int, 3> v{lo, lo, lo};
    for (int a = d; a < 3; ++a) v[a] = 0;
    while (true) {
        fn(v);
        int a = d - 1;
        while (a >= 0 && v[a] == hi) v[a--] = lo;
        if (a < 0) return;
        ++v[a];
    }
}

inline double edge_weight(const std::array<int, 3>& v, int d, int half) {
    double w = 1.0;
    for (int a = 0; a < d; ++a)
        if (std::abs(v[a]) == half) w *= 0.5;
    return w;
}

}  // namespace detail

/// Tr(O K) for O = e^{i xi x/2} e^{i eta p} e^{i xi x/2} on the lattice
/// xi = 2 pi a / L, hbar eta = b h with |a_k|, |b_k| <= n/2. Positions are
/// measured from the grid origin and the translation by b h wraps around the
/// box. The values depend on hbar only through the lattice labels.
struct CharacteristicWindow {
    SpectralGrid grid;
    std::vector<cplx> values;  // ((a + n/2) ..., (b + n/2) ...) row-major, side n + 1

    int side() const { return grid.points_per_dim() + 1; }

    std::size_t offset(const std::array<int, 3>& a, const std::array<int, 3>& b) const {
        const int d = grid.dim(), half = grid.points_per_dim() / 2;
        std::size_t flat = 0;
        for (int k = 0; k < d; ++k) flat = flat * side() + static_cast<std::size_t>(a[k] + half);
        for (int k = 0; k < d; ++k) flat = flat * side() + static_cast<std::size_t>(b[k] + half);
        return flat;
    }

    cplx at(const std::array<int, 3>& a, const std::array<int, 3>& b) const { return values[offset(a, b)]; }
};

inline CharacteristicWindow characteristic_window(const DenseKernel& K) {
    const auto& g = K.grid;
    const int d = g.dim(), n = g.points_per_dim(), half = n / 2;
    require(d <= 2, "phase-space transforms are limited to d <= 2");
    CharacteristicWindow chi{g, {}};
    chi.values.assign(static_cast<std::size_t>(std::pow(n + 1, 2 * d)), cplx(0.0));
    std::vector<cplx> G(g.size());
    const double cell = g.cell_volume();
    detail::for_each_box(d, -half, half, [&](const std::array<int, 3>& b) {
        for (std::size_t i = 0; i < g.size(); ++i) {
            auto idx = g.unflatten(i);
            for (int k = 0; k < d; ++k) idx[k] += b[k];
            G[i] = K.K(static_cast<Eigen::Index>(g.flatten(idx)), static_cast<Eigen::Index>(i));
        }
        fft_inplace(G, g.dims(), +1);
        detail::for_each_box(d, -half, half, [&](const std::array<int, 3>& a) {
            double ab = 0.0;
            for (int k = 0; k < d; ++k) ab += a[k] * b[k];
            chi.values[chi.offset(a, b)] = cell * G[g.flatten(a)] * std::polar(1.0, pi * ab / n);
        });
    });
    return chi;
}

namespace detail {

// Complex Wigner samples before the real part is taken: the window of the
// characteristic function, half weight on its edges, transformed onto the
// 2n-point phase grid.
inline std::vector<cplx> wigner_samples(const DenseKernel& K, double hbar) {
    const auto& g = K.grid;
    const int d = g.dim(), n = g.points_per_dim(), n2 = 2 * n, half = n / 2;
    PhaseSpaceDistribution shape = wigner_phase_grid(g, hbar);  // budget check
    const CharacteristicWindow chi = characteristic_window(K);
    std::vector<cplx> W(shape.size(), cplx(0.0));
    for_each_box(d, -half, half, [&](const std::array<int, 3>& b) {
        const double wb = edge_weight(b, d, half);
        for_each_box(d, -half, half, [&](const std::array<int, 3>& a) {
            std::array<int, 6> pos{};
            for (int k = 0; k < d; ++k) {
                pos[k] = a[k];
                pos[d + k] = b[k];
            }
            W[wrap_flat(pos, 2 * d, n2)] = wb * edge_weight(a, d, half) * chi.at(a, b);
        });
    });

    fft_forward(W, std::vector<int>(static_cast<std::size_t>(2 * d), n2));

    // Reorder momentum axes from FFT order to ascending storage.
    std::vector<cplx> out(W.size());
    const double scale = std::pow(2.0 * pi * n, -d);
    const std::size_t psize = shape.p_size();
    for (std::size_t ix = 0; ix < shape.x_size(); ++ix)
        for (std::size_t ip = 0; ip < psize; ++ip) {
            auto m = shape.p_indices(ip);
            std::size_t src = ix;
            for (int k = 0; k < d; ++k) src = src * n2 + static_cast<std::size_t>((m[k] - n + n2) % n2);
            out[shape.index(ix, ip)] = W[src] * scale;
        }
    return out;
}

}  // namespace detail

/// Discrete Wigner transform
///   f(x, p) = (2 pi)^{-d} int K(x + y/2, x - y/2) e^{-i y p / hbar} dy
/// on wigner_phase_grid(K.grid, hbar).
///
/// Exact properties of the discretization: f is real, int f dp at every
/// kernel node equals hbar^d K(x, x), int f = hbar^d Tr K, and
/// weyl_quantize inverts it. The samples agree with the continuum transform
/// for states band-limited below half the grid Nyquist frequency and
/// localized within half the box.
inline PhaseSpaceDistribution wigner(const DenseKernel& K, double hbar) {
    require(K.is_hermitian(), "wigner transform needs a Hermitian kernel");
    auto samples = detail::wigner_samples(K, hbar);
    PhaseSpaceDistribution f = wigner_phase_grid(K.grid, hbar);
    double scale = 1e-300, imag = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        f.values[i] = samples[i].real();
        scale = std::max(scale, std::abs(samples[i].real()));
        imag = std::max(imag, std::abs(samples[i].imag()));
    }
    if (!(imag <= 1e-9 * scale)) throw NumericalAbort("wigner transform of a Hermitian kernel is not real");
    return f;
}

/// Weyl quantization Op(f)(x, x') = hbar^{-d} int f((x + x')/2, p) e^{i p (x - x')/hbar} dp,
/// the inverse of `wigner` on the same discretization. `f` must live on
/// wigner_phase_grid of an n-point grid.
inline DenseKernel weyl_quantize(const PhaseSpaceDistribution& f, double hbar) {
    const int d = f.dim();
    require(f.xgrid.points_per_dim() % 4 == 0, "weyl quantization needs a wigner phase grid");
    const int n = f.xgrid.points_per_dim() / 2, n2 = 2 * n, half = n / 2;
    SpectralGrid g(d, n, f.xgrid.length(), f.xgrid.origin());
    require(f.paxis.matches(PhaseAxis::wigner_dual(g, hbar)), "momentum axis is not the wigner dual of the grid");
    DenseKernel::check_budget(g);

    std::vector<cplx> W(f.size());
    const std::size_t psize = f.p_size();
    for (std::size_t ix = 0; ix < f.x_size(); ++ix)
        for (std::size_t ip = 0; ip < psize; ++ip) {
            auto m = f.p_indices(ip);
            std::size_t dst = ix;
            for (int k = 0; k < d; ++k) dst = dst * n2 + static_cast<std::size_t>((m[k] - n + n2) % n2);
            W[dst] = f(ix, ip);
        }
    fft_inverse(W, std::vector<int>(static_cast<std::size_t>(2 * d), n2));
    const double scale = std::pow(2.0 * pi * n, d);

    DenseKernel out = DenseKernel::zeros(g, hbar);
    std::vector<cplx> A(g.size());
    const double norm = 1.0 / std::pow(g.spacing() * n, d);

    detail::for_each_box(d, -half, half - 1, [&](const std::array<int, 3>& b) {
        detail::for_each_box(d, -half, half - 1, [&](const std::array<int, 3>& a) {
            // Sum the window representatives of (a, b); a component at -n/2
            // also appears at +n/2 with sign (-1)^{b_k} (resp. (-1)^{a_k}).
            cplx chi = 0.0;
            const int combos = 1 << (2 * d);
            for (int c = 0; c < combos; ++c) {
                std::array<int, 6> pos{};
                int sign_exp = 0;
                bool valid = true;
                for (int k = 0; k < d && valid; ++k) {
                    const bool shift_a = (c >> k) & 1, shift_b = (c >> (d + k)) & 1;
                    if ((shift_a && a[k] != -half) || (shift_b && b[k] != -half)) valid = false;
                    pos[k] = a[k] + (shift_a ? n : 0);
                    pos[d + k] = b[k] + (shift_b ? n : 0);
                    sign_exp += (shift_a ? b[k] : 0) + (shift_b ? a[k] : 0);
                }
                if (!valid) continue;
                const cplx v = W[detail::wrap_flat(pos, 2 * d, n2)] * scale;
                chi += (sign_exp % 2 == 0) ? v : -v;
            }
            double ab = 0.0;
            for (int k = 0; k < d; ++k) ab += a[k] * b[k];
            A[g.flatten(a)] = chi * std::polar(1.0, -pi * ab / n);
        });
        fft_forward(A, g.dims());
        for (std::size_t i = 0; i < g.size(); ++i) {
            auto idx = g.unflatten(i);
            for (int k = 0; k < d; ++k) idx[k] += b[k];
            out.K(static_cast<Eigen::Index>(g.flatten(idx)), static_cast<Eigen::Index>(i)) = A[i] * norm;
        }
    });
    out.K = 0.5 * (out.K + out.K.adjoint()).eval();
    return out;
}

/// f * G with the unit-mass Gaussian G(z) = (2 pi s)^{-d} e^{-|z|^2 / 2s} on
/// the 2d-dimensional phase torus, s = `variance` per axis. The default
/// s = hbar / 2 is the mollifier for which anti-Wick quantization equals
/// weyl_quantize(mollify(f)).
inline PhaseSpaceDistribution mollify(const PhaseSpaceDistribution& f, double hbar, double variance = -1.0) {
    require(hbar > 0.0, "hbar must be positive");
    const double s = variance < 0.0 ? 0.5 * hbar : variance;
    const int d = f.dim();
    auto dims = f.dims();
    std::vector<cplx> buf(f.values.begin(), f.values.end());
    fft_forward(buf, dims);
    std::vector<double> freq_x(static_cast<std::size_t>(f.xgrid.points_per_dim()));
    std::vector<double> freq_p(static_cast<std::size_t>(f.paxis.count));
    for (int j = 0; j < f.xgrid.points_per_dim(); ++j) freq_x[j] = f.xgrid.wavenumber(j);
    for (int j = 0; j < f.paxis.count; ++j) freq_p[j] = 2.0 * pi * fft_frequency(j, f.paxis.count) / f.paxis.period();
    for (std::size_t i = 0; i < buf.size(); ++i) {
        std::size_t rest = i;
        double z2 = 0.0;
        for (int a = 2 * d - 1; a >= 0; --a) {
            const int j = static_cast<int>(rest % dims[a]);
            rest /= dims[a];
            const double z = a < d ? freq_x[j] : freq_p[j];
            z2 += z * z;
        }
        buf[i] *= std::exp(-0.5 * s * z2);
    }
    fft_inverse(buf, dims);
    PhaseSpaceDistribution out = f;
    for (std::size_t i = 0; i < buf.size(); ++i) out.values[i] = buf[i].real();
    return out;
}

/// Coherent state (pi hbar)^{-d/4} e^{-|y - x0|^2 / 2 hbar} e^{i p0 (y - x0) / hbar}
/// with minimum-image displacements y - x0.
inline Field coherent_state(const SpectralGrid& g, const std::array<double, 3>& x0, const std::array<double, 3>& p0,
                            double hbar) {
    require(hbar > 0.0, "hbar must be positive");
    Field c(g);
    const double pref = std::pow(pi * hbar, -0.25 * g.dim());
    for (std::size_t i = 0; i < g.size(); ++i) {
        auto y = g.position(i);
        double r2 = 0.0, ph = 0.0;
        for (int a = 0; a < g.dim(); ++a) {
            const double dy = g.wrap(y[a] - x0[a]);
            r2 += dy * dy;
            ph += p0[a] * dy / hbar;
        }
        c[i] = pref * std::exp(-r2 / (2.0 * hbar)) * std::polar(1.0, ph);
    }
    return c;
}

/// Anti-Wick quantization hbar^{-d} int f(z) |c_z><c_z| dz as a phase-space
/// quadrature over the nodes of f, producing a kernel on `g`. Built as B B^*
/// so the result is PSD up to rounding.
inline DenseKernel antiwick_quantize(const PhaseSpaceDistribution& f, double hbar, const SpectralGrid& g) {
    require(f.dim() == g.dim(), "dimension mismatch between f and the target grid");
    require(std::abs(f.xgrid.length() - g.length()) <= 1e-12 * g.length() &&
                std::abs(f.xgrid.origin() - g.origin()) <= 1e-12 * std::max(1.0, g.length()),
            "f and the target grid must share the box");
    DenseKernel::check_budget(g);
    const double fmax = std::max(std::abs(f.max()), std::abs(f.min()));
    require(f.min() >= -1e-12 * std::max(fmax, 1e-300), "anti-Wick quantization needs f >= 0");

    const double w = f.cell_volume() * std::pow(hbar, -g.dim());
    std::vector<std::pair<std::size_t, std::size_t>> nodes;
    for (std::size_t ix = 0; ix < f.x_size(); ++ix)
        for (std::size_t ip = 0; ip < f.p_size(); ++ip)
            if (f(ix, ip) > 0.0) nodes.emplace_back(ix, ip);

    const auto n = static_cast<Eigen::Index>(g.size());
    Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(n, n);
    constexpr std::size_t block = 512;
    Eigen::MatrixXcd B;
    for (std::size_t start = 0; start < nodes.size(); start += block) {
        const std::size_t count = std::min(block, nodes.size() - start);
        B.resize(n, static_cast<Eigen::Index>(count));
        for (std::size_t c = 0; c < count; ++c) {
            const auto [ix, ip] = nodes[start + c];
            const Field cs = coherent_state(g, f.xgrid.position(ix), f.momentum(ip), hbar);
            const double amp = std::sqrt(w * f(ix, ip));
            for (Eigen::Index i = 0; i < n; ++i) B(i, static_cast<Eigen::Index>(c)) = amp * cs[static_cast<std::size_t>(i)];
        }
        acc.noalias() += B * B.adjoint();
    }
    return DenseKernel(g, std::move(acc), hbar);
}

/// The second defining route: weyl_quantize(mollify(f)). Needs f on a wigner phase grid.
inline DenseKernel antiwick_via_weyl(const PhaseSpaceDistribution& f, double hbar) {
    return weyl_quantize(mollify(f, hbar), hbar);
}

}  // namespace bflab
