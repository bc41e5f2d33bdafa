#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>
#include <variant>
#include <vector>

#include "bflab/error.hpp"
#include "bflab/fft.hpp"

namespace bflab {

inline constexpr double pi = std::numbers::pi;

/// Periodic d-dimensional grid on [origin, origin + L)^d with n points per axis.
///
/// Storage is row-major with the last axis fastest. Wavenumbers follow the
/// FFT ordering 0, 1, ..., n/2-1, -n/2, ..., -1 (times 2 pi / L) on every axis.
class SpectralGrid {
public:
    SpectralGrid() = default;

    SpectralGrid(int dim, int n, double length, double origin = 0.0)
        : dim_(dim), n_(n), length_(length), origin_(origin) {
        require(dim >= 1 && dim <= 3, "grid dimension must be 1, 2 or 3");
        require(n >= 4, "grid needs at least 4 points per axis");
        require(n % 2 == 0, "grid points per axis must be even");
        require(length > 0.0 && std::isfinite(length), "box length must be positive");
        size_ = 1;
        for (int a = 0; a < dim; ++a) size_ *= static_cast<std::size_t>(n);
    }

    int dim() const { return dim_; }
    int points_per_dim() const { return n_; }
    double length() const { return length_; }
    double origin() const { return origin_; }
    std::size_t size() const { return size_; }
    double spacing() const { return length_ / n_; }
    double cell_volume() const { return std::pow(spacing(), dim_); }
    double volume() const { return std::pow(length_, dim_); }
    double dk() const { return 2.0 * pi / length_; }

    std::vector<int> dims() const { return std::vector<int>(static_cast<std::size_t>(dim_), n_); }

    /// Wavenumber of FFT index j on one axis.
    double wavenumber(int j) const { return dk() * fft_frequency(j, n_); }

    /// Coordinate of index j on one axis.
    double coordinate(int j) const { return origin_ + j * spacing(); }

    /// Per-axis indices of a flat index.
    std::array<int, 3> unflatten(std::size_t flat) const {
        std::array<int, 3> idx{0, 0, 0};
        for (int a = dim_ - 1; a >= 0; --a) {
            idx[a] = static_cast<int>(flat % n_);
            flat /= n_;
        }
        return idx;
    }

    std::size_t flatten(const std::array<int, 3>& idx) const {
        std::size_t flat = 0;
        for (int a = 0; a < dim_; ++a) flat = flat * n_ + static_cast<std::size_t>(((idx[a] % n_) + n_) % n_);
        return flat;
    }

    std::array<double, 3> position(std::size_t flat) const {
        auto idx = unflatten(flat);
        std::array<double, 3> x{0, 0, 0};
        for (int a = 0; a < dim_; ++a) x[a] = coordinate(idx[a]);
        return x;
    }

    std::array<double, 3> wavevector(std::size_t flat) const {
        auto idx = unflatten(flat);
        std::array<double, 3> k{0, 0, 0};
        for (int a = 0; a < dim_; ++a) k[a] = wavenumber(idx[a]);
        return k;
    }

    double k_squared(std::size_t flat) const {
        auto k = wavevector(flat);
        return k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
    }

    /// Flat index of the mirrored point -x (index-wise j -> -j mod n).
    std::size_t negate(std::size_t flat) const {
        auto idx = unflatten(flat);
        for (int a = 0; a < dim_; ++a) idx[a] = -idx[a];
        return flatten(idx);
    }

    /// Minimum-image separation on one axis.
    double wrap(double dx) const {
        dx = std::fmod(dx, length_);
        if (dx >= 0.5 * length_) dx -= length_;
        if (dx < -0.5 * length_) dx += length_;
        return dx;
    }

    bool operator==(const SpectralGrid& o) const {
        return dim_ == o.dim_ && n_ == o.n_ && length_ == o.length_ && origin_ == o.origin_;
    }

private:
    int dim_ = 1;
    int n_ = 4;
    double length_ = 1.0;
    double origin_ = 0.0;
    std::size_t size_ = 4;
};

inline SpectralGrid make_grid(int dim, int n, double length, double origin = 0.0) {
    return SpectralGrid(dim, n, length, origin);
}

/// Samples of a function on a SpectralGrid.
template <class T>
struct GridFunction {
    SpectralGrid grid;
    std::vector<T> values;

    GridFunction() = default;
    explicit GridFunction(const SpectralGrid& g) : grid(g), values(g.size(), T{}) {}
    GridFunction(const SpectralGrid& g, std::vector<T> v) : grid(g), values(std::move(v)) {
        require(values.size() == grid.size(), "field length does not match grid");
    }

    T& operator[](std::size_t i) { return values[i]; }
    const T& operator[](std::size_t i) const { return values[i]; }
    std::size_t size() const { return values.size(); }
};

using Field = GridFunction<cplx>;
using RealField = GridFunction<double>;

inline void require_same_grid(const SpectralGrid& a, const SpectralGrid& b) {
    require(a == b, "grid mismatch");
}

template <class F>
Field sample_field(const SpectralGrid& g, F&& fn) {
    Field f(g);
    for (std::size_t i = 0; i < g.size(); ++i) f[i] = fn(g.position(i));
    return f;
}

inline double integrate(const RealField& f) {
    double s = 0.0;
    for (double v : f.values) s += v;
    return s * f.grid.cell_volume();
}

inline cplx inner(const Field& a, const Field& b) {
    require_same_grid(a.grid, b.grid);
    cplx s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::conj(a[i]) * b[i];
    return s * a.grid.cell_volume();
}

inline double l2_norm(const Field& f) {
    double s = 0.0;
    for (const auto& v : f.values) s += std::norm(v);
    return std::sqrt(s * f.grid.cell_volume());
}

inline double l2_distance(const Field& a, const Field& b) {
    require_same_grid(a.grid, b.grid);
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::norm(a[i] - b[i]);
    return std::sqrt(s * a.grid.cell_volume());
}

inline Field normalized(Field f) {
    const double nrm = l2_norm(f);
    require(nrm > 0.0, "cannot normalize a zero field");
    for (auto& v : f.values) v /= nrm;
    return f;
}

inline RealField modulus_squared(const Field& f) {
    RealField r(f.grid);
    for (std::size_t i = 0; i < f.size(); ++i) r[i] = std::norm(f[i]);
    return r;
}

inline Field to_complex(const RealField& f) {
    Field c(f.grid);
    for (std::size_t i = 0; i < f.size(); ++i) c[i] = f[i];
    return c;
}

/// Mass of |psi|^2 in the outermost max(1, n/16) cells of every axis.
/// Large values flag a box too small for the periodic truncation.
inline double boundary_mass(const Field& f) {
    const auto& g = f.grid;
    const int edge = std::max(1, g.points_per_dim() / 16);
    double s = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        auto idx = g.unflatten(i);
        bool near = false;
        for (int a = 0; a < g.dim(); ++a)
            near = near || idx[a] < edge || idx[a] >= g.points_per_dim() - edge;
        if (near) s += std::norm(f[i]);
    }
    return s * g.cell_volume();
}

/// Forward transform with the continuum normalization f_hat(k) = sum f(x) e^{-ikx} h^d.
inline std::vector<cplx> spectrum(const Field& f) {
    std::vector<cplx> out = f.values;
    fft_forward(out, f.grid.dims());
    const double cell = f.grid.cell_volume();
    for (auto& v : out) v *= cell;
    return out;
}

inline Field from_spectrum(const SpectralGrid& g, std::vector<cplx> spec) {
    fft_inverse(spec, g.dims());
    const double cell = g.cell_volume();
    for (auto& v : spec) v /= cell;
    return Field(g, std::move(spec));
}

// ---------------------------------------------------------------------------
// Interaction potentials

struct GaussianPotential {
    double amplitude = 1.0;
    double width = 1.0;
};
struct CosinePotential {
    double amplitude = 1.0;
    int mode = 1;
};
struct TabulatedPotential {
    std::vector<double> values;
};
struct ZeroPotential {};

/// Real, even two-body potential V(x - y).
///
/// gaussian:  A exp(-|x|^2 / (2 w^2)) with |x| the minimum-image distance;
/// cosine:    A sum_a cos(2 pi m x_a / L);
/// tabulated: raw samples on the grid, index 0 at x = 0.
struct PotentialSpec {
    std::variant<ZeroPotential, GaussianPotential, CosinePotential, TabulatedPotential> kind;

    static PotentialSpec zero() { return {ZeroPotential{}}; }
    static PotentialSpec gaussian(double amplitude, double width) {
        require(width > 0.0, "gaussian potential width must be positive");
        return {GaussianPotential{amplitude, width}};
    }
    static PotentialSpec cosine(double amplitude, int mode) { return {CosinePotential{amplitude, mode}}; }
    static PotentialSpec tabulated(std::vector<double> values) { return {TabulatedPotential{std::move(values)}}; }

    bool is_zero() const { return std::holds_alternative<ZeroPotential>(kind); }

    std::string name() const {
        return std::visit(
            [](const auto& k) -> std::string {
                using K = std::decay_t<decltype(k)>;
                if constexpr (std::is_same_v<K, ZeroPotential>) return "zero";
                else if constexpr (std::is_same_v<K, GaussianPotential>) return "gaussian";
                else if constexpr (std::is_same_v<K, CosinePotential>) return "cosine";
                else return "tabulated";
            },
            kind);
    }

    /// V at a displacement given as per-axis minimum-image components.
    double at(const std::array<double, 3>& dx, const SpectralGrid& g) const {
        return std::visit(
            [&](const auto& k) -> double {
                using K = std::decay_t<decltype(k)>;
                if constexpr (std::is_same_v<K, ZeroPotential>) {
                    return 0.0;
                } else if constexpr (std::is_same_v<K, GaussianPotential>) {
                    double r2 = 0.0;
                    for (int a = 0; a < g.dim(); ++a) r2 += dx[a] * dx[a];
                    return k.amplitude * std::exp(-r2 / (2.0 * k.width * k.width));
                } else if constexpr (std::is_same_v<K, CosinePotential>) {
                    double s = 0.0;
                    for (int a = 0; a < g.dim(); ++a) s += std::cos(2.0 * pi * k.mode * dx[a] / g.length());
                    return k.amplitude * s;
                } else {
                    throw InvalidArgument("tabulated potential can only be sampled on its grid");
                }
            },
            kind);
    }

    /// Samples V on the grid at displacements x_j - origin (index 0 is x = 0).
    RealField sample(const SpectralGrid& g) const {
        RealField v(g);
        if (const auto* tab = std::get_if<TabulatedPotential>(&kind)) {
            require(tab->values.size() == g.size(), "tabulated potential length does not match grid");
            v.values = tab->values;
        } else {
            for (std::size_t i = 0; i < g.size(); ++i) {
                auto idx = g.unflatten(i);
                std::array<double, 3> dx{0, 0, 0};
                for (int a = 0; a < g.dim(); ++a) dx[a] = g.wrap(idx[a] * g.spacing());
                v[i] = at(dx, g);
            }
        }
        double scale = 1.0;
        for (double x : v.values) {
            require(std::isfinite(x), "potential samples must be finite");
            scale = std::max(scale, std::abs(x));
        }
        for (std::size_t i = 0; i < g.size(); ++i)
            require(std::abs(v[i] - v[g.negate(i)]) <= 1e-12 * scale, "potential must be even: V(-x) = V(x)");
        return v;
    }
};

/// Grid diagnostic for sum_xi <xi>^2 |V_hat(xi)| with the continuum measure d xi / (2 pi)^d.
inline double potential_regularity(const PotentialSpec& V, const SpectralGrid& g) {
    auto vhat = spectrum(to_complex(V.sample(g)));
    double s = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) s += (1.0 + g.k_squared(i)) * std::abs(vhat[i]);
    return s / g.volume();
}

/// Precomputed spectrum of V for repeated periodic convolutions on one grid.
class ConvolutionKernel {
public:
    ConvolutionKernel() = default;
    ConvolutionKernel(const PotentialSpec& V, const SpectralGrid& g) : grid_(g), zero_(V.is_zero()) {
        vhat_ = spectrum(to_complex(V.sample(g)));
    }

    const SpectralGrid& grid() const { return grid_; }
    bool is_zero() const { return zero_; }

    /// (V * rho)(x) = sum_y V(x - y) rho(y) h^d.
    RealField convolve(const RealField& rho) const {
        require_same_grid(rho.grid, grid_);
        if (zero_) return RealField(grid_);
        auto spec = spectrum(to_complex(rho));
        for (std::size_t i = 0; i < spec.size(); ++i) spec[i] *= vhat_[i];
        return real_part(from_spectrum(grid_, std::move(spec)));
    }

    /// Components of (grad V * rho), by multiplication with i k. The Nyquist
    /// mode carries no derivative so the result stays real.
    std::vector<RealField> gradient(const RealField& rho) const {
        require_same_grid(rho.grid, grid_);
        std::vector<RealField> out;
        if (zero_) {
            for (int a = 0; a < grid_.dim(); ++a) out.emplace_back(grid_);
            return out;
        }
        auto base = spectrum(to_complex(rho));
        for (std::size_t i = 0; i < base.size(); ++i) base[i] *= vhat_[i];
        const int n = grid_.points_per_dim();
        for (int a = 0; a < grid_.dim(); ++a) {
            auto spec = base;
            for (std::size_t i = 0; i < spec.size(); ++i) {
                const int j = grid_.unflatten(i)[a];
                const double k = (j == n / 2) ? 0.0 : grid_.wavenumber(j);
                spec[i] *= cplx(0.0, k);
            }
            out.push_back(real_part(from_spectrum(grid_, std::move(spec))));
        }
        return out;
    }

private:
    static RealField real_part(const Field& f) {
        double scale = 1e-300, imag = 0.0;
        for (const auto& v : f.values) {
            scale = std::max(scale, std::abs(v.real()));
            imag = std::max(imag, std::abs(v.imag()));
        }
        if (!(imag <= 1e-10 * std::max(1.0, scale)))
            throw NumericalAbort("convolution of real inputs produced a complex result");
        RealField r(f.grid);
        for (std::size_t i = 0; i < f.size(); ++i) r[i] = f[i].real();
        return r;
    }

    SpectralGrid grid_;
    std::vector<cplx> vhat_;
    bool zero_ = true;
};

inline RealField convolve(const PotentialSpec& V, const RealField& rho) {
    return ConvolutionKernel(V, rho.grid).convolve(rho);
}

/// Free propagator exp(-i tau hbar |k|^2 / (2 m)) diagonal in Fourier space,
/// i.e. the flow of i hbar d/dt = (hbar^2 / 2m)(-Laplacian) over time tau.
class KineticPropagator {
public:
    KineticPropagator() = default;
    KineticPropagator(const SpectralGrid& g, double tau, double mass, double hbar) : grid_(g) {
        require(mass > 0.0, "mass must be positive");
        require(hbar > 0.0, "hbar must be positive");
        phase_.resize(g.size());
        const double c = tau * hbar / (2.0 * mass);
        for (std::size_t i = 0; i < g.size(); ++i) phase_[i] = std::polar(1.0, -c * g.k_squared(i));
    }

    void apply_inplace(Field& psi) const {
        require_same_grid(psi.grid, grid_);
        auto dims = grid_.dims();
        fft_forward(psi.values, dims);
        for (std::size_t i = 0; i < phase_.size(); ++i) psi.values[i] *= phase_[i];
        fft_inverse(psi.values, dims);
    }

    Field apply(Field psi) const {
        apply_inplace(psi);
        return psi;
    }

private:
    SpectralGrid grid_;
    std::vector<cplx> phase_;
};

inline Field kinetic_phase(const Field& psi, double tau, double mass, double hbar) {
    return KineticPropagator(psi.grid, tau, mass, hbar).apply(psi);
}

/// ||grad psi||^2 evaluated spectrally: sum_k |k|^2 |psi_hat(k)|^2 / L^d.
inline double gradient_norm_squared(const Field& psi) {
    auto spec = spectrum(psi);
    double s = 0.0;
    for (std::size_t i = 0; i < spec.size(); ++i) s += psi.grid.k_squared(i) * std::norm(spec[i]);
    return s / psi.grid.volume();
}

}  // namespace bflab
