#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "bflab/density.hpp"
#include "bflab/hartree.hpp"
#include "bflab/phasespace.hpp"

namespace bflab {

/// Classical fermion density f(x, p) coupled to the boson field phi:
///   (d_t + p . grad_x + F_B . grad_p) f = 0,   F_B = -grad V * |phi|^2
///   i d_t phi = -(1/2) Lap phi + (V * rho_F) phi,  rho_F = int f dp.
struct VHState {
    PhaseSpaceDistribution f;
    BosonField phi;
    double t = 0.0;

    VHState() = default;
    VHState(PhaseSpaceDistribution f_, BosonField phi_, double time = 0.0)
        : f(std::move(f_)), phi(std::move(phi_)), t(time) {
        require_same_grid(f.xgrid, phi.grid());
    }
};

using ForceField = std::vector<RealField>;  ///< one component per axis

/// F_B = -grad(V * |phi|^2), spectrally.
inline ForceField boson_force(const BosonField& phi, const PotentialSpec& V) {
    ConvolutionKernel kernel(V, phi.grid());
    auto grad = kernel.gradient(boson_density(phi));
    for (auto& g : grad)
        for (auto& v : g.values) v = -v;
    return grad;
}

/// rho_F(x) = int f(x, p) dp. On a cell-centred axis with f = 0 beyond the
/// ends, the midpoint sum equals the trapezoid rule.
inline RealField fermion_position_density(const PhaseSpaceDistribution& f) {
    RealField rho(f.xgrid);
    const double dp = std::pow(f.paxis.spacing, f.dim());
    for (std::size_t ix = 0; ix < f.x_size(); ++ix) {
        double s = 0.0;
        for (std::size_t ip = 0; ip < f.p_size(); ++ip) s += f(ix, ip);
        rho[ix] = s * dp;
    }
    return rho;
}

/// V_f = V * rho_F.
inline RealField classical_fermion_potential(const PhaseSpaceDistribution& f, const PotentialSpec& V) {
    return convolve(V, fermion_position_density(f));
}

/// Periodic tensor-product cubic (four-point Lagrange) interpolation of a
/// grid field at an arbitrary point.
inline double interpolate_periodic(const RealField& F, const std::array<double, 3>& x) {
    const auto& g = F.grid;
    const int d = g.dim(), n = g.points_per_dim();
    std::array<int, 3> base{0, 0, 0};
    std::array<std::array<double, 4>, 3> w{};
    for (int a = 0; a < d; ++a) {
        const double u = (x[a] - g.origin()) / g.spacing();
        const double fl = std::floor(u);
        const double t = u - fl;
        base[a] = static_cast<int>(fl) - 1;
        w[a] = {-t * (t - 1) * (t - 2) / 6, (t + 1) * (t - 1) * (t - 2) / 2, -(t + 1) * t * (t - 2) / 2,
                (t + 1) * t * (t - 1) / 6};
    }
    double s = 0.0;
    const int span1 = d >= 2 ? 4 : 1, span2 = d >= 3 ? 4 : 1;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < span1; ++j)
            for (int k = 0; k < span2; ++k) {
                std::array<int, 3> idx{base[0] + i, base[1] + j, base[2] + k};
                for (int a = 0; a < d; ++a) idx[a] = ((idx[a] % n) + n) % n;
                double wt = w[0][i];
                if (d >= 2) wt *= w[1][j];
                if (d >= 3) wt *= w[2][k];
                s += wt * F[g.flatten(idx)];
            }
    return s;
}

struct PhasePoint {
    std::array<double, 3> x{0, 0, 0};
    std::array<double, 3> p{0, 0, 0};
};

using ForceFunction = std::function<std::array<double, 3>(const std::array<double, 3>&)>;

/// Pointwise force from a sampled field by periodic cubic interpolation.
inline ForceFunction interpolated_force(ForceField F) {
    return [F = std::move(F)](const std::array<double, 3>& x) {
        std::array<double, 3> out{0, 0, 0};
        for (std::size_t a = 0; a < F.size(); ++a) out[a] = interpolate_periodic(F[a], x);
        return out;
    };
}

/// Harmonic test force -omega^2 (x - center), used instead of the boson force
/// to validate transport against closed-form rotations.
inline ForceFunction harmonic_force(int dim, double omega = 1.0, std::array<double, 3> center = {0, 0, 0}) {
    return [=](const std::array<double, 3>& x) {
        std::array<double, 3> out{0, 0, 0};
        for (int a = 0; a < dim; ++a) out[a] = -omega * omega * (x[a] - center[a]);
        return out;
    };
}

/// One leapfrog step of x' = p, p' = F(x): drift dt/2, kick dt, drift dt/2.
/// Symplectic, hence volume preserving, and exact for constant forces.
inline PhasePoint characteristics_step(PhasePoint z, const ForceFunction& F, double dt, int dim) {
    for (int a = 0; a < dim; ++a) z.x[a] += 0.5 * dt * z.p[a];
    const auto f = F(z.x);
    for (int a = 0; a < dim; ++a) z.p[a] += dt * f[a];
    for (int a = 0; a < dim; ++a) z.x[a] += 0.5 * dt * z.p[a];
    return z;
}

/// Same step with positions wrapped into the periodic box of `g`.
inline PhasePoint characteristics_step(PhasePoint z, const ForceFunction& F, double dt, const SpectralGrid& g) {
    z = characteristics_step(z, F, dt, g.dim());
    for (int a = 0; a < g.dim(); ++a) {
        const double u = std::fmod(z.x[a] - g.origin(), g.length());
        z.x[a] = g.origin() + (u < 0.0 ? u + g.length() : u);
    }
    return z;
}

namespace detail {

// Positive flux conservative (PFC) reconstruction: mass in the right fraction
// a of cell j, limited so the reconstruction stays inside [lo, hi].
inline double pfc_partial(double fm, double f0, double fp, double a, double lo, double hi) {
    if (a <= 0.0) return 0.0;
    const double u = f0 - lo, top = hi - lo;
    double ep = 1.0, em = 1.0;
    const double dp = fp - f0, dm = f0 - fm;
    if (dp > 0.0) ep = std::min(1.0, 2.0 * u / dp);
    else if (dp < 0.0) ep = std::min(1.0, -2.0 * (top - u) / dp);
    if (dm > 0.0) em = std::min(1.0, 2.0 * (top - u) / dm);
    else if (dm < 0.0) em = std::min(1.0, -2.0 * u / dm);
    return a * (f0 + ep / 6.0 * (1.0 - a) * (2.0 - a) * dp + em / 6.0 * (1.0 - a) * (1.0 + a) * dm);
}

// Shifts a line of cell values by `shift` cells (positive moves mass toward
// higher indices), keeping values inside [lo, hi]. Periodic lines conserve
// mass exactly; open lines are zero outside and the return value is the mass
// (in cell units) that left.
inline double pfc_shift(std::vector<double>& line, double shift, bool periodic, double lo, double hi) {
    const int N = static_cast<int>(line.size());
    if (shift == 0.0 || N == 0) return 0.0;
    if (shift < 0.0) {
        std::reverse(line.begin(), line.end());
        const double out = pfc_shift(line, -shift, periodic, lo, hi);
        std::reverse(line.begin(), line.end());
        return out;
    }
    long k = static_cast<long>(std::floor(shift));
    const double a = shift - static_cast<double>(k);
    if (periodic) k %= N;
    if (!periodic && k > N) {
        double total = 0.0;
        for (double v : line) total += v;
        std::fill(line.begin(), line.end(), 0.0);
        return total;
    }
    auto val = [&](long j) -> double {
        if (periodic) return line[static_cast<std::size_t>(((j % N) + N) % N)];
        return (j < 0 || j >= N) ? 0.0 : line[static_cast<std::size_t>(j)];
    };
    // flux[i + 1] is the mass crossing the right edge of cell i, i in [-1, N).
    std::vector<double> flux(static_cast<std::size_t>(N) + 1);
    for (long i = -1; i < N; ++i) {
        double s = 0.0;
        for (long q = 0; q < k; ++q) s += val(i - q);
        const long j = i - k;
        s += pfc_partial(val(j - 1), val(j), val(j + 1), a, lo, hi);
        flux[static_cast<std::size_t>(i + 1)] = s;
    }
    if (periodic) flux[0] = flux[static_cast<std::size_t>(N)];
    for (int i = 0; i < N; ++i) line[i] += flux[i] - flux[i + 1];
    return periodic ? 0.0 : flux[static_cast<std::size_t>(N)] - flux[0];
}

// Applies `fn(line, index_of_other_coords)` to every line along tensor axis
// `axis` of a row-major tensor with shape `dims`.
template <class Fn>
void for_each_line(std::vector<double>& data, const std::vector<int>& dims, int axis, Fn&& fn) {
    std::size_t stride = 1;
    for (std::size_t a = static_cast<std::size_t>(axis) + 1; a < dims.size(); ++a) stride *= dims[a];
    const std::size_t len = static_cast<std::size_t>(dims[axis]);
    const std::size_t block = stride * len;
    std::vector<double> line(len);
    for (std::size_t outer = 0; outer < data.size(); outer += block)
        for (std::size_t inner = 0; inner < stride; ++inner) {
            const std::size_t start = outer + inner;
            for (std::size_t k = 0; k < len; ++k) line[k] = data[start + k * stride];
            fn(line, start);
            for (std::size_t k = 0; k < len; ++k) data[start + k * stride] = line[k];
        }
}

// Limiter bounds: the analytic range [0, 1] widened to contain the data.
inline std::pair<double, double> pfc_bounds(const PhaseSpaceDistribution& f) {
    return {std::min(0.0, f.min()), std::max(1.0, f.max())};
}

}  // namespace detail

/// Free streaming x -> x + p tau on every x axis (periodic).
inline void advect_positions(PhaseSpaceDistribution& f, double tau) {
    const auto dims = f.dims();
    const int d = f.dim();
    const auto [lo, hi] = detail::pfc_bounds(f);
    for (int a = 0; a < d; ++a)
        detail::for_each_line(f.values, dims, a, [&](std::vector<double>& line, std::size_t start) {
            const auto p = f.momentum(start % f.p_size());
            detail::pfc_shift(line, p[a] * tau / f.xgrid.spacing(), true, lo, hi);
        });
}

/// Kick p -> p + F(x) tau with F sampled at the position nodes. Returns the
/// mass pushed beyond the momentum window (lost, and reported).
inline double advect_momenta(PhaseSpaceDistribution& f, const std::vector<std::array<double, 3>>& force, double tau) {
    const auto dims = f.dims();
    const int d = f.dim();
    double escaped = 0.0;
    const auto [lo, hi] = detail::pfc_bounds(f);
    for (int a = 0; a < d; ++a)
        detail::for_each_line(f.values, dims, d + a, [&](std::vector<double>& line, std::size_t start) {
            const std::size_t ix = start / f.p_size();
            escaped += detail::pfc_shift(line, force[ix][a] * tau / f.paxis.spacing, false, lo, hi);
        });
    return escaped * f.cell_volume();
}

struct VlasovOptions {
    /// Replaces the boson force when set (phi is still evolved).
    ForceFunction external_force;
    double interp_tol = 1e-3;
    bool clip = false;           ///< clip f into [0, 1] after each step
    double cfl_ceiling = 0.0;    ///< advisory bound on p_max dt / spacing; 0 disables
};

struct VlasovStepReport {
    double escaped_mass = 0.0;
    double range_violation = 0.0;  ///< max(0, -min f, max f - 1)
    bool cfl_exceeded = false;
};

/// Semi-Lagrangian Vlasov-Hartree integrator. One step of size dt:
///   1. force F at the position nodes from phi(t) (or the external hook);
///   2. f <- f o Phi^{-1} with Phi the leapfrog map under the frozen F,
///      realized exactly as drift/kick/drift shifts of f;
///   3. phi <- Strang step with V * rho_F from the midpoint density (rho_F is
///      unchanged by the kick, so it is the density after the first drift).
class VlasovHartree {
public:
    VlasovHartree(const SpectralGrid& grid, const PotentialSpec& V, VlasovOptions opt = {})
        : grid_(grid), kernel_(V, grid), opt_(std::move(opt)) {}

    const VlasovOptions& options() const { return opt_; }

    std::vector<std::array<double, 3>> force_at_nodes(const VHState& s) const {
        std::vector<std::array<double, 3>> F(grid_.size(), {0, 0, 0});
        if (opt_.external_force) {
            for (std::size_t i = 0; i < grid_.size(); ++i) F[i] = opt_.external_force(grid_.position(i));
            return F;
        }
        if (kernel_.is_zero()) return F;
        auto grad = kernel_.gradient(boson_density(s.phi));
        for (int a = 0; a < grid_.dim(); ++a)
            for (std::size_t i = 0; i < grid_.size(); ++i) F[i][a] = -grad[static_cast<std::size_t>(a)][i];
        return F;
    }

    VHState step(const VHState& s, double dt, VlasovStepReport* report = nullptr) const {
        require(dt >= 0.0, "time step must be nonnegative");
        VlasovStepReport rep;
        if (dt == 0.0) {
            if (report) *report = rep;
            return s;
        }
        require_same_grid(s.f.xgrid, grid_);
        VHState out = s;
        const auto F = force_at_nodes(s);
        if (opt_.cfl_ceiling > 0.0) {
            const double pmax = std::max(std::abs(s.f.paxis.at(0)), std::abs(s.f.paxis.at(s.f.paxis.count - 1)));
            rep.cfl_exceeded = pmax * dt / grid_.spacing() > opt_.cfl_ceiling;
        }

        advect_positions(out.f, 0.5 * dt);
        const RealField rho_mid = fermion_position_density(out.f);
        rep.escaped_mass = advect_momenta(out.f, F, dt);
        advect_positions(out.f, 0.5 * dt);

        Field& phi = out.phi.phi_mut();
        KineticPropagator half(grid_, 0.5 * dt, 1.0, 1.0);
        half.apply_inplace(phi);
        if (!kernel_.is_zero()) {
            const RealField U = kernel_.convolve(rho_mid);
            for (std::size_t i = 0; i < grid_.size(); ++i) phi[i] *= std::polar(1.0, -dt * U[i]);
        }
        half.apply_inplace(phi);

        double lo = 0.0, hi = 0.0;
        for (double& v : out.f.values) {
            if (!std::isfinite(v)) throw NumericalAbort("non-finite phase-space density at t = " + std::to_string(s.t));
            lo = std::min(lo, v);
            hi = std::max(hi, v);
            if (opt_.clip) v = std::clamp(v, 0.0, 1.0);
        }
        if (!all_finite(phi)) throw NumericalAbort("non-finite boson field in Vlasov step at t = " + std::to_string(s.t));
        rep.range_violation = std::max({0.0, -lo, hi - 1.0});
        out.t = s.t + dt;
        if (report) *report = rep;
        return out;
    }

    /// Second moment int (|x - c|^2 + |p|^2) f with x by minimum image about
    /// the box centre c.
    static double second_moment(const PhaseSpaceDistribution& f) {
        const auto& g = f.xgrid;
        const double c = g.origin() + 0.5 * g.length();
        double s = 0.0;
        for (std::size_t ix = 0; ix < f.x_size(); ++ix) {
            const auto x = g.position(ix);
            double x2 = 0.0;
            for (int a = 0; a < f.dim(); ++a) {
                const double dx = g.wrap(x[a] - c);
                x2 += dx * dx;
            }
            for (std::size_t ip = 0; ip < f.p_size(); ++ip) {
                const auto p = f.momentum(ip);
                double p2 = 0.0;
                for (int a = 0; a < f.dim(); ++a) p2 += p[a] * p[a];
                s += (x2 + p2) * f(ix, ip);
            }
        }
        return s * f.cell_volume();
    }

    double force_sup(const VHState& s) const {
        double m = 0.0;
        for (const auto& v : force_at_nodes(s)) m = std::max(m, std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]));
        return m;
    }

    /// Integrates to T = k dt. Series per sample: mass, phi_norm, f_min,
    /// f_max, second_moment, force_sup, escaped_mass (cumulative),
    /// range_violation (running max).
    Trajectory<VHState> evolve(const VHState& s0, double T, double dt, long sample_every = 0) const {
        const long steps = step_count(T, dt);
        if (sample_every <= 0) sample_every = std::max(1L, steps);
        Trajectory<VHState> traj;
        double escaped = 0.0, violation = 0.0;
        auto record = [&](const VHState& s) {
            traj.states.push_back(s);
            traj.times.push_back(s.t);
            traj.series["mass"].push_back(s.f.mass());
            traj.series["phi_norm"].push_back(l2_norm(s.phi.phi()));
            traj.series["f_min"].push_back(s.f.min());
            traj.series["f_max"].push_back(s.f.max());
            traj.series["second_moment"].push_back(second_moment(s.f));
            traj.series["force_sup"].push_back(force_sup(s));
            traj.series["escaped_mass"].push_back(escaped);
            traj.series["range_violation"].push_back(violation);
        };
        VHState s = s0;
        violation = std::max({0.0, -s.f.min(), s.f.max() - 1.0});
        record(s);
        for (long k = 1; k <= steps; ++k) {
            VlasovStepReport rep;
            s = step(s, dt, &rep);
            escaped += rep.escaped_mass;
            violation = std::max(violation, rep.range_violation);
            if (k % sample_every == 0 || k == steps) record(s);
        }
        return traj;
    }

private:
    SpectralGrid grid_;
    ConvolutionKernel kernel_;
    VlasovOptions opt_;
};

inline VHState vh_step(const VHState& s, const PotentialSpec& V, double dt, const VlasovOptions& opt = {}) {
    return VlasovHartree(s.f.xgrid, V, opt).step(s, dt);
}

struct MomentGrowthReport {
    std::vector<double> times, moments;
    std::vector<double> kappa;           ///< sqrt(m(t) / m(0)), the flow's radial growth factor
    std::vector<double> gronwall_bound;  ///< (m0 + F^2/2) e^{2t} - F^2/2
    double fitted_rate = 0.0;            ///< least-squares slope of log m(t)
    bool passed = false;
};

/// Second-moment growth check. For x' = p, p' = F with |F| <= F_sup,
/// d/dt m <= 2 m + F_sup^2, so m(t) <= (m0 + F_sup^2/2) e^{2t} - F_sup^2/2.
/// Passes when every sample respects that bound (relative slack 1e-6).
inline MomentGrowthReport moment_growth_check(const Trajectory<VHState>& traj) {
    require(traj.states.size() >= 2, "moment check needs at least two samples");
    MomentGrowthReport r;
    r.times = traj.times;
    const auto& m = traj.series.at("second_moment");
    const auto& fs = traj.series.at("force_sup");
    r.moments = m;
    const double F = *std::max_element(fs.begin(), fs.end());
    const double t0 = r.times.front();
    r.passed = true;
    double st = 0, sl = 0, stt = 0, stl = 0;
    for (std::size_t k = 0; k < m.size(); ++k) {
        const double t = r.times[k] - t0;
        r.kappa.push_back(m[0] > 0 ? std::sqrt(m[k] / m[0]) : 0.0);
        const double bound = (m[0] + 0.5 * F * F) * std::exp(2.0 * t) - 0.5 * F * F;
        r.gronwall_bound.push_back(bound);
        if (!(m[k] <= bound * (1.0 + 1e-6) + 1e-12)) r.passed = false;
        const double l = std::log(std::max(m[k], 1e-300));
        st += t;
        sl += l;
        stt += t * t;
        stl += t * l;
    }
    const double n = static_cast<double>(m.size());
    const double den = n * stt - st * st;
    r.fitted_rate = den > 0 ? (n * stl - st * sl) / den : 0.0;
    return r;
}

}  // namespace bflab
