#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "bflab/density.hpp"
#include "bflab/regime.hpp"

namespace bflab {

/// Coupled fermion/boson mean-field state at time t.
struct HHState {
    DensityMatrix omega;
    BosonField phi;
    ScalingRegime regime;
    double t = 0.0;

    HHState() = default;
    HHState(DensityMatrix w, BosonField p, ScalingRegime r, double time = 0.0)
        : omega(std::move(w)), phi(std::move(p)), regime(r), t(time) {
        require_same_grid(omega.grid(), phi.grid());
        regime.validate();
    }

    const SpectralGrid& grid() const { return phi.grid(); }
};

inline bool all_finite(const Field& f) {
    for (const auto& v : f.values)
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
    return true;
}

/// Number of steps k with k dt = T; rejects T that is not a multiple of dt.
inline long step_count(double T, double dt) {
    require(T >= 0.0 && dt >= 0.0, "time span and step must be nonnegative");
    if (T == 0.0) return 0;
    require(dt > 0.0, "positive time span needs a positive step");
    const long k = std::lround(T / dt);
    require(std::abs(k * dt - T) <= 1e-9 * std::max(1.0, T), "T must be an integer multiple of dt");
    return k;
}

/// Sampled trajectory plus named scalar monitor series (one entry per sample).
template <class State>
struct Trajectory {
    std::vector<State> states;
    std::vector<double> times;
    std::map<std::string, std::vector<double>> series;
};

/// Strang split-step integrator for
///   i hbar d/dt omega = [-(hbar^2/2m_F) Lap + lambda N (V * rho_B), omega]
///   i hbar d/dt phi   = -(hbar^2/2m_B) Lap phi + lambda M (V * rho_F) phi.
///
/// One step: half kinetic flow on every orbital and on phi, mean-field
/// potentials from the densities at that point, full potential phase, half
/// kinetic flow. The potential substep leaves both densities unchanged, so
/// the frozen-density phase is the exact potential flow.
class HartreeHartree {
public:
    HartreeHartree(const SpectralGrid& grid, const PotentialSpec& V) : grid_(grid), kernel_(V, grid) {}

    const ConvolutionKernel& kernel() const { return kernel_; }

    HHState step(const HHState& s, double dt) const {
        require(dt >= 0.0, "time step must be nonnegative");
        if (dt == 0.0) return s;
        const auto& r = s.regime;
        HHState out = s;
        KineticPropagator half_f(grid_, 0.5 * dt, r.mass_fermion, r.hbar);
        KineticPropagator half_b(grid_, 0.5 * dt, r.mass_boson, r.hbar);
        auto& orbitals = out.omega.orbitals_mut();
        Field& phi = out.phi.phi_mut();

        for (auto& o : orbitals) half_f.apply_inplace(o);
        half_b.apply_inplace(phi);

        if (!kernel_.is_zero() && r.lambda != 0.0) {
            const RealField uf = kernel_.convolve(boson_density(out.phi));
            const RealField ub = kernel_.convolve(fermion_density(out.omega));
            const double cf = -dt * r.lambda * r.N() / r.hbar;
            const double cb = -dt * r.lambda * r.M() / r.hbar;
            std::vector<cplx> phase_f(grid_.size());
            for (std::size_t i = 0; i < grid_.size(); ++i) phase_f[i] = std::polar(1.0, cf * uf[i]);
            for (auto& o : orbitals)
                for (std::size_t i = 0; i < grid_.size(); ++i) o[i] *= phase_f[i];
            for (std::size_t i = 0; i < grid_.size(); ++i) phi[i] *= std::polar(1.0, cb * ub[i]);
        }

        for (auto& o : orbitals) half_f.apply_inplace(o);
        half_b.apply_inplace(phi);

        for (const auto& o : orbitals)
            if (!all_finite(o)) throw NumericalAbort("non-finite orbital after Hartree step at t = " + std::to_string(s.t));
        if (!all_finite(phi)) throw NumericalAbort("non-finite boson field after Hartree step at t = " + std::to_string(s.t));
        out.t = s.t + dt;
        return out;
    }

    /// Tr((hbar^2/2m_F)(-Lap) omega) + N (hbar^2/2m_B) ||grad phi||^2
    /// + lambda N M int int rho_F(x) V(x-y) rho_B(y).
    double energy(const HHState& s) const {
        const auto& r = s.regime;
        double kin_f = 0.0;
        for (std::size_t i = 0; i < s.omega.rank(); ++i)
            kin_f += s.omega.occupations()[i] * gradient_norm_squared(s.omega.orbitals()[i]);
        kin_f *= r.hbar * r.hbar / (2.0 * r.mass_fermion);
        const double kin_b = r.N() * r.hbar * r.hbar / (2.0 * r.mass_boson) * gradient_norm_squared(s.phi.phi());
        return kin_f + kin_b + interaction_energy(s);
    }

    double interaction_energy(const HHState& s) const {
        if (kernel_.is_zero()) return 0.0;
        const RealField rho_f = fermion_density(s.omega);
        const RealField conv = kernel_.convolve(boson_density(s.phi));
        double acc = 0.0;
        for (std::size_t i = 0; i < grid_.size(); ++i) acc += rho_f[i] * conv[i];
        return s.regime.lambda * s.regime.N() * s.regime.M() * acc * grid_.cell_volume();
    }

    using Monitor = std::function<double(const HHState&)>;

    /// Integrates to T = k dt, sampling every `sample_every` steps (and the
    /// final state). `energy`, `trace`, `phi_norm`, `gram_deviation` are
    /// always recorded; extra monitors are added by name.
    Trajectory<HHState> evolve(const HHState& s0, double T, double dt, long sample_every = 0,
                               const std::map<std::string, Monitor>& monitors = {}) const {
        const long steps = step_count(T, dt);
        if (sample_every <= 0) sample_every = std::max(1L, steps);
        Trajectory<HHState> traj;
        auto record = [&](const HHState& s) {
            traj.states.push_back(s);
            traj.times.push_back(s.t);
            traj.series["energy"].push_back(energy(s));
            traj.series["trace"].push_back(s.omega.trace_weighted_norm());
            traj.series["phi_norm"].push_back(l2_norm(s.phi.phi()));
            traj.series["gram_deviation"].push_back(s.omega.gram_deviation());
            for (const auto& [name, fn] : monitors) traj.series[name].push_back(fn(s));
        };
        HHState s = s0;
        record(s);
        for (long k = 1; k <= steps; ++k) {
            s = step(s, dt);
            if (k % sample_every == 0 || k == steps) record(s);
        }
        return traj;
    }

private:
    SpectralGrid grid_;
    ConvolutionKernel kernel_;
};

inline HHState hh_step(const HHState& s, const PotentialSpec& V, double dt) {
    return HartreeHartree(s.grid(), V).step(s, dt);
}

inline double hh_energy(const HHState& s, const PotentialSpec& V) { return HartreeHartree(s.grid(), V).energy(s); }

}  // namespace bflab
