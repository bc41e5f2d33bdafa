#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bflab/dense.hpp"
#include "bflab/hartree.hpp"
#include "bflab/metrics.hpp"

namespace bflab {

inline constexpr std::size_t kManyBodyBudget = std::size_t(1) << 24;

/// Wave function of M fermions and N bosons on a periodic line, stored as a
/// row-major tensor over grid^{M+N} with the fermion slots first. Values are
/// continuum normalized: sum |psi|^2 h^{M+N} = 1.
struct ManyBodyState {
    SpectralGrid grid;
    int M = 0;
    int N = 0;
    std::vector<cplx> psi;
    double t = 0.0;

    ManyBodyState() = default;
    ManyBodyState(const SpectralGrid& g, int m, int n, std::vector<cplx> values, double time = 0.0)
        : grid(g), M(m), N(n), psi(std::move(values)), t(time) {
        check_shape(g, m, n);
        require(psi.size() == amplitude_count(g, m, n), "tensor size does not match grid^(M+N)");
    }

    static std::size_t amplitude_count(const SpectralGrid& g, int m, int n) {
        return static_cast<std::size_t>(std::llround(std::pow(double(g.points_per_dim()), m + n)));
    }

    static void check_shape(const SpectralGrid& g, int m, int n) {
        require(g.dim() == 1, "many-body states are limited to d = 1");
        require(m >= 0 && n >= 0 && m + n >= 1, "need at least one particle");
        if (std::pow(double(g.points_per_dim()), m + n) > double(kManyBodyBudget))
            throw BudgetExceeded("many-body tensor exceeds 2^24 amplitudes");
    }

    int slots() const { return M + N; }
    std::vector<int> dims() const { return std::vector<int>(static_cast<std::size_t>(slots()), grid.points_per_dim()); }
    double measure() const { return std::pow(grid.spacing(), slots()); }

    double norm() const {
        double s = 0.0;
        for (const auto& v : psi) s += std::norm(v);
        return std::sqrt(s * measure());
    }
};

namespace detail {

inline double factorial(int k) { return std::tgamma(k + 1.0); }

// Tensor with slots a and b exchanged.
inline std::vector<cplx> swap_slots(const std::vector<cplx>& psi, int n, int rank, int a, int b) {
    std::vector<cplx> out(psi.size());
    std::size_t sa = 1, sb = 1;
    for (int s = rank - 1; s > a; --s) sa *= n;
    for (int s = rank - 1; s > b; --s) sb *= n;
    for (std::size_t i = 0; i < psi.size(); ++i) {
        const std::size_t ia = (i / sa) % n, ib = (i / sb) % n;
        const std::size_t j = i - ia * sa - ib * sb + ib * sa + ia * sb;
        out[j] = psi[i];
    }
    return out;
}

}  // namespace detail

/// psi_F(x_1..x_M) = det[phi_i(x_j)] / sqrt(M!).
inline std::vector<cplx> build_slater(const std::vector<Field>& orbitals) {
    require(!orbitals.empty(), "Slater determinant needs at least one orbital");
    const auto& g = orbitals.front().grid;
    const int M = static_cast<int>(orbitals.size());
    for (int i = 0; i < M; ++i)
        for (int j = 0; j < M; ++j) {
            require_same_grid(orbitals[i].grid, g);
            const cplx ip = inner(orbitals[i], orbitals[j]);
            require(std::abs(ip - (i == j ? 1.0 : 0.0)) <= 1e-10, "Slater orbitals are not orthonormal");
        }
    ManyBodyState::check_shape(g, M, 0);
    const int n = g.points_per_dim();
    const std::size_t size = ManyBodyState::amplitude_count(g, M, 0);

    std::vector<int> perm(static_cast<std::size_t>(M));
    std::iota(perm.begin(), perm.end(), 0);
    std::vector<std::pair<std::vector<int>, double>> perms;
    do {
        int inv = 0;
        for (int i = 0; i < M; ++i)
            for (int j = i + 1; j < M; ++j) inv += perm[i] > perm[j];
        perms.emplace_back(perm, inv % 2 ? -1.0 : 1.0);
    } while (std::next_permutation(perm.begin(), perm.end()));

    const double c = 1.0 / std::sqrt(detail::factorial(M));
    std::vector<cplx> out(size);
    std::vector<int> idx(static_cast<std::size_t>(M));
    for (std::size_t flat = 0; flat < size; ++flat) {
        std::size_t r = flat;
        for (int s = M - 1; s >= 0; --s) {
            idx[s] = static_cast<int>(r % n);
            r /= n;
        }
        cplx acc = 0.0;
        for (const auto& [p, sign] : perms) {
            cplx term = sign;
            for (int s = 0; s < M; ++s) term *= orbitals[p[s]][static_cast<std::size_t>(idx[s])];
            acc += term;
        }
        out[flat] = c * acc;
    }
    return out;
}

/// psi_B(y_1..y_N) = phi0(y_1) ... phi0(y_N).
inline std::vector<cplx> build_product(const Field& phi0, int N) {
    require(N >= 1, "product state needs N >= 1");
    require(std::abs(l2_norm(phi0) - 1.0) <= 1e-10, "boson orbital must be normalized");
    ManyBodyState::check_shape(phi0.grid, 0, N);
    std::vector<cplx> out(phi0.values.begin(), phi0.values.end());
    for (int k = 1; k < N; ++k) {
        std::vector<cplx> next(out.size() * phi0.size());
        for (std::size_t i = 0; i < out.size(); ++i)
            for (std::size_t j = 0; j < phi0.size(); ++j) next[i * phi0.size() + j] = out[i] * phi0[j];
        out.swap(next);
    }
    return out;
}

/// psi_F (x) psi_B, fermion slots first.
inline ManyBodyState product_state(const SpectralGrid& g, int M, const std::vector<cplx>& fermions, int N,
                                   const std::vector<cplx>& bosons) {
    ManyBodyState::check_shape(g, M, N);
    std::vector<cplx> psi;
    if (M == 0) psi = bosons;
    else if (N == 0) psi = fermions;
    else {
        psi.resize(fermions.size() * bosons.size());
        for (std::size_t i = 0; i < fermions.size(); ++i)
            for (std::size_t j = 0; j < bosons.size(); ++j) psi[i * bosons.size() + j] = fermions[i] * bosons[j];
    }
    return ManyBodyState(g, M, N, std::move(psi));
}

/// Assumption-type initial data: Slater determinant of `orbitals` times N
/// copies of phi0.
inline ManyBodyState initial_state(const std::vector<Field>& orbitals, const Field& phi0, int N) {
    return product_state(phi0.grid, static_cast<int>(orbitals.size()), build_slater(orbitals), N,
                         build_product(phi0, N));
}

struct SymmetryResiduals {
    double antisymmetry = 0.0;  ///< max over fermion pairs of ||psi + P psi|| / ||psi||
    double symmetry = 0.0;      ///< max over boson pairs of ||psi - P psi|| / ||psi||
};

inline SymmetryResiduals symmetry_residuals(const ManyBodyState& s) {
    SymmetryResiduals r;
    const int n = s.grid.points_per_dim(), rank = s.slots();
    double nrm = 0.0;
    for (const auto& v : s.psi) nrm += std::norm(v);
    nrm = std::sqrt(std::max(nrm, 1e-300));
    auto residual = [&](int a, int b, double sign) {
        const auto q = detail::swap_slots(s.psi, n, rank, a, b);
        double e = 0.0;
        for (std::size_t i = 0; i < q.size(); ++i) e += std::norm(s.psi[i] + sign * q[i]);
        return std::sqrt(e) / nrm;
    };
    for (int a = 0; a < s.M; ++a)
        for (int b = a + 1; b < s.M; ++b) r.antisymmetry = std::max(r.antisymmetry, residual(a, b, 1.0));
    for (int a = s.M; a < rank; ++a)
        for (int b = a + 1; b < rank; ++b) r.symmetry = std::max(r.symmetry, residual(a, b, -1.0));
    return r;
}

struct ReducedDensities {
    DenseKernel fermion;  ///< trace M
    DenseKernel boson;    ///< trace N
};

/// gamma_F(x, x') = M int psi(x, ...) conj psi(x', ...) over the remaining
/// slots, through the first fermion slot; gamma_B likewise through the last
/// boson slot. A kernel of a species with no particles is zero.
inline ReducedDensities reduced_densities(const ManyBodyState& s, double hbar = 1.0) {
    const auto n = static_cast<Eigen::Index>(s.grid.points_per_dim());
    const auto rest = static_cast<Eigen::Index>(s.psi.size() / static_cast<std::size_t>(n));
    const double w = std::pow(s.grid.spacing(), s.slots() - 1);
    using RowMat = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    ReducedDensities out{DenseKernel::zeros(s.grid, hbar), DenseKernel::zeros(s.grid, hbar)};
    if (s.M > 0) {
        Eigen::Map<const RowMat> A(s.psi.data(), n, rest);
        out.fermion.K = (double(s.M) * w) * (A * A.adjoint());
    }
    if (s.N > 0) {
        Eigen::Map<const RowMat> B(s.psi.data(), rest, n);
        out.boson.K = (double(s.N) * w) * (B.transpose() * B.conjugate());
    }
    return out;
}

/// Exact dynamics i hbar d/dt psi = H psi for
///   H = sum_i (hbar^2/2m_F)(-Lap_{x_i}) + sum_j (hbar^2/2m_B)(-Lap_{y_j}) + lambda sum_{i,j} V(x_i - y_j)
/// by Strang splitting: half kinetic flow in Fourier space, the diagonal
/// interaction phase, half kinetic flow. Both factors commute with slot
/// permutations inside each species, so exchange symmetry is kept exactly.
class ManyBodyEvolution {
public:
    ManyBodyEvolution(const SpectralGrid& g, int M, int N, const ScalingRegime& r, const PotentialSpec& V)
        : grid_(g), M_(M), N_(N), regime_(r) {
        ManyBodyState::check_shape(g, M, N);
        r.validate();
        const int n = g.points_per_dim(), rank = M + N;
        const std::size_t size = ManyBodyState::amplitude_count(g, M, N);
        const RealField v = V.sample(g);
        k2_.assign(size, 0.0);
        interaction_.assign(size, 0.0);
        std::vector<int> idx(static_cast<std::size_t>(rank));
        for (std::size_t flat = 0; flat < size; ++flat) {
            std::size_t rr = flat;
            for (int s = rank - 1; s >= 0; --s) {
                idx[s] = static_cast<int>(rr % n);
                rr /= n;
            }
            double kin = 0.0;
            for (int s = 0; s < rank; ++s) {
                const double k = g.wavenumber(idx[s]);
                kin += k * k / (2.0 * (s < M ? r.mass_fermion : r.mass_boson));
            }
            k2_[flat] = r.hbar * r.hbar * kin;
            double u = 0.0;
            for (int i = 0; i < M; ++i)
                for (int j = M; j < rank; ++j) u += v[static_cast<std::size_t>(((idx[i] - idx[j]) % n + n) % n)];
            interaction_[flat] = r.lambda * u;
        }
    }

    const ScalingRegime& regime() const { return regime_; }

    void check(const ManyBodyState& s) const {
        require(s.M == M_ && s.N == N_, "state particle numbers do not match the propagator");
        require_same_grid(s.grid, grid_);
    }

    ManyBodyState step(const ManyBodyState& s, double dt) const {
        check(s);
        require(dt >= 0.0, "time step must be nonnegative");
        if (dt == 0.0) return s;
        ManyBodyState out = s;
        const auto dims = out.dims();
        const double hb = regime_.hbar;
        auto kinetic = [&](double tau) {
            fft_forward(out.psi, dims);
            for (std::size_t i = 0; i < out.psi.size(); ++i) out.psi[i] *= std::polar(1.0, -tau * k2_[i] / hb);
            fft_inverse(out.psi, dims);
        };
        kinetic(0.5 * dt);
        for (std::size_t i = 0; i < out.psi.size(); ++i) out.psi[i] *= std::polar(1.0, -dt * interaction_[i] / hb);
        kinetic(0.5 * dt);
        for (const auto& v : out.psi)
            if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
                throw NumericalAbort("non-finite amplitude in many-body step at t = " + std::to_string(s.t));
        out.t = s.t + dt;
        return out;
    }

    /// <psi, H psi> with the kinetic part evaluated spectrally.
    double energy(const ManyBodyState& s) const {
        check(s);
        auto spec = s.psi;
        fft_forward(spec, s.dims());
        double kin = 0.0, pot = 0.0;
        for (std::size_t i = 0; i < spec.size(); ++i) kin += k2_[i] * std::norm(spec[i]);
        for (std::size_t i = 0; i < s.psi.size(); ++i) pot += interaction_[i] * std::norm(s.psi[i]);
        // Parseval: sum |psi_hat|^2 = n^{M+N} sum |psi|^2.
        kin /= static_cast<double>(s.psi.size());
        return (kin + pot) * s.measure();
    }

    /// Samples every `sample_every` steps and at the end. Series: norm,
    /// energy, antisymmetry, symmetry, trace_F, trace_B, min_eig_F, min_eig_B.
    Trajectory<ManyBodyState> evolve(const ManyBodyState& s0, double T, double dt, long sample_every = 0) const {
        const long steps = step_count(T, dt);
        if (sample_every <= 0) sample_every = std::max(1L, steps);
        Trajectory<ManyBodyState> traj;
        auto record = [&](const ManyBodyState& s) {
            traj.states.push_back(s);
            traj.times.push_back(s.t);
            const auto sym = symmetry_residuals(s);
            const auto rd = reduced_densities(s, regime_.hbar);
            traj.series["norm"].push_back(s.norm());
            traj.series["energy"].push_back(energy(s));
            traj.series["antisymmetry"].push_back(sym.antisymmetry);
            traj.series["symmetry"].push_back(sym.symmetry);
            traj.series["trace_F"].push_back(rd.fermion.trace().real());
            traj.series["trace_B"].push_back(rd.boson.trace().real());
            traj.series["min_eig_F"].push_back(M_ > 0 ? rd.fermion.min_eigenvalue() : 0.0);
            traj.series["min_eig_B"].push_back(N_ > 0 ? rd.boson.min_eigenvalue() : 0.0);
        };
        ManyBodyState s = s0;
        record(s);
        for (long k = 1; k <= steps; ++k) {
            s = step(s, dt);
            if (k % sample_every == 0 || k == steps) record(s);
        }
        return traj;
    }

private:
    SpectralGrid grid_;
    int M_, N_;
    ScalingRegime regime_;
    std::vector<double> k2_;           // sum_s hbar^2 k_s^2 / 2m_s
    std::vector<double> interaction_;  // lambda sum_{i,j} V(x_i - y_j)
};

inline ManyBodyState evolve_exact(const ManyBodyState& psi, const ScalingRegime& r, const PotentialSpec& V, double T,
                                  double dt) {
    ManyBodyEvolution ev(psi.grid, psi.M, psi.N, r, V);
    ManyBodyState s = psi;
    const long steps = step_count(T, dt);
    for (long k = 0; k < steps; ++k) s = ev.step(s, dt);
    return s;
}

struct MeanFieldErrors {
    std::vector<double> t, err_fermion, err_boson, envelope_fermion, envelope_boson;
    double fitted_C = 0.0;  ///< smallest C whose envelope dominates both series
};

/// Smallest C > 0 with theorem1_envelope(r, t, C) >= both errors at every
/// sample, by bisection on [1e-12, 1e3]; 0 when no C in range works.
inline double fit_envelope_constant(const ScalingRegime& r, const std::vector<double>& t, const std::vector<double>& eF,
                                    const std::vector<double>& eB) {
    auto ok = [&](double C) {
        for (std::size_t k = 0; k < t.size(); ++k) {
            const auto e = theorem1_envelope(r, t[k], C);
            if (!(e.fermion >= eF[k] && e.boson >= eB[k])) return false;
        }
        return true;
    };
    double lo = 1e-12, hi = 1e3;
    if (ok(lo)) return lo;
    if (!ok(hi)) return 0.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = std::sqrt(lo * hi);
        (ok(mid) ? hi : lo) = mid;
        if (hi / lo < 1.0 + 1e-10) break;
    }
    return hi;
}

/// (1/M)||gamma_F(t) - omega(t)||_Tr and (1/N)||gamma_B(t) - N|phi(t)><phi(t)|||_Tr
/// on matched samples, with the envelope at the fitted C (or at `C` when
/// positive).
inline MeanFieldErrors theorem1_errors(const Trajectory<ManyBodyState>& psi_traj, const Trajectory<HHState>& hh_traj,
                                       double C = 0.0) {
    require(psi_traj.states.size() == hh_traj.states.size(), "trajectories have different sample counts");
    require(!psi_traj.states.empty(), "empty trajectory");
    MeanFieldErrors out;
    const auto& r = hh_traj.states.front().regime;
    for (std::size_t k = 0; k < psi_traj.states.size(); ++k) {
        const auto& mb = psi_traj.states[k];
        const auto& hh = hh_traj.states[k];
        require(std::abs(psi_traj.times[k] - hh_traj.times[k]) <= 1e-9 * std::max(1.0, std::abs(hh_traj.times[k])),
                "trajectory time grids differ");
        require_same_grid(mb.grid, hh.grid());
        require(static_cast<double>(mb.M) == r.M() && static_cast<double>(mb.N) == r.N(),
                "particle numbers differ from the regime");
        const auto rd = reduced_densities(mb, r.hbar);
        const DenseKernel omega = to_dense(hh.omega, r.hbar);
        const DenseKernel phi = projector(hh.phi.phi(), static_cast<double>(mb.N), r.hbar);
        out.t.push_back(psi_traj.times[k]);
        out.err_fermion.push_back(trace_norm(DenseKernel(mb.grid, rd.fermion.K - omega.K, r.hbar)) / mb.M);
        out.err_boson.push_back(trace_norm(DenseKernel(mb.grid, rd.boson.K - phi.K, r.hbar)) / mb.N);
    }
    out.fitted_C = C > 0.0 ? C : fit_envelope_constant(r, out.t, out.err_fermion, out.err_boson);
    for (double t : out.t) {
        const auto e = out.fitted_C > 0.0 ? theorem1_envelope(r, t, out.fitted_C) : Envelope{};
        out.envelope_fermion.push_back(e.fermion);
        out.envelope_boson.push_back(e.boson);
    }
    return out;
}

/// CSV with columns t, errF, errB, envelopeF, envelopeB.
inline void write_errors_csv(std::ostream& os, const MeanFieldErrors& e) {
    os << "t,errF,errB,envelopeF,envelopeB\n";
    os.precision(17);
    for (std::size_t k = 0; k < e.t.size(); ++k)
        os << e.t[k] << ',' << e.err_fermion[k] << ',' << e.err_boson[k] << ',' << e.envelope_fermion[k] << ','
           << e.envelope_boson[k] << '\n';
}

}  // namespace bflab
