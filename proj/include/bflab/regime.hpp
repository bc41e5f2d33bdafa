#pragma once

#include <cmath>
#include <optional>
#include <string>

#include "bflab/error.hpp"

namespace bflab {

/// Physical parameters of the Bose-Fermi mixture.
struct ScalingRegime {
    enum class Kind { microscopic, macroscopic, custom };

    double lambda = 1.0;  ///< coupling
    double hbar = 1.0;
    double mass_fermion = 1.0;
    double mass_boson = 1.0;
    long bosons = 1;    ///< N
    long fermions = 1;  ///< M
    int dim = 1;
    Kind kind = Kind::custom;

    /// lambda = 1/N, hbar = 1, N = M, m_F = m_B = 2.
    static ScalingRegime microscopic(long particles, int dim) {
        require(particles >= 1, "particle count must be positive");
        return {1.0 / static_cast<double>(particles), 1.0, 2.0, 2.0, particles, particles, dim, Kind::microscopic};
    }

    /// lambda = 1/N, hbar = M^{-1/d}, m_B = hbar, m_F = 1, N = M^{1+1/d}.
    /// M must be a perfect d-th power so that N is an integer.
    static ScalingRegime macroscopic(long fermions, int dim) {
        require(fermions >= 1, "fermion count must be positive");
        require(dim >= 1 && dim <= 3, "dimension must be 1, 2 or 3");
        const long root = std::lround(std::pow(static_cast<double>(fermions), 1.0 / dim));
        long p = 1;
        for (int a = 0; a < dim; ++a) p *= root;
        require(p == fermions, "macroscopic regime needs M to be a perfect d-th power");
        const long n = fermions * root;
        const double hbar = 1.0 / static_cast<double>(root);
        return {1.0 / static_cast<double>(n), hbar, 1.0, hbar, n, fermions, dim, Kind::macroscopic};
    }

    static ScalingRegime custom(double lambda, double hbar, double mass_fermion, double mass_boson, long bosons,
                                long fermions, int dim) {
        ScalingRegime r{lambda, hbar, mass_fermion, mass_boson, bosons, fermions, dim, Kind::custom};
        r.validate();
        return r;
    }

    void validate() const {
        require(lambda >= 0.0 && std::isfinite(lambda), "coupling must be nonnegative");
        require(hbar > 0.0, "hbar must be positive");
        require(mass_fermion > 0.0 && mass_boson > 0.0, "masses must be positive");
        require(bosons >= 1 && fermions >= 1, "particle counts must be positive");
        require(dim >= 1 && dim <= 3, "dimension must be 1, 2 or 3");
    }

    double N() const { return static_cast<double>(bosons); }
    double M() const { return static_cast<double>(fermions); }

    /// Mass condition of the mean-field bound: m_F >= 1, lambda N <= m_F, M^{-1/d} <= hbar.
    /// A relative slack of 1e-12 absorbs rounding in the named constructors.
    bool satisfies_mass_condition() const {
        constexpr double eps = 1e-12;
        return mass_fermion >= 1.0 - eps && lambda * N() <= mass_fermion * (1.0 + eps) &&
               std::pow(M(), -1.0 / dim) <= hbar * (1.0 + eps);
    }

    std::string kind_name() const {
        switch (kind) {
            case Kind::microscopic: return "microscopic";
            case Kind::macroscopic: return "macroscopic";
            default: return "custom";
        }
    }
};

inline constexpr double kWindowExponentCap = 64.0;

/// Exponent k_l in (lambda sqrt(N) / hbar) M^l <= (hbar M)^{k_l}.
///
/// Named regimes return their closed forms (k_l = l, resp.
/// (1 + d(2l - 1)) / (2(d - 1))). Custom regimes return the smallest k in
/// [1, 64] that satisfies the inequality, or nothing.
inline std::optional<double> window_exponent(const ScalingRegime& r, int ell) {
    require(ell >= 1, "window exponent needs l >= 1");
    switch (r.kind) {
        case ScalingRegime::Kind::microscopic: return static_cast<double>(ell);
        case ScalingRegime::Kind::macroscopic:
            require(r.dim >= 2, "macroscopic window exponent is undefined for d = 1");
            return (1.0 + r.dim * (2.0 * ell - 1.0)) / (2.0 * (r.dim - 1.0));
        default: break;
    }
    const double log_lhs = std::log(r.lambda * std::sqrt(r.N()) / r.hbar) + ell * std::log(r.M());
    const double log_base = std::log(r.hbar * r.M());
    auto holds = [&](double k) { return log_lhs <= k * log_base + 1e-12 * std::max(1.0, std::abs(log_lhs)); };
    if (holds(1.0)) return 1.0;
    if (log_base <= 0.0) return std::nullopt;  // right-hand side does not grow with k
    const double k = log_lhs / log_base;
    if (k > kWindowExponentCap) return std::nullopt;
    return k;
}

struct Envelope {
    double fermion = 0.0;
    double boson = 0.0;
};

/// Right-hand sides of the mean-field error bounds for a user constant C:
/// (C / sqrt(M)) exp[C lambda sqrt(NM / hbar) (1 + sqrt(hbar M / N)) e^{|t|}],
/// and the bosonic analogue with 1 / sqrt(N).
inline Envelope theorem1_envelope(const ScalingRegime& r, double t, double C) {
    require(C > 0.0, "envelope constant must be positive");
    const double rate = r.lambda * std::sqrt(r.N() * r.M() / r.hbar) * (1.0 + std::sqrt(r.hbar * r.M() / r.N()));
    const double growth = std::exp(C * rate * std::exp(std::abs(t)));
    return {C / std::sqrt(r.M()) * growth, C / std::sqrt(r.N()) * growth};
}

/// Exponent C lambda sqrt(NM/hbar)(1 + sqrt(hbar M/N)) e^{|t|} on its own.
inline double theorem1_exponent(const ScalingRegime& r, double t, double C) {
    return C * r.lambda * std::sqrt(r.N() * r.M() / r.hbar) * (1.0 + std::sqrt(r.hbar * r.M() / r.N())) *
           std::exp(std::abs(t));
}

}  // namespace bflab
