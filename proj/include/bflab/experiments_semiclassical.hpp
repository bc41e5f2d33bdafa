#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "bflab/config.hpp"
#include "bflab/hartree.hpp"
#include "bflab/metrics.hpp"
#include "bflab/phasespace.hpp"
#include "bflab/report.hpp"
#include "bflab/vlasov.hpp"

namespace bflab {

/// Least-squares slope of log y against log x.
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    require(x.size() == y.size() && x.size() >= 2, "slope fit needs two or more points");
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += std::log(x[i]);
        my += std::log(y[i]);
    }
    mx /= x.size();
    my /= y.size();
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = std::log(x[i]) - mx;
        sxy += dx * (std::log(y[i]) - my);
        sxx += dx * dx;
    }
    return sxy / sxx;
}

// ---------------------------------------------------------------------------
// semiclassical-sweep: Hartree-Hartree in the macroscopic regime with
// anti-Wick data omega_0 = Op_aw(f_0) against Vlasov-Hartree from f_0, over
// hbar = M^{-1}.

struct SemiclassicalPlan {
    SpectralGrid grid;
    PotentialSpec V;
    std::vector<double> hbars;
    PhaseSpaceDistribution f0;
    Field phi0;
    TimeConfig time;
    double vlasov_dt = 0.0;
    long vlasov_every = 1;
    std::vector<TestFunction> dictionary;
    double min_slope = 0.0, floor = 0.0;
    bool require_monotone = true;
};

inline SemiclassicalPlan plan_semiclassical(const Node& root) {
    root.only({"experiment", "seed", "output", "grid", "potential", "sweep", "initial", "time", "vlasov",
               "dictionary", "thresholds"});
    SemiclassicalPlan p;
    p.grid = parse_grid(root.sub("grid"), 512);
    p.V = parse_potential(root.sub("potential"));
    auto sw = root.sub("sweep");
    sw.only({"hbar"});
    p.hbars = sw.list<double>("hbar", 3);
    for (double h : p.hbars) {
        const double M = std::round(1.0 / h);
        if (!(h > 0.0) || std::abs(M * h - 1.0) > 1e-9) sw.fail("each hbar must be 1/M for an integer M");
    }
    auto init = root.sub("initial");
    init.only({"f", "phi"});
    p.f0 = parse_f(init.sub("f"), p.grid);
    p.phi0 = parse_phi(init.sub("phi"), p.grid);
    p.time = parse_time(root.sub("time"));
    auto vl = root.sub("vlasov");
    vl.only({"dt"});
    p.vlasov_dt = vl.positive("dt");
    const double ckpt = p.time.sample_every * p.time.dt;
    p.vlasov_every = std::lround(ckpt / p.vlasov_dt);
    if (p.time.steps == 0) p.vlasov_every = 1;
    else if (p.vlasov_every < 1 || std::abs(p.vlasov_every * p.vlasov_dt - ckpt) > 1e-9 * std::max(1.0, ckpt))
        vl.fail("checkpoint spacing must be a multiple of the Vlasov dt");
    auto dict = root.sub("dictionary");
    dict.only({"widths", "count", "p_max"});
    p.dictionary = gaussian_dictionary(p.grid, dict.positive("p_max"), dict.list<double>("widths"),
                                       dict.get<int>("count"), root.get<std::uint64_t>("seed", 0));
    auto th = root.sub("thresholds");
    th.only({"min_slope", "floor", "require_monotone_fermion"});
    p.min_slope = th.get<double>("min_slope");
    p.floor = th.nonnegative("floor");
    p.require_monotone = th.get<bool>("require_monotone_fermion", true);
    try {
        DenseKernel::check_budget(p.grid);
    } catch (const BudgetExceeded& e) {
        root.fail(std::string("grid too large for dense kernels: ") + e.what());
    }
    return p;
}

inline double dictionary_gap(const std::vector<TestFunction>& dict, const PhaseSpaceDistribution& a,
                             const PhaseSpaceDistribution& b) {
    double m = 0.0;
    for (const auto& h : dict) m = std::max(m, std::abs(pairing(h, a) - pairing(h, b)));
    return m;
}

inline RunReport run_semiclassical(const SemiclassicalPlan& p) {
    Stopwatch clock;
    RunReport rep;
    VlasovHartree vh(p.grid, p.V);
    const auto cl = vh.evolve(VHState(p.f0, BosonField(p.phi0)), p.time.T, p.vlasov_dt, p.vlasov_every);
    const std::size_t checkpoints = cl.times.size();

    std::vector<std::vector<double>> phi_err(checkpoints), weak_err(checkpoints);
    json runs = json::array();
    for (double hb : p.hbars) {
        const long M = std::lround(1.0 / hb);
        const auto r = ScalingRegime::macroscopic(M, 1);
        const DenseKernel K0 = antiwick_quantize(p.f0, hb, p.grid);
        HHState s0(DensityMatrix::from_operator(p.grid, K0.op(), 1e-12), BosonField(p.phi0), r);
        HartreeHartree hh(p.grid, p.V);
        const auto qu = hh.evolve(s0, p.time.T, p.time.dt, p.time.sample_every);
        if (qu.times.size() != checkpoints) throw NumericalAbort("checkpoint grids of the two solvers differ");
        json errs = json::array();
        for (std::size_t c = 0; c < checkpoints; ++c) {
            const double e = l2_distance(qu.states[c].phi.phi(), cl.states[c].phi.phi());
            const auto W = wigner(to_dense(qu.states[c].omega, hb), hb);
            const double w = dictionary_gap(p.dictionary, W, cl.states[c].f);
            phi_err[c].push_back(e);
            weak_err[c].push_back(w);
            errs.push_back({{"t", qu.times[c]}, {"phi_error", e}, {"fermion_weak_error", w}});
        }
        runs.push_back({{"hbar", hb}, {"M", M}, {"N", r.bosons}, {"rank", s0.omega.rank()},
                        {"trace", s0.omega.trace()}, {"checkpoints", errs}});
    }
    rep.metrics["runs"] = runs;
    rep.metrics["vlasov"] = {{"escaped_mass", cl.series.at("escaped_mass").back()},
                             {"range_violation", cl.series.at("range_violation").back()},
                             {"mass_drift", std::abs(cl.series.at("mass").back() - cl.series.at("mass").front())}};

    json slopes = json::array();
    for (std::size_t c = 0; c < checkpoints; ++c) {
        const double t = cl.times[c];
        Table tab;
        tab.add("hbar", p.hbars);
        tab.add("phi_error", phi_err[c]);
        tab.add("fermion_weak_error", weak_err[c]);
        char name[64];
        std::snprintf(name, sizeof name, "sweep_t_%g", t);
        rep.tables[name] = tab;

        const double worst = *std::max_element(phi_err[c].begin(), phi_err[c].end());
        const double least = *std::min_element(phi_err[c].begin(), phi_err[c].end());
        json entry{{"t", t}};
        if (worst <= p.floor || least <= 0.0) {
            entry["phi_slope"] = nullptr;
            entry["skipped"] = "errors at the floor";
        } else {
            const double s = loglog_slope(p.hbars, phi_err[c]);
            entry["phi_slope"] = s;
            std::snprintf(name, sizeof name, "phi_slope_t_%g", t);
            rep.at_least(name, "log-log slope of ||phi - phi^hbar|| in hbar", s, p.min_slope);
        }
        // Fermion side: weak errors shrink with hbar.
        std::vector<std::size_t> order(p.hbars.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::sort(order.begin(), order.end(), [&](auto a, auto b) { return p.hbars[a] > p.hbars[b]; });
        bool mono = true;
        for (std::size_t i = 1; i < order.size(); ++i) mono = mono && weak_err[c][order[i]] < weak_err[c][order[i - 1]];
        entry["fermion_monotone"] = mono;
        const double wmax = *std::max_element(weak_err[c].begin(), weak_err[c].end());
        if (wmax > p.floor) {
            const double ws = loglog_slope(p.hbars, weak_err[c]);
            entry["fermion_slope"] = ws;
        }
        if (p.require_monotone && wmax > p.floor) {
            std::snprintf(name, sizeof name, "fermion_monotone_t_%g", t);
            rep.holds(name, "tested fermion errors decrease with hbar", mono);
        }
        slopes.push_back(entry);
    }
    rep.metrics["slopes"] = slopes;
    rep.wall_seconds = clock.seconds();
    return rep;
}

// ---------------------------------------------------------------------------
// transform-roundtrip: Wigner/Weyl inversion on random Hermitian kernels, the
// position marginal, and the Fourier-norm identity on localized states.

struct RoundtripPlan {
    SpectralGrid grid;
    double hbar = 1.0;
    int count = 0;
    std::uint64_t seed = 0;
    SpectralGrid norm_grid;
    std::vector<double> norm_hbars, norm_s;
    std::vector<json> norm_states;
    double roundtrip_tol = 0.0, marginal_tol = 0.0, norm_tol = 0.0;
};

inline RoundtripPlan plan_roundtrip(const Node& root) {
    root.only({"experiment", "seed", "output", "grid", "hbar", "count", "norm_consistency", "thresholds"});
    RoundtripPlan p;
    p.grid = parse_grid(root.sub("grid"), 32);
    p.hbar = root.positive("hbar");
    p.count = root.get<int>("count");
    if (p.count < 1) root.fail("'count' must be positive");
    p.seed = root.get<std::uint64_t>("seed", 0);
    auto nc = root.sub("norm_consistency");
    nc.only({"grid", "hbar", "s", "states"});
    p.norm_grid = parse_grid(nc.sub("grid"), 128);
    p.norm_hbars = nc.list<double>("hbar");
    p.norm_s = nc.list<double>("s");
    const auto& states = nc.raw().at("states");
    if (!states.is_array() || states.empty()) nc.fail("'states' must be a nonempty array");
    for (std::size_t i = 0; i < states.size(); ++i) {
        Node st(states[i], nc.path() + ".states[" + std::to_string(i) + "]");
        st.only({"orbitals", "occupations"});
        const auto occ = st.list<double>("occupations");
        for (double w : occ)
            if (w < 0.0 || w > 1.0) st.fail("occupations must lie in [0, 1]");
        parse_orbitals(st.sub("orbitals"), p.norm_grid, static_cast<int>(occ.size()), p.seed);
        p.norm_states.push_back(states[i]);
    }
    auto th = root.sub("thresholds");
    th.only({"roundtrip", "marginal", "norm_consistency"});
    p.roundtrip_tol = th.nonnegative("roundtrip");
    p.marginal_tol = th.nonnegative("marginal");
    p.norm_tol = th.nonnegative("norm_consistency");
    return p;
}

inline DenseKernel random_hermitian_kernel(const SpectralGrid& g, std::mt19937_64& rng, double hbar) {
    std::normal_distribution<double> nd;
    const auto n = static_cast<Eigen::Index>(g.size());
    Eigen::MatrixXcd A(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) A(i, j) = {nd(rng), nd(rng)};
    return DenseKernel(g, 0.5 * (A + A.adjoint()), hbar);
}

inline RunReport run_roundtrip(const RoundtripPlan& p) {
    Stopwatch clock;
    RunReport rep;
    std::mt19937_64 rng(p.seed);
    const double hb = p.hbar;
    double kernel_err = 0.0, phase_err = 0.0, marginal_err = 0.0;
    const int n = p.grid.points_per_dim();
    for (int k = 0; k < p.count; ++k) {
        const DenseKernel K = random_hermitian_kernel(p.grid, rng, hb);
        const auto f = wigner(K, hb);
        const DenseKernel K2 = weyl_quantize(f, hb);
        kernel_err = std::max(kernel_err, (K2.K - K.K).cwiseAbs().maxCoeff() / K.K.cwiseAbs().maxCoeff());
        const auto f2 = wigner(K2, hb);
        double d = 0.0, scale = 0.0;
        for (std::size_t i = 0; i < f.values.size(); ++i) {
            d = std::max(d, std::abs(f2.values[i] - f.values[i]));
            scale = std::max(scale, std::abs(f.values[i]));
        }
        phase_err = std::max(phase_err, d / scale);
        // Position marginal at kernel nodes (even indices of the 2n-point x axis).
        for (int i = 0; i < n; ++i) {
            double m = 0.0;
            for (std::size_t ip = 0; ip < f.p_size(); ++ip) m += f(static_cast<std::size_t>(2 * i), ip);
            m *= f.paxis.spacing;
            const double ref = hb * K.K(i, i).real();
            marginal_err = std::max(marginal_err, std::abs(m - ref) / std::max(1.0, std::abs(ref)));
        }
    }
    rep.metrics["roundtrip"] = {{"kernels", p.count}, {"weyl_of_wigner", kernel_err}, {"wigner_of_weyl", phase_err},
                                {"marginal", marginal_err}};
    rep.at_most("weyl_of_wigner", "weyl_quantize inverts wigner", kernel_err, p.roundtrip_tol);
    rep.at_most("wigner_of_weyl", "wigner inverts weyl_quantize on its image", phase_err, p.roundtrip_tol);
    rep.at_most("marginal", "int f dp = hbar^d K(x, x)", marginal_err, p.marginal_tol);

    double norm_err = 0.0;
    json cases = json::array();
    Table tab;
    std::vector<double> col_state, col_h, col_s, col_lhs, col_rhs;
    for (std::size_t si = 0; si < p.norm_states.size(); ++si) {
        const Node st(p.norm_states[si], "norm_consistency.states");
        const auto occ = st.list<double>("occupations");
        auto orb = parse_orbitals(st.sub("orbitals"), p.norm_grid, static_cast<int>(occ.size()), p.seed);
        const DensityMatrix w(std::move(orb), occ);
        for (double h : p.norm_hbars) {
            const DenseKernel K = to_dense(w, h);
            const auto f = wigner(K, h);
            for (double s : p.norm_s) {
                const double lhs = fourier_norm(f, s);
                const double rhs = std::pow(h, p.norm_grid.dim()) * op_fourier_norm(K, s);
                const double rel = std::abs(lhs - rhs) / std::max(std::abs(rhs), 1e-300);
                norm_err = std::max(norm_err, rel);
                col_state.push_back(static_cast<double>(si));
                col_h.push_back(h);
                col_s.push_back(s);
                col_lhs.push_back(lhs);
                col_rhs.push_back(rhs);
            }
        }
    }
    tab.add("state", col_state);
    tab.add("hbar", col_h);
    tab.add("s", col_s);
    tab.add("fourier_norm", col_lhs);
    tab.add("hbar_d_op_norm", col_rhs);
    rep.tables["norm_consistency"] = tab;
    rep.metrics["norm_consistency_max_relative"] = norm_err;
    rep.at_most("norm_consistency", "|f|_s = hbar^d |||K|||_s", norm_err, p.norm_tol);
    rep.wall_seconds = clock.seconds();
    return rep;
}

}  // namespace bflab
