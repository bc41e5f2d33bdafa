#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "bflab/config.hpp"
#include "bflab/hartree.hpp"
#include "bflab/manybody.hpp"
#include "bflab/metrics.hpp"
#include "bflab/report.hpp"

namespace bflab {

namespace detail {

inline double max_abs_drift(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x - v.front()));
    return m;
}

/// Mean-field state from the shared config sections grid/regime/initial.
struct MeanFieldSetup {
    SpectralGrid grid;
    ScalingRegime regime;
    PotentialSpec V;
    HHState state;
    TimeConfig time;
};

inline MeanFieldSetup parse_meanfield_setup(const Node& root, int max_points) {
    MeanFieldSetup s;
    s.grid = parse_grid(root.sub("grid"), max_points);
    s.regime = parse_regime(root.sub("regime"));
    s.V = parse_potential(root.sub("potential"));
    auto init = root.sub("initial");
    init.only({"orbitals", "phi"});
    if (s.regime.fermions > s.grid.points_per_dim()) root.fail("more fermions than grid points");
    auto orb = parse_orbitals(init.sub("orbitals"), s.grid, static_cast<int>(s.regime.fermions),
                              root.get<std::uint64_t>("seed", 0));
    s.state = HHState(DensityMatrix::zero_temperature(std::move(orb)), BosonField(parse_phi(init.sub("phi"), s.grid)),
                      s.regime);
    s.time = parse_time(root.sub("time"));
    return s;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// hh-baseline: conservation laws of one Hartree-Hartree run.

struct HHBaselinePlan {
    detail::MeanFieldSetup setup;
    double trace_drift = 0.0, phi_norm_drift = 0.0, energy_drift = 0.0, gram_deviation = 0.0;
    double max_seconds = -1.0;
};

inline HHBaselinePlan plan_hh_baseline(const Node& root) {
    root.only({"experiment", "seed", "output", "grid", "regime", "potential", "initial", "time", "thresholds"});
    HHBaselinePlan p{detail::parse_meanfield_setup(root, 4096)};
    auto th = root.sub("thresholds");
    th.only({"trace_drift", "phi_norm_drift", "energy_drift", "gram_deviation", "max_seconds"});
    p.trace_drift = th.nonnegative("trace_drift");
    p.phi_norm_drift = th.nonnegative("phi_norm_drift");
    p.energy_drift = th.nonnegative("energy_drift");
    p.gram_deviation = th.nonnegative("gram_deviation");
    if (th.has("max_seconds")) p.max_seconds = th.positive("max_seconds");
    return p;
}

inline RunReport run_hh_baseline(const HHBaselinePlan& p) {
    Stopwatch clock;
    RunReport rep;
    const auto& s = p.setup;
    HartreeHartree hh(s.grid, s.V);
    auto traj = hh.evolve(s.state, s.time.T, s.time.dt, s.time.sample_every);
    const auto& E = traj.series["energy"];
    const double e0 = std::abs(E.front());
    const double energy_rel = detail::max_abs_drift(E) / (e0 > 0.0 ? e0 : 1.0);
    const auto& gram = traj.series["gram_deviation"];
    const double gram_max = *std::max_element(gram.begin(), gram.end());
    const double trace_drift = detail::max_abs_drift(traj.series["trace"]);
    const double phi_drift = detail::max_abs_drift(traj.series["phi_norm"]);
    rep.metrics["trace_drift"] = trace_drift;
    rep.metrics["phi_norm_drift"] = phi_drift;
    rep.metrics["energy_drift_relative"] = energy_rel;
    rep.metrics["gram_deviation_max"] = gram_max;
    rep.metrics["energy_initial"] = E.front();
    rep.metrics["steps"] = s.time.steps;
    rep.metrics["regime"] = {{"kind", s.regime.kind_name()}, {"lambda", s.regime.lambda}, {"hbar", s.regime.hbar},
                             {"N", s.regime.bosons}, {"M", s.regime.fermions}};
    rep.at_most("trace_drift", "conservation: Tr omega", trace_drift, p.trace_drift);
    rep.at_most("phi_norm_drift", "conservation: ||phi||", phi_drift, p.phi_norm_drift);
    rep.at_most("energy_drift", "conservation: relative energy", energy_rel, p.energy_drift);
    rep.at_most("gram_deviation", "orthonormality of orbitals", gram_max, p.gram_deviation);
    rep.tables["series"] = trajectory_table(traj);
    rep.wall_seconds = clock.seconds();
    // A boolean, so report.json stays byte-identical; the time itself goes to timing.json.
    if (p.max_seconds > 0.0) rep.holds("runtime", "runtime budget", rep.wall_seconds <= p.max_seconds);
    return rep;
}

// ---------------------------------------------------------------------------
// stability-perturb: distance of paired Hartree-Hartree runs versus the size
// of a unitary perturbation e^{i eps g} of the initial data.

struct StabilityPlan {
    detail::MeanFieldSetup setup;
    std::vector<double> epsilons{};
    int mode = 1;
    std::vector<double> checkpoints{};
    std::vector<long> checkpoint_steps{};
    double ratio_spread = 0.0, zero_distance = 0.0;
    bool require_monotone = false;
};

inline StabilityPlan plan_stability(const Node& root) {
    root.only({"experiment", "seed", "output", "grid", "regime", "potential", "initial", "time", "perturbation",
               "thresholds"});
    StabilityPlan p{detail::parse_meanfield_setup(root, 256)};
    DenseKernel::check_budget(p.setup.grid);
    auto pert = root.sub("perturbation");
    pert.only({"epsilons", "mode", "checkpoints"});
    p.epsilons = pert.list<double>("epsilons", 2);
    for (double e : p.epsilons)
        if (!(e > 0.0)) pert.fail("epsilons must be positive (the zero perturbation is always added)");
    p.mode = pert.get<int>("mode", 1);
    p.checkpoints = pert.list<double>("checkpoints");
    for (double t : p.checkpoints) {
        const long k = std::lround(t / p.setup.time.dt);
        if (t < 0.0 || std::abs(k * p.setup.time.dt - t) > 1e-9 * std::max(1.0, t) || k > p.setup.time.steps)
            pert.fail("checkpoints must be multiples of dt within [0, T]");
        p.checkpoint_steps.push_back(k);
    }
    auto th = root.sub("thresholds");
    th.only({"ratio_spread", "zero_distance", "require_monotone"});
    p.ratio_spread = th.nonnegative("ratio_spread");
    p.zero_distance = th.nonnegative("zero_distance");
    p.require_monotone = th.get<bool>("require_monotone", false);
    return p;
}

/// (1/M) |||omega_1 - omega_2|||_1 + ||phi_1 - phi_2||.
inline double stability_distance(const HHState& a, const HHState& b) {
    const double hb = a.regime.hbar;
    const DenseKernel d = to_dense(a.omega, hb) - to_dense(b.omega, hb);
    return op_fourier_norm(d, 1.0) / a.regime.M() + l2_distance(a.phi.phi(), b.phi.phi());
}

inline HHState unitary_perturbation(const HHState& s, double eps, int mode) {
    const auto& g = s.grid();
    std::vector<cplx> u(g.size());
    for (std::size_t i = 0; i < g.size(); ++i)
        u[i] = std::polar(1.0, eps * std::cos(g.dk() * mode * (g.position(i)[0] - g.origin())));
    HHState out = s;
    for (auto& o : out.omega.orbitals_mut())
        for (std::size_t i = 0; i < g.size(); ++i) o[i] *= u[i];
    Field& phi = out.phi.phi_mut();
    for (std::size_t i = 0; i < g.size(); ++i) phi[i] *= u[i];
    return out;
}

inline RunReport run_stability(const StabilityPlan& p) {
    Stopwatch clock;
    RunReport rep;
    const auto& s = p.setup;
    HartreeHartree hh(s.grid, s.V);
    const long last = *std::max_element(p.checkpoint_steps.begin(), p.checkpoint_steps.end());

    auto sample = [&](const HHState& s0) {
        std::vector<HHState> out(p.checkpoint_steps.size());
        HHState cur = s0;
        for (long k = 0; k <= last; ++k) {
            for (std::size_t c = 0; c < p.checkpoint_steps.size(); ++c)
                if (p.checkpoint_steps[c] == k) out[c] = cur;
            if (k < last) cur = hh.step(cur, s.time.dt);
        }
        return out;
    };

    const auto base = sample(s.state);
    std::vector<double> eps{0.0};
    eps.insert(eps.end(), p.epsilons.begin(), p.epsilons.end());
    Table table;
    table.add("t", p.checkpoints);
    std::vector<std::vector<double>> ratios;
    json per_eps = json::array();
    for (double e : eps) {
        const auto run = sample(unitary_perturbation(s.state, e, p.mode));
        std::vector<double> dist;
        for (std::size_t c = 0; c < run.size(); ++c) dist.push_back(stability_distance(base[c], run[c]));
        const double d0 = stability_distance(s.state, unitary_perturbation(s.state, e, p.mode));
        bool mono = true;
        for (std::size_t c = 1; c < dist.size(); ++c)
            if (p.checkpoints[c] > p.checkpoints[c - 1]) mono = mono && dist[c] >= dist[c - 1] * (1.0 - 1e-12);
        per_eps.push_back({{"epsilon", e}, {"initial_distance", d0}, {"distances", dist}, {"monotone_in_t", mono}});
        char name[64];
        std::snprintf(name, sizeof name, "distance_eps_%g", e);
        table.add(name, dist);
        if (e == 0.0) {
            const double worst = *std::max_element(dist.begin(), dist.end());
            rep.at_most("zero_perturbation", "zero perturbation gives zero distance", std::max(worst, d0),
                        p.zero_distance);
        } else {
            std::vector<double> r;
            for (double d : dist) r.push_back(d / e);
            ratios.push_back(r);
            if (p.require_monotone) rep.holds("monotone_eps_" + std::to_string(e), "distance monotone in t", mono);
        }
    }
    rep.metrics["runs"] = per_eps;
    json spread = json::array();
    for (std::size_t c = 0; c < p.checkpoints.size(); ++c) {
        double lo = 1e300, hi = 0.0;
        for (const auto& r : ratios) {
            lo = std::min(lo, r[c]);
            hi = std::max(hi, r[c]);
        }
        const double sp = lo > 0.0 ? (hi - lo) / lo : 0.0;
        spread.push_back({{"t", p.checkpoints[c]}, {"ratio_min", lo}, {"ratio_max", hi}, {"spread", sp}});
        char name[64];
        std::snprintf(name, sizeof name, "ratio_spread_t_%g", p.checkpoints[c]);
        rep.at_most(name, "distance / eps stable across eps", sp, p.ratio_spread);
    }
    rep.metrics["ratio_spread"] = spread;
    rep.tables["distances"] = table;
    rep.wall_seconds = clock.seconds();
    return rep;
}

// ---------------------------------------------------------------------------
// commutator-monitor: trace-norm commutators of omega(t) with x, the
// momentum and e^{i xi x}, with a fitted exponential envelope.

struct CommutatorPlan {
    detail::MeanFieldSetup setup;
    std::vector<int> modes{};
    double zero_mode_tol = -1.0;
};

inline CommutatorPlan plan_commutator(const Node& root) {
    root.only({"experiment", "seed", "output", "grid", "regime", "potential", "initial", "time", "xi_modes",
               "thresholds"});
    CommutatorPlan p{detail::parse_meanfield_setup(root, 1024)};
    try {
        DenseKernel::check_budget(p.setup.grid);
    } catch (const BudgetExceeded& e) {
        root.fail(std::string("grid too large for dense kernels: ") + e.what());
    }
    p.modes = root.list<int>("xi_modes");
    if (root.has("thresholds")) {
        auto th = root.sub("thresholds");
        th.only({"zero_mode"});
        if (th.has("zero_mode")) p.zero_mode_tol = th.nonnegative("zero_mode");
    }
    return p;
}

inline double commutator_trace_norm(const Eigen::MatrixXcd& A, const Eigen::MatrixXcd& W) {
    const Eigen::MatrixXcd C = A * W - W * A;
    return Eigen::JacobiSVD<Eigen::MatrixXcd>(C).singularValues().sum();
}

/// Dense momentum operator -i hbar d/dx with the spectral derivative.
inline Eigen::MatrixXcd momentum_matrix(const SpectralGrid& g, double hbar) {
    const auto n = static_cast<Eigen::Index>(g.size());
    Eigen::MatrixXcd P(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        std::vector<cplx> col(g.size(), 0.0);
        col[static_cast<std::size_t>(j)] = 1.0;
        fft_forward(col, g.dims());
        for (std::size_t i = 0; i < col.size(); ++i) col[i] *= hbar * g.wavenumber(static_cast<int>(i));
        fft_inverse(col, g.dims());
        for (Eigen::Index i = 0; i < n; ++i) P(i, j) = col[static_cast<std::size_t>(i)];
    }
    return P;
}

inline RunReport run_commutator(const CommutatorPlan& p) {
    Stopwatch clock;
    RunReport rep;
    const auto& s = p.setup;
    const auto& g = s.grid;
    const double hb = s.regime.hbar, M = s.regime.M();
    HartreeHartree hh(g, s.V);
    auto traj = hh.evolve(s.state, s.time.T, s.time.dt, s.time.sample_every);

    const auto n = static_cast<Eigen::Index>(g.size());
    Eigen::MatrixXcd X = Eigen::MatrixXcd::Zero(n, n);
    const double center = g.origin() + 0.5 * g.length();
    for (Eigen::Index i = 0; i < n; ++i) X(i, i) = g.position(static_cast<std::size_t>(i))[0] - center;
    const Eigen::MatrixXcd P = momentum_matrix(g, hb);
    std::vector<Eigen::MatrixXcd> E;
    for (int a : p.modes) {
        Eigen::MatrixXcd D = Eigen::MatrixXcd::Zero(n, n);
        for (Eigen::Index i = 0; i < n; ++i)
            D(i, i) = std::polar(1.0, g.dk() * a * (g.position(static_cast<std::size_t>(i))[0] - g.origin()));
        E.push_back(D);
    }

    Table table;
    table.add("t", traj.times);
    std::vector<double> cx, cp;
    std::vector<std::vector<double>> cxi(p.modes.size());
    for (const auto& st : traj.states) {
        const Eigen::MatrixXcd W = to_dense(st.omega, hb).op();
        cx.push_back(commutator_trace_norm(X, W));
        cp.push_back(commutator_trace_norm(P, W));
        for (std::size_t m = 0; m < E.size(); ++m) cxi[m].push_back(commutator_trace_norm(E[m], W));
    }
    table.add("comm_x", cx);
    table.add("comm_p", cp);
    for (std::size_t m = 0; m < E.size(); ++m) table.add("comm_xi_" + std::to_string(p.modes[m]), cxi[m]);

    // Smallest C0 with C0 exp(C0 t) M hbar <xi> above every sample (xi != 0).
    auto dominates = [&](double C0) {
        for (std::size_t m = 0; m < E.size(); ++m) {
            const double xi = g.dk() * p.modes[m];
            if (p.modes[m] == 0) continue;
            for (std::size_t k = 0; k < traj.times.size(); ++k)
                if (C0 * std::exp(C0 * traj.times[k]) * M * hb * std::sqrt(1.0 + xi * xi) < cxi[m][k]) return false;
        }
        return true;
    };
    double lo = 0.0, hi = 1.0;
    while (!dominates(hi) && hi < 1e6) hi *= 2.0;
    for (int it = 0; it < 100 && dominates(hi) && hi - lo > 1e-12 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        (dominates(mid) ? hi : lo) = mid;
    }
    rep.metrics["fitted_C0"] = dominates(hi) ? hi : -1.0;
    rep.metrics["initial"] = {{"comm_x", cx.front()}, {"comm_p", cp.front()}};
    // Initial-data semiclassical scales M sqrt(hbar / M) (d = 1).
    rep.metrics["reference_scale"] = M * std::sqrt(hb / M);
    for (std::size_t m = 0; m < E.size(); ++m)
        if (p.modes[m] == 0 && p.zero_mode_tol >= 0.0)
            rep.at_most("zero_mode", "xi = 0 commutes", *std::max_element(cxi[m].begin(), cxi[m].end()),
                        p.zero_mode_tol);
    rep.tables["commutators"] = table;
    rep.wall_seconds = clock.seconds();
    return rep;
}

// ---------------------------------------------------------------------------
// meanfield-smallN: exact many-body dynamics against Hartree-Hartree for a
// boson-number sweep at lambda = lambda_N / N, plus a lambda = 0 control.

struct MeanFieldPlan {
    SpectralGrid grid;
    PotentialSpec V;
    long fermions = 1;
    double hbar = 1.0, mass_fermion = 1.0, mass_boson = 1.0, lambda_N = 0.0;
    std::vector<long> bosons;
    json orbitals, phi;
    std::uint64_t seed = 0;
    TimeConfig time;
    double envelope_C = 0.0;
    double initial_error = 0.0, control_error = 0.0;
};

inline MeanFieldPlan plan_meanfield(const Node& root) {
    root.only({"experiment", "seed", "output", "grid", "family", "potential", "initial", "time", "thresholds"});
    MeanFieldPlan p;
    p.grid = parse_grid(root.sub("grid"), 16);
    p.V = parse_potential(root.sub("potential"));
    auto fam = root.sub("family");
    fam.only({"fermions", "hbar", "mass_fermion", "mass_boson", "lambda_times_N", "bosons", "envelope_C"});
    p.fermions = fam.get<long>("fermions");
    p.hbar = fam.positive("hbar");
    p.mass_fermion = fam.positive("mass_fermion");
    p.mass_boson = fam.positive("mass_boson");
    p.lambda_N = fam.nonnegative("lambda_times_N");
    p.bosons = fam.list<long>("bosons", 2);
    if (fam.has("envelope_C")) p.envelope_C = fam.positive("envelope_C");
    if (p.fermions < 1) fam.fail("'fermions' must be positive");
    for (long N : p.bosons) {
        if (N < 1) fam.fail("boson counts must be positive");
        try {
            ManyBodyState::check_shape(p.grid, static_cast<int>(p.fermions), static_cast<int>(N));
        } catch (const BudgetExceeded& e) {
            fam.fail(e.what());
        }
    }
    auto init = root.sub("initial");
    init.only({"orbitals", "phi"});
    p.seed = root.get<std::uint64_t>("seed", 0);
    parse_orbitals(init.sub("orbitals"), p.grid, static_cast<int>(p.fermions), p.seed);
    parse_phi(init.sub("phi"), p.grid);
    p.orbitals = init.raw().at("orbitals");
    p.phi = init.raw().at("phi");
    p.time = parse_time(root.sub("time"));
    auto th = root.sub("thresholds");
    th.only({"initial_error", "control_error"});
    p.initial_error = th.nonnegative("initial_error");
    p.control_error = th.nonnegative("control_error");
    return p;
}

inline MeanFieldErrors meanfield_errors(const MeanFieldPlan& p, long N, double lambda) {
    const auto orb = parse_orbitals(Node(p.orbitals, "initial.orbitals"), p.grid, static_cast<int>(p.fermions), p.seed);
    const Field phi = parse_phi(Node(p.phi, "initial.phi"), p.grid);
    const auto r = ScalingRegime::custom(lambda, p.hbar, p.mass_fermion, p.mass_boson, N, p.fermions, 1);
    ManyBodyEvolution mb(p.grid, static_cast<int>(p.fermions), static_cast<int>(N), r, p.V);
    const auto psi = mb.evolve(initial_state(orb, phi, static_cast<int>(N)), p.time.T, p.time.dt, p.time.sample_every);
    HartreeHartree hh(p.grid, p.V);
    const auto mf = hh.evolve(HHState(DensityMatrix::zero_temperature(orb), BosonField(phi), r), p.time.T, p.time.dt,
                              p.time.sample_every);
    return theorem1_errors(psi, mf, p.envelope_C);
}

inline RunReport run_meanfield(const MeanFieldPlan& p) {
    Stopwatch clock;
    RunReport rep;
    json runs = json::array();
    std::vector<double> finalF, finalB;
    double initial = 0.0, control = 0.0;
    for (long N : p.bosons) {
        const auto e = meanfield_errors(p, N, p.lambda_N / static_cast<double>(N));
        const auto c = meanfield_errors(p, N, 0.0);
        initial = std::max({initial, e.err_fermion.front(), e.err_boson.front()});
        for (std::size_t k = 0; k < c.t.size(); ++k) control = std::max({control, c.err_fermion[k], c.err_boson[k]});
        finalF.push_back(e.err_fermion.back());
        finalB.push_back(e.err_boson.back());
        runs.push_back({{"N", N},
                        {"lambda", p.lambda_N / static_cast<double>(N)},
                        {"fitted_C", e.fitted_C},
                        {"final_errF", e.err_fermion.back()},
                        {"final_errB", e.err_boson.back()}});
        Table t;
        t.add("t", e.t);
        t.add("errF", e.err_fermion);
        t.add("errB", e.err_boson);
        t.add("envelopeF", e.envelope_fermion);
        t.add("envelopeB", e.envelope_boson);
        rep.tables["errors_N" + std::to_string(N)] = t;
    }
    rep.metrics["runs"] = runs;
    rep.metrics["T"] = p.time.T;
    rep.at_most("initial_error", "errors vanish at t = 0 for product data", initial, p.initial_error);
    rep.at_most("control_error", "lambda = 0 control is exact", control, p.control_error);
    bool decF = true, decB = true;
    for (std::size_t k = 1; k < p.bosons.size(); ++k) {
        const bool up = p.bosons[k] > p.bosons[k - 1];
        decF = decF && (up ? finalF[k] < finalF[k - 1] : finalF[k] > finalF[k - 1]);
        decB = decB && (up ? finalB[k] < finalB[k - 1] : finalB[k] > finalB[k - 1]);
    }
    rep.holds("fermion_error_decreasing_in_N", "errF strictly decreasing in N at final time", decF);
    rep.holds("boson_error_decreasing_in_N", "errB strictly decreasing in N at final time", decB);
    rep.wall_seconds = clock.seconds();
    return rep;
}

}  // namespace bflab
