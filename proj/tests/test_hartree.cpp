#include <gtest/gtest.h>

#include "bflab/dense.hpp"
#include "bflab/hartree.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace bflab;

namespace {

Eigen::MatrixXcd omega_operator(const DensityMatrix& w) { return to_dense(w).op(); }

Eigen::VectorXcd as_vector(const Field& f) {
    return Eigen::Map<const Eigen::VectorXcd>(f.values.data(), static_cast<Eigen::Index>(f.size()));
}

HHState gaussian_state(const SpectralGrid& g, const ScalingRegime& r, int m) {
    const double L = g.length();
    auto orb = fixtures::packet_orbitals(g, m, 0.45 * L, 0.08 * L);
    auto phi = fixtures::packet(g, {0.55 * L, 0, 0}, {0.5, 0, 0}, 0.1 * L);
    return HHState(DensityMatrix::zero_temperature(orb), BosonField(phi), r);
}

}  // namespace

TEST(Densities, SingleOrbital) {
    auto g = make_grid(1, 32, 6.0);
    auto phi = fixtures::packet(g, {3.0, 0, 0}, {0.4, 0, 0}, 0.7);
    auto rho = fermion_density(DensityMatrix::zero_temperature({phi}));
    for (std::size_t i = 0; i < g.size(); ++i) EXPECT_NEAR(rho[i], std::norm(phi[i]), 1e-15);
    EXPECT_NEAR(integrate(rho), 1.0, 1e-10);
}

TEST(Densities, PlaneWavesAreUniform) {
    auto g = make_grid(1, 16, 2.0 * pi);
    const double s = 1.0 / std::sqrt(2.0 * pi);
    auto a = sample_field(g, [&](auto x) { return s * std::polar(1.0, x[0]); });
    auto b = sample_field(g, [&](auto x) { return s * std::polar(1.0, -2.0 * x[0]); });
    auto rho = fermion_density(DensityMatrix::zero_temperature({a, b}));
    for (double v : rho.values) EXPECT_NEAR(v, 1.0 / (2.0 * pi), 1e-14);
    auto rb = boson_density(BosonField(a));
    for (double v : rb.values) EXPECT_NEAR(v, 1.0 / (2.0 * pi), 1e-14);
}

TEST(Densities, RandomStateMatchesKernelDiagonal) {
    std::mt19937_64 rng(21);
    auto g = make_grid(1, 24, 3.0);
    auto orb = fixtures::random_orbitals(g, 3, rng);
    DensityMatrix w(orb, {1.0, 0.6, 0.4});
    EXPECT_NEAR(w.trace(), 2.0, 1e-14);
    auto rho = fermion_density(w);
    // Independent kernel built by explicit triple loop.
    for (std::size_t i = 0; i < g.size(); ++i) {
        double k = 0.0;
        for (int j = 0; j < 3; ++j) k += w.occupations()[j] * std::norm(orb[j][i]);
        EXPECT_NEAR(rho[i], k / 2.0, 1e-10);
        EXPECT_GE(rho[i], 0.0);
    }
    EXPECT_NEAR(integrate(rho), 1.0, 1e-10);

    std::normal_distribution<double> nd;
    Field phi(g);
    for (auto& v : phi.values) v = {nd(rng), nd(rng)};
    BosonField b = BosonField::normalize(phi);
    auto rb = boson_density(b);
    for (std::size_t i = 0; i < g.size(); ++i) {
        const cplx v = b.phi()[i];
        EXPECT_NEAR(rb[i], v.real() * v.real() + v.imag() * v.imag(), 1e-15);
    }
    EXPECT_NEAR(integrate(rb), 1.0, 1e-10);
}

TEST(DensityMatrix, Validation) {
    std::mt19937_64 rng(2);
    auto g = make_grid(1, 16, 2.0);
    auto orb = fixtures::random_orbitals(g, 2, rng);
    EXPECT_THROW(DensityMatrix(orb, {1.0, 1.2}), InvalidArgument);
    auto bad = orb;
    bad[1] = bad[0];
    EXPECT_THROW(DensityMatrix::zero_temperature(bad), InvalidArgument);
    auto w = DensityMatrix::zero_temperature(orb);
    EXPECT_TRUE(w.is_projection());
    EXPECT_EQ(w.rank(), 2u);
    EXPECT_LE(w.idempotency_defect(), 1e-12);
    Field unnorm = orb[0];
    for (auto& v : unnorm.values) v *= 2.0;
    EXPECT_THROW(BosonField{unnorm}, InvalidArgument);
}

TEST(DensityMatrix, FromOperatorRecoversEnsemble) {
    std::mt19937_64 rng(4);
    auto g = make_grid(1, 16, 2.0);
    auto orb = fixtures::random_orbitals(g, 3, rng);
    DensityMatrix w(orb, {1.0, 0.7, 0.2});
    auto back = DensityMatrix::from_operator(g, omega_operator(w));
    ASSERT_EQ(back.rank(), 3u);
    EXPECT_NEAR(back.occupations()[0], 1.0, 1e-12);
    EXPECT_NEAR(back.occupations()[1], 0.7, 1e-12);
    EXPECT_NEAR(back.occupations()[2], 0.2, 1e-12);
    EXPECT_LE((omega_operator(back) - omega_operator(w)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(HHStep, ZeroPotentialIsFreeFlow) {
    auto g = make_grid(1, 32, 8.0);
    auto s0 = gaussian_state(g, ScalingRegime::microscopic(2, 1), 2);
    HartreeHartree hh(g, PotentialSpec::zero());
    auto traj = hh.evolve(s0, 0.3, 0.01);
    const auto& s = traj.states.back();
    EXPECT_NEAR(s.t, 0.3, 1e-12);
    for (int j = 0; j < 2; ++j) {
        auto expect = kinetic_phase(s0.omega.orbitals()[j], 0.3, 2.0, 1.0);
        EXPECT_LE(l2_distance(s.omega.orbitals()[j], expect), 1e-12);
    }
    EXPECT_LE(l2_distance(s.phi.phi(), kinetic_phase(s0.phi.phi(), 0.3, 2.0, 1.0)), 1e-12);
}

TEST(HHStep, ZeroStepIsIdentity) {
    auto g = make_grid(1, 16, 4.0);
    auto s0 = gaussian_state(g, ScalingRegime::microscopic(1, 1), 1);
    auto s1 = hh_step(s0, PotentialSpec::gaussian(1.0, 0.5), 0.0);
    EXPECT_EQ(s1.phi.phi().values, s0.phi.phi().values);
    EXPECT_EQ(s1.omega.orbitals()[0].values, s0.omega.orbitals()[0].values);
    auto traj = HartreeHartree(g, PotentialSpec::gaussian(1.0, 0.5)).evolve(s0, 0.0, 0.1);
    ASSERT_EQ(traj.states.size(), 1u);
    EXPECT_THROW(HartreeHartree(g, PotentialSpec::zero()).evolve(s0, 0.25, 0.1), InvalidArgument);
}

TEST(HHStep, NormsPreservedPerStep) {
    auto g = make_grid(1, 64, 10.0);
    auto s = gaussian_state(g, ScalingRegime::custom(1.0, 1.0, 1.0, 1.0, 1, 3, 1), 3);
    HartreeHartree hh(g, PotentialSpec::gaussian(2.0, 0.8));
    for (int k = 0; k < 20; ++k) {
        auto next = hh.step(s, 0.01);
        for (int j = 0; j < 3; ++j)
            EXPECT_NEAR(l2_norm(next.omega.orbitals()[j]), l2_norm(s.omega.orbitals()[j]), 1e-12);
        EXPECT_NEAR(l2_norm(next.phi.phi()), l2_norm(s.phi.phi()), 1e-12);
        s = next;
    }
}

namespace {

struct OracleComparison {
    double omega_err;
    double phi_err;
};

OracleComparison compare_with_dense(double dt) {
    const int n = 32;
    const double L = 8.0, T = 0.5;
    auto g = make_grid(1, n, L);
    auto V = PotentialSpec::gaussian(1.0, 0.7);
    auto r = ScalingRegime::custom(1.0, 1.0, 1.0, 1.0, 1, 1, 1);
    auto s0 = gaussian_state(g, r, 1);

    oracle::DenseHH ref(n, L, V, r.lambda, r.hbar, r.mass_fermion, r.mass_boson, r.N(), r.M());
    oracle::DenseHH::State init{omega_operator(s0.omega), as_vector(s0.phi.phi())};
    auto exact = ref.evolve(init, T, 5000);

    auto s = HartreeHartree(g, V).evolve(s0, T, dt).states.back();
    const double phi_err = (as_vector(s.phi.phi()) - exact.phi).norm() * std::sqrt(g.cell_volume());
    return {oracle::trace_norm(omega_operator(s.omega) - exact.omega), phi_err};
}

}  // namespace

TEST(HHStep, MatchesDenseOracle) {
    auto c = compare_with_dense(1e-3);
    EXPECT_LE(c.omega_err, 1e-6);
    EXPECT_LE(c.phi_err, 1e-6);
}

TEST(HHStep, SecondOrderConvergence) {
    auto coarse = compare_with_dense(4e-3);
    auto fine = compare_with_dense(2e-3);
    EXPECT_GE(coarse.omega_err / fine.omega_err, 3.5);
    EXPECT_GE(coarse.phi_err / fine.phi_err, 3.5);
}

TEST(HHEnergy, PlaneWaveEigenstates) {
    auto g = make_grid(1, 16, 2.0 * pi);
    auto r = ScalingRegime::custom(0.5, 0.7, 1.5, 0.8, 3, 1, 1);
    const double s = 1.0 / std::sqrt(2.0 * pi);
    auto orb = sample_field(g, [&](auto x) { return s * std::polar(1.0, 2.0 * x[0]); });
    auto phi = sample_field(g, [&](auto x) { return s * std::polar(1.0, -3.0 * x[0]); });
    HHState st(DensityMatrix::zero_temperature({orb}), BosonField(phi), r);
    const double expected = r.hbar * r.hbar / (2 * r.mass_fermion) * 4.0 + 3.0 * r.hbar * r.hbar / (2 * r.mass_boson) * 9.0;
    EXPECT_NEAR(hh_energy(st, PotentialSpec::zero()), expected, 1e-12);
}

TEST(HHEnergy, ConstantFieldsInteractionOnly) {
    auto g = make_grid(1, 16, 3.0);
    auto r = ScalingRegime::custom(0.5, 1.0, 1.0, 1.0, 2, 1, 1);
    const double c = 1.0 / std::sqrt(3.0);
    Field flat(g);
    flat.values.assign(g.size(), cplx(c));
    HHState st(DensityMatrix::zero_temperature({flat}), BosonField(flat), r);
    for (const auto& V : {PotentialSpec::cosine(0.9, 1), PotentialSpec::gaussian(1.2, 0.4)}) {
        // lambda N M sum_x sum_y rho_F(x) V(x - y) rho_B(y) h^2 by explicit double sum.
        double acc = 0.0;
        for (int i = 0; i < 16; ++i)
            for (int j = 0; j < 16; ++j)
                acc += (c * c) * V.at({g.wrap((i - j) * g.spacing()), 0, 0}, g) * (c * c);
        acc *= g.cell_volume() * g.cell_volume() * r.lambda * r.N() * r.M();
        EXPECT_NEAR(hh_energy(st, V), acc, 1e-12);
    }
}

TEST(HHEnergy, GaugeInvariant) {
    auto g = make_grid(1, 32, 6.0);
    auto st = gaussian_state(g, ScalingRegime::microscopic(3, 1), 3);
    auto V = PotentialSpec::gaussian(1.0, 0.5);
    const double e0 = hh_energy(st, V);
    for (auto& v : st.phi.phi_mut().values) v *= std::polar(1.0, 1.234);
    EXPECT_NEAR(hh_energy(st, V), e0, 1e-12 * std::abs(e0));
}

TEST(HHEvolve, ConservationAndProjection) {
    auto g = make_grid(1, 64, 10.0);
    auto r = ScalingRegime::custom(1.0, 1.0, 1.0, 1.0, 2, 3, 1);
    auto s0 = gaussian_state(g, r, 3);
    HartreeHartree hh(g, PotentialSpec::gaussian(1.0, 0.8));
    auto traj = hh.evolve(s0, 1.0, 1e-3, 100);
    const auto& E = traj.series.at("energy");
    const auto& tr = traj.series.at("trace");
    const auto& pn = traj.series.at("phi_norm");
    for (std::size_t k = 0; k < E.size(); ++k) {
        EXPECT_LE(std::abs(E[k] - E[0]) / std::abs(E[0]), 1e-6);
        EXPECT_NEAR(tr[k], 3.0, 1e-10);
        EXPECT_NEAR(pn[k], 1.0, 1e-10);
        EXPECT_LE(traj.series.at("gram_deviation")[k], 1e-8);
    }
    EXPECT_LE(traj.states.back().omega.idempotency_defect(), 1e-7);
    EXPECT_EQ(traj.states.size(), 11u);
}

TEST(HHEvolve, ExtraMonitors) {
    auto g = make_grid(1, 16, 4.0);
    auto s0 = gaussian_state(g, ScalingRegime::microscopic(1, 1), 1);
    HartreeHartree hh(g, PotentialSpec::zero());
    auto traj = hh.evolve(s0, 0.1, 0.01, 5, {{"time", [](const HHState& s) { return s.t; }}});
    ASSERT_EQ(traj.series.at("time").size(), 3u);
    EXPECT_NEAR(traj.series.at("time")[2], 0.1, 1e-12);
}
