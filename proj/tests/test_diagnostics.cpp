#include <gtest/gtest.h>

#include <cmath>

#include "normsolve/diagnostics.hpp"
#include "normsolve/minimizer.hpp"

using namespace normsolve;

namespace {

struct Case {
    GridPtr g;
    EigenPair eig;
    ThresholdSet t;
};

Case make_case(int dim, std::size_t n) {
    auto g = make_radial_grid(dim, 1.0, n);
    auto eig = principal_eigenpair(g);
    auto t = make_thresholds(g, eig.lambda1);
    return Case{g, eig, t};
}

const Case& ball3() {
    static const Case c = make_case(3, 4096);
    return c;
}

SolutionRecord eigen_record(const Case& c) {
    SolutionRecord rec;
    rec.u = c.eig.phi1;
    rec.lambda = c.eig.lambda1;
    rec.exponent_p = linear_mode(c.g->dim()).exponent_p;
    finalize_record(rec);
    return rec;
}

}  // namespace

TEST(Pohozaev, EigenpairSatisfiesIdentity) {
    const auto& c = ball3();
    EXPECT_LT(pohozaev_residual(eigen_record(c), *c.g), 1e-4);
}

TEST(Pohozaev, SecondOrderUnderRefinement) {
    double prev = 0.0;
    for (std::size_t n : {512u, 1024u, 2048u}) {
        const auto c = make_case(3, n);
        const double r = pohozaev_residual(eigen_record(c), *c.g);
        if (prev > 0.0) {
            EXPECT_NEAR(prev / r, 4.0, 0.3) << n;
        }
        prev = r;
    }
}

TEST(Pohozaev, RefinementBeatsFlowByTenfold) {
    const auto& c = ball3();
    const auto params = make_energy_params(3, c.t.mu_star / 4.0);
    FlowOptions loose;
    loose.tol = 1e-5;
    const auto flow = solve_local_min(params, c.t, c.eig.phi1, loose);
    const auto refined = newton_refine(flow);
    const double rf = pohozaev_residual(flow, *c.g);
    const double rn = pohozaev_residual(refined, *c.g);
    EXPECT_LT(rn, 1e-4);
    EXPECT_LE(10.0 * rn, rf);
}

TEST(Pohozaev, ZeroMultiplierIsDegenerate) {
    const auto& c = ball3();
    auto rec = eigen_record(c);
    rec.lambda = 0.0;
    EXPECT_THROW(pohozaev_residual(rec, *c.g), Error);
    const auto other = make_radial_grid(3, 1.0, 64);
    EXPECT_THROW(pohozaev_residual(eigen_record(c), *other), Error);
}

TEST(Certify, LocalMinimizerPassesAllChecks) {
    for (int dim : {3, 4, 5}) {
        const auto c = make_case(dim, 2048);
        const auto params = make_energy_params(dim, c.t.mu_star / 4.0);
        const auto rec = newton_refine(solve_local_min(params, c.t, c.eig.phi1));
        const auto rep = certify(rec, c.t);
        EXPECT_EQ(rep.lambda_sign, LambdaSign::positive);
        EXPECT_TRUE(rep.energy_floor_ok);
        EXPECT_TRUE(rep.grad_cap_ok);
        EXPECT_TRUE(rep.lemma_flags_ok());
        EXPECT_TRUE(rep.level_ok);
        EXPECT_EQ(rep.region, Region::inside_B);
        EXPECT_LT(rep.energy, rep.quantum);
        EXPECT_GE(rep.energy, c.t.lambda1 / dim);
        EXPECT_GE(rep.pohozaev_residual_rel, 0.0);
        EXPECT_TRUE(std::isnan(rep.quantum_gap));
    }
}

TEST(Certify, IsPure) {
    const auto& c = ball3();
    const auto params = make_energy_params(3, c.t.mu_star / 4.0);
    const auto rec = solve_local_min(params, c.t, c.eig.phi1);
    const auto a = certify(rec, c.t, {0.5, 1.0, 1e-6});
    const auto b = certify(rec, c.t, {0.5, 1.0, 1e-6});
    EXPECT_EQ(a.pohozaev_residual_rel, b.pohozaev_residual_rel);
    EXPECT_EQ(a.energy, b.energy);
    EXPECT_EQ(a.level_ok, b.level_ok);
    EXPECT_EQ(a.quantum_margin, b.quantum_margin);
}

TEST(Certify, FlagsNegativeMultiplier) {
    const auto& c = ball3();
    auto rec = eigen_record(c);
    rec.lambda = -1.0;
    const auto rep = certify(rec, c.t);
    EXPECT_EQ(rep.lambda_sign, LambdaSign::nonpositive);
    EXPECT_FALSE(rep.lemma_flags_ok());
}

TEST(Concentration, BubbleArcIsFlagged) {
    const auto c = make_case(5, 4096);
    const auto params = make_energy_params(5, c.t.mu_star / 4.0);
    std::vector<Field> arc;
    const std::vector<double> eps{0.2, 0.1, 0.05, 0.02};
    for (double e : eps) arc.push_back(normalized_bubble(c.g, e, default_cutoff(1.0)));
    const auto rep = detect_concentration(arc, params, c.t);
    EXPECT_TRUE(rep.flagged);
    EXPECT_GE(rep.gradient_growth, rep.threshold);
    EXPECT_EQ(rep.scale, rep.scales.back());
    for (std::size_t k = 1; k < eps.size(); ++k) {
        const double ratio = (rep.scales[k] / eps[k]) / (rep.scales[0] / eps[0]);
        EXPECT_NEAR(ratio, 1.0, 0.1) << eps[k];
    }
}

TEST(Concentration, ConstantListIsNotFlagged) {
    const auto& c = ball3();
    const auto params = make_energy_params(3, c.t.mu_star / 4.0);
    std::vector<Field> same(4, normalized_bubble(c.g, 0.05, default_cutoff(1.0)));
    const auto rep = detect_concentration(same, params, c.t);
    EXPECT_FALSE(rep.flagged);
    EXPECT_EQ(rep.gradient_growth, 0.0);
}

TEST(Concentration, MinimizerFlowTailIsNotFlagged) {
    const auto& c = ball3();
    const auto params = make_energy_params(3, c.t.mu_star / 4.0);
    FlowOptions opts;
    opts.keep_tail = 10;
    const auto rec = solve_local_min(params, c.t, c.eig.phi1, opts);
    ASSERT_GE(rec.tail.size(), 3u);
    EXPECT_FALSE(detect_concentration(rec.tail, params, c.t).flagged);
}

TEST(Concentration, NeedsThreeIterates) {
    const auto& c = ball3();
    const auto params = make_energy_params(3, 0.1);
    std::vector<Field> two(2, c.eig.phi1);
    EXPECT_THROW(detect_concentration(two, params, c.t), Error);
}
