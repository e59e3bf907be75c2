#include <gtest/gtest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/bessel.hpp>

#include <cmath>
#include <numbers>

#include "normsolve/grid.hpp"

using namespace normsolve;
constexpr double kPi = std::numbers::pi;

TEST(RadialGrid, VolumeMatchesBallFormula) {
    auto g3 = make_radial_grid(3, 1.0, 1024);
    Field one3 = make_field(g3, [](double) { return 1.0; });
    EXPECT_NEAR(integrate(*g3, one3, 1.0) / (4.0 * kPi / 3.0), 1.0, 1e-4);

    auto g4 = make_radial_grid(4, 1.0, 1024);
    Field one4 = make_field(g4, [](double) { return 1.0; });
    EXPECT_NEAR(integrate(*g4, one4, 1.0) / (kPi * kPi / 2.0), 1.0, 1e-4);
}

TEST(RadialGrid, SpacingAndPositiveWeights) {
    auto g = make_radial_grid(3, 2.0, 512);
    EXPECT_DOUBLE_EQ(g->spacing(), 2.0 / 512);
    EXPECT_DOUBLE_EQ(g->nodes().front(), 1.0 / 512);
    EXPECT_LT(g->nodes().back(), 2.0);
    for (double w : g->weights()) EXPECT_GT(w, 0.0);
}

TEST(RadialGrid, RejectsInvalidConstruction) {
    EXPECT_THROW(make_radial_grid(2, 1.0, 128), Error);
    EXPECT_THROW(make_radial_grid(3, 1.0, 15), Error);
    EXPECT_THROW(make_radial_grid(3, 0.0, 128), Error);
    EXPECT_THROW(make_radial_grid(3, -1.0, 128), Error);
}

TEST(RadialGrid, MonomialQuadratureIsSecondOrder) {
    for (int dim : {3, 4, 5}) {
        for (int k : {0, 1, 2}) {
            double prev = 0.0;
            for (std::size_t n : {256u, 512u, 1024u}) {
                auto g = make_radial_grid(dim, 1.0, n);
                Field f = make_field(g, [k](double r) { return std::pow(r, k); });
                const double exact = g->sphere_area() / (dim + k);
                const double err = std::abs(integrate(*g, f, 1.0) - exact);
                EXPECT_LT(err / exact, 2.0 / (double(n) * n)) << "dim " << dim << " k " << k;
                if (prev > 1e-14) {
                    EXPECT_NEAR(prev / err, 4.0, 0.3);
                }
                prev = err;
            }
        }
    }
}

TEST(RadialGrid, BubbleCriticalNormMatchesAdaptiveQuadrature) {
    const double R = 50.0;
    auto g = make_radial_grid(3, R, 16384);
    Field f = make_field(g, [](double r) { return 1.0 / std::sqrt(1.0 + r * r); });
    auto integrand = [](double r) { return 4.0 * kPi * r * r / std::pow(1.0 + r * r, 3); };
    const double oracle =
        boost::math::quadrature::gauss_kronrod<double, 61>::integrate(integrand, 0.0, R, 15, 1e-14);
    EXPECT_NEAR(integrate(*g, f, 6.0) / oracle, 1.0, 1e-5);
}

TEST(RadialGrid, IntegrateRejectsForeignField) {
    auto g1 = make_radial_grid(3, 1.0, 64);
    auto g2 = make_radial_grid(3, 1.0, 64);
    Field f(g2);
    EXPECT_THROW(integrate(*g1, f, 2.0), Error);
    EXPECT_THROW(apply_laplacian(*g1, f), Error);
    EXPECT_THROW(inner(Field(g1), f), Error);
}

TEST(Laplacian, ZeroMapsToZero) {
    auto g = make_radial_grid(4, 1.0, 128);
    Field z(g);
    for (double v : apply_laplacian(*g, z).values) EXPECT_EQ(v, 0.0);
}

TEST(Laplacian, QuadraticProfileInThreeDimensions) {
    auto g = make_radial_grid(3, 1.0, 512);
    Field f = make_field(g, [](double r) { return 1.0 - r * r; });
    Field lap = apply_laplacian(*g, f);
    // The last node couples to the half-cell boundary face and is excluded.
    for (std::size_t i = 0; i + 1 < lap.size(); ++i) EXPECT_NEAR(-lap[i], 6.0, 1e-8) << i;
}

TEST(Laplacian, SymmetricInWeightedInnerProduct) {
    auto g = make_radial_grid(5, 1.5, 2048);
    Field f = make_field(g, [](double r) { return std::exp(-r * r) * (2.25 - r * r); });
    Field h = make_field(g, [](double r) { return std::cos(r) * (1.5 - r); });
    const double lhs = inner(apply_laplacian(*g, f), h);
    const double rhs = inner(f, apply_laplacian(*g, h));
    EXPECT_NEAR(lhs, rhs, 1e-9 * std::abs(lhs));
    EXPECT_NEAR(-lhs, dirichlet_form(f, h), 1e-9 * std::abs(lhs));
}

TEST(Laplacian, EigenRelationAtHighResolution) {
    auto g = make_radial_grid(3, 1.0, 4096);
    const auto eig = principal_eigenpair(g);
    Field lap = apply_laplacian(*g, eig.phi1);
    Field res = combine(-1.0, lap, -eig.lambda1, eig.phi1);
    EXPECT_LT(l2_norm(res), 1e-6);
}

TEST(Eigenpair, UnitBallInThreeDimensions) {
    auto g = make_radial_grid(3, 1.0, 4096);
    const auto eig = principal_eigenpair(g);
    EXPECT_NEAR(eig.lambda1, kPi * kPi, 1e-3);
    EXPECT_NEAR(l2_norm(eig.phi1), 1.0, 1e-12);
    EXPECT_NEAR(dirichlet_form(eig.phi1), eig.lambda1, 1e-10 * eig.lambda1);
    EXPECT_NEAR(integrate(*g, eig.phi1, 2.0), 1.0, 1e-10);
    EXPECT_LT(eig.residual, 1e-10);
}

TEST(Eigenpair, ScalesWithInverseSquareRadius) {
    const auto e1 = principal_eigenpair(make_radial_grid(3, 1.0, 2048));
    const auto e2 = principal_eigenpair(make_radial_grid(3, 2.0, 2048));
    EXPECT_NEAR(e2.lambda1, e1.lambda1 / 4.0, 1e-10);
    EXPECT_NEAR(e2.lambda1, kPi * kPi / 4.0, 1e-3);
}

TEST(Eigenpair, FiveDimensionalRichardsonMatchesBesselZero) {
    double lam[3];
    int k = 0;
    for (std::size_t n : {1024u, 2048u, 4096u}) {
        lam[k++] = principal_eigenpair(make_radial_grid(5, 1.0, n)).lambda1;
    }
    const double ratio = (lam[0] - lam[1]) / (lam[1] - lam[2]);
    EXPECT_NEAR(ratio, 4.0, 0.05);
    const double extrapolated = lam[2] + (lam[2] - lam[1]) / 3.0;
    const double zero = boost::math::cyl_bessel_j_zero(1.5, 1);
    EXPECT_NEAR(extrapolated, zero * zero, 1e-8 * zero * zero);
}

TEST(Eigenpair, SecondOrderConvergence) {
    for (int dim : {3, 4}) {
        const double a = principal_eigenpair(make_radial_grid(dim, 1.0, 1024)).lambda1;
        const double b = principal_eigenpair(make_radial_grid(dim, 1.0, 2048)).lambda1;
        const double c = principal_eigenpair(make_radial_grid(dim, 1.0, 4096)).lambda1;
        EXPECT_NEAR((a - b) / (b - c), 4.0, 0.3) << "dim " << dim;
    }
}

TEST(Eigenpair, StrictlyPositiveEigenfunction) {
    for (int dim : {3, 4, 6}) {
        for (double radius : {0.5, 1.0, 3.0}) {
            for (std::size_t n : {16u, 300u, 2048u}) {
                const auto eig = principal_eigenpair(make_radial_grid(dim, radius, n));
                for (double v : eig.phi1.values) ASSERT_GT(v, 0.0);
            }
        }
    }
}
