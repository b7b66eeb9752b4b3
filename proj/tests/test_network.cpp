#include <doctest.h>

#include <random>

#include "test_support.hpp"
#include "zipgrid/network.hpp"

using namespace zipgrid;
namespace ts = zipgrid::testing;

namespace {

Network ring4() {
    std::vector<DguParams> dgus(4, DguParams{0.01, 1e-3, 1e-3});
    std::vector<LineParams> lines = {LineParams{0.07, 2.1e-6, 0, 1},
                                     LineParams{0.05, 2.3e-6, 1, 2},
                                     LineParams{0.08, 2.0e-6, 2, 3},
                                     LineParams{0.06, 1.8e-6, 3, 0}};
    std::vector<ZipLoad> loads(4);
    return Network::build(dgus, lines, loads);
}

} // namespace

TEST_CASE("incidence matrix of the four-node ring") {
    const Network net = ring4();
    CHECK(net.n() == 4);
    CHECK(net.m() == 4);
    const MatrixXd& B = net.incidence();
    for (int k = 0; k < 4; ++k) CHECK(B.col(k).sum() == doctest::Approx(0.0));
    CHECK(Eigen::FullPivLU<MatrixXd>(B).rank() == 3);
}

TEST_CASE("degenerate graphs") {
    SUBCASE("single node, no edges") {
        const Network net = ts::single_node(0.01, 1e-3, 1e-3, ZipLoad{});
        CHECK(net.incidence().rows() == 1);
        CHECK(net.incidence().cols() == 0);
    }
    SUBCASE("three-node path has rank n-1") {
        const Network net = Network::build(
            {DguParams{0.01, 1e-3, 1e-3}, DguParams{0.01, 1e-3, 1e-3},
             DguParams{0.01, 1e-3, 1e-3}},
            {LineParams{0.1, 1e-6, 0, 1}, LineParams{0.1, 1e-6, 1, 2}},
            std::vector<ZipLoad>(3));
        CHECK(Eigen::FullPivLU<MatrixXd>(net.incidence()).rank() == 2);
    }
}

TEST_CASE("build_network rejects invalid inputs") {
    std::vector<DguParams> dgus(2, DguParams{0.01, 1e-3, 1e-3});
    std::vector<ZipLoad> loads(2);
    CHECK_THROWS_AS(Network::build(dgus, {}, loads), DisconnectedGraph);
    CHECK_THROWS_AS(
        Network::build(dgus, {LineParams{0.1, 1e-6, 0, 0}}, loads), SelfLoop);
    CHECK_THROWS_AS(
        Network::build(dgus, {LineParams{-0.1, 1e-6, 0, 1}}, loads),
        NonPositiveParameter);
    CHECK_THROWS_AS(
        Network::build({DguParams{0.0, 1e-3, 1e-3}, dgus[1]},
                       {LineParams{0.1, 1e-6, 0, 1}}, loads),
        NonPositiveParameter);
    CHECK_THROWS_AS(
        Network::build(dgus, {LineParams{0.1, 1e-6, 0, 1}},
                       {ZipLoad{-0.1, 0.0, 0.0}, ZipLoad{}}),
        NonPositiveParameter);
}

TEST_CASE("zip load current") {
    CHECK(zip_current(ZipLoad{0.04, 10.0, 5000.0}, 380.0) ==
          doctest::Approx(38.357894736842105).epsilon(1e-12));
    CHECK(zip_current(ZipLoad{0.04, 10.0, 5000.0}, 380.0) ==
          doctest::Approx(38.36).epsilon(3e-4)); // reported value
    CHECK(zip_current(ZipLoad{0.04, 10.0, 6500.0}, 380.0) ==
          doctest::Approx(42.31).epsilon(3e-4));
    CHECK(zip_current(ZipLoad{0.0, 0.0, 7600.0}, 380.0) == 7600.0 / 380.0);
    CHECK_THROWS_AS(zip_current(ZipLoad{0.04, 10.0, 5000.0}, 0.0),
                    NonPositiveVoltage);
    CHECK_THROWS_AS(zip_current(ZipLoad{0.04, 10.0, 5000.0}, -5.0),
                    NonPositiveVoltage);
}

TEST_CASE("zip current slope sign matches Z_inv - P/v^2") {
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> vd(1.0, 1000.0);
    const ZipLoad pure_p{0.0, 0.0, 5000.0};
    const ZipLoad mixed{0.04, 10.0, 5000.0};
    for (int k = 0; k < 200; ++k) {
        const double v = vd(rng);
        const double h = 1e-4 * v;
        for (const ZipLoad& load : {pure_p, mixed}) {
            const double slope =
                (zip_current(load, v + h) - zip_current(load, v - h)) / (2 * h);
            const double predicted = load.Z_inv - load.P_const / (v * v);
            CHECK(slope == doctest::Approx(predicted).epsilon(1e-6));
            if (load.Z_inv == 0.0) CHECK(slope < 0.0);
            if (load.Z_inv * v * v > load.P_const) CHECK(slope > 0.0);
        }
    }
}

TEST_CASE("open-loop vector field vanishes at the worked equilibrium") {
    const Network net = ts::illustrative_node(5000.0);
    const double i_bar = zip_current(net.loads()[0], 380.0);
    NetworkState s;
    s.I_s = VectorXd::Constant(1, i_bar);
    s.I_t = VectorXd(0);
    s.V = VectorXd::Constant(1, 380.0);
    const VectorXd u = VectorXd::Constant(1, 380.0 + 0.010 * i_bar);
    const NetworkState d = open_loop_rhs(net, s, u);
    CHECK(std::abs(d.I_s[0]) < 1e-9);
    CHECK(std::abs(d.V[0]) < 1e-9);
}

TEST_CASE("open-loop rhs matches hand-expanded scalar equations, n=2 m=1") {
    const Network net = ts::two_node();
    std::mt19937 rng(42);
    for (int trial = 0; trial < 50; ++trial) {
        const NetworkState s = ts::random_state(rng, net);
        const VectorXd u = ts::random_state(rng, net).V; // arbitrary inputs
        const NetworkState d = open_loop_rhs(net, s, u);

        // Node/line equations written out one term at a time.
        const auto& n0 = net.dgus()[0];
        const auto& n1 = net.dgus()[1];
        const auto& l0 = net.loads()[0];
        const auto& l1 = net.loads()[1];
        const LineParams& ln = net.lines()[0];
        const double il0 = l0.Z_inv * s.V[0] + l0.I_const + l0.P_const / s.V[0];
        const double il1 = l1.Z_inv * s.V[1] + l1.I_const + l1.P_const / s.V[1];
        CHECK(d.I_s[0] ==
              doctest::Approx((-n0.R_s * s.I_s[0] - s.V[0] + u[0]) / n0.L_s)
                  .epsilon(1e-13));
        CHECK(d.I_s[1] ==
              doctest::Approx((-n1.R_s * s.I_s[1] - s.V[1] + u[1]) / n1.L_s)
                  .epsilon(1e-13));
        // Line 0 runs from node 0 to node 1: (B^T V)_0 = V_0 - V_1.
        CHECK(d.I_t[0] ==
              doctest::Approx((-ln.R_t * s.I_t[0] - (s.V[0] - s.V[1])) / ln.L_t)
                  .epsilon(1e-13));
        CHECK(d.V[0] ==
              doctest::Approx((s.I_s[0] + s.I_t[0] - il0) / n0.C_s)
                  .epsilon(1e-13));
        CHECK(d.V[1] ==
              doctest::Approx((s.I_s[1] - s.I_t[0] - il1) / n1.C_s)
                  .epsilon(1e-13));
    }
}

TEST_CASE("rhs is affine in u with sensitivity 1/L_s") {
    const Network net = ts::two_node();
    std::mt19937 rng(3);
    const NetworkState s = ts::random_state(rng, net);
    const VectorXd u = VectorXd::Constant(2, 380.0);
    for (int i = 0; i < 2; ++i) {
        const double h = 1e-3;
        VectorXd up = u, um = u;
        up[i] += h;
        um[i] -= h;
        const double fd =
            (open_loop_rhs(net, s, up).I_s[i] - open_loop_rhs(net, s, um).I_s[i]) /
            (2 * h);
        CHECK(fd == doctest::Approx(1.0 / net.L_s()[i]).epsilon(1e-8));
    }
}

TEST_CASE("equivalent conductances at the reference voltage") {
    const VectorXd V = VectorXd::Constant(1, 380.0);
    const VectorXd Pi = VectorXd::Constant(1, 10000.0);
    SUBCASE("5 kW P component") {
        const Network net = ts::illustrative_node(5000.0);
        const ConductanceMatrices g = conductance_matrices(net, V, Pi, V);
        CHECK(std::abs(g.G_B[0] - 0.0054) < 1e-4);
        CHECK(g.G_K[0] == doctest::Approx(g.G_B[0]).epsilon(1e-12));
    }
    SUBCASE("6.5 kW P component") {
        const Network net = ts::illustrative_node(6500.0);
        const ConductanceMatrices g = conductance_matrices(net, V, Pi, V);
        CHECK(std::abs(g.G_B[0] - (-0.0050)) < 1e-4);
    }
    SUBCASE("Pi equal to the P loads cancels exactly") {
        const Network net = ts::illustrative_node(5000.0);
        const ConductanceMatrices g =
            conductance_matrices(net, V, VectorXd::Constant(1, 5000.0), V);
        CHECK(g.G_Pi[0] == net.Z_inv()[0]);
    }
}

TEST_CASE("G_Pi stays nonnegative whenever Pi dominates the P loads") {
    std::mt19937 rng(11);
    const Network net = ts::two_node();
    const VectorXd Pi =
        net.P_const() + VectorXd::Constant(2, 1.0); // Pi >= [P*]
    std::uniform_real_distribution<double> vd(std::log(1e-3), std::log(1e6));
    const VectorXd V_star = VectorXd::Constant(2, 380.0);
    for (int k = 0; k < 10000; ++k) {
        VectorXd V(2);
        V << std::exp(vd(rng)), std::exp(vd(rng));
        const ConductanceMatrices g = conductance_matrices(net, V, Pi, V_star);
        CHECK(g.G_Pi.minCoeff() >= 0.0);
    }
}

TEST_CASE("results are invariant under edge reorientation") {
    const Network net = ring4();
    std::vector<LineParams> flipped = net.lines();
    std::swap(flipped[1].from, flipped[1].to);
    std::swap(flipped[3].from, flipped[3].to);
    const Network net2 = Network::build(net.dgus(), flipped, net.loads());

    std::mt19937 rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        const NetworkState s = ts::random_state(rng, net);
        NetworkState s2 = s;
        s2.I_t[1] = -s.I_t[1]; // flipped lines carry the negated current
        s2.I_t[3] = -s.I_t[3];
        const VectorXd u = VectorXd::Constant(4, 380.0);
        const NetworkState d = open_loop_rhs(net, s, u);
        const NetworkState d2 = open_loop_rhs(net2, s2, u);
        CHECK((d.I_s - d2.I_s).lpNorm<Eigen::Infinity>() < 1e-12);
        CHECK((d.V - d2.V).lpNorm<Eigen::Infinity>() < 1e-12);
        CHECK(std::abs(d.I_t[1] + d2.I_t[1]) < 1e-9);
        CHECK(std::abs(d.I_t[3] + d2.I_t[3]) < 1e-9);
        CHECK(std::abs(d.I_t[0] - d2.I_t[0]) < 1e-9);
    }
}

TEST_CASE("incidence rank on random connected networks") {
    std::mt19937 rng(17);
    for (int trial = 0; trial < 10; ++trial) {
        const Network net = ts::random_network(rng, 2 + trial);
        CHECK((VectorXd::Ones(net.n()).transpose() * net.incidence())
                  .cwiseAbs()
                  .maxCoeff() == 0.0);
        CHECK(Eigen::FullPivLU<MatrixXd>(net.incidence()).rank() ==
              net.n() - 1);
    }
}

TEST_CASE("voltage floor guards evaluation") {
    const Network net = ts::illustrative_node(5000.0);
    NetworkState s;
    s.I_s = VectorXd::Zero(1);
    s.I_t = VectorXd(0);
    s.V = VectorXd::Constant(1, 1e-7);
    CHECK_THROWS_AS(open_loop_rhs(net, s, VectorXd::Zero(1)),
                    NonPositiveVoltage);
    CHECK_FALSE(s.in_domain());
}
