#ifndef ZIPGRID_TEST_SUPPORT_HPP
#define ZIPGRID_TEST_SUPPORT_HPP

#include <functional>
#include <random>
#include <string>
#include <vector>

#include "zipgrid/network.hpp"
#include "zipgrid/scenario.hpp"

namespace zipgrid::testing {

inline std::string bundled_scenario(const std::string& name) {
    return std::string(ZIPGRID_SCENARIO_DIR) + "/" + name;
}

inline Scenario load_bundled(const std::string& name) {
    return load_scenario(bundled_scenario(name));
}

inline Network single_node(double R_s, double L_s, double C_s, ZipLoad load) {
    return Network::build({DguParams{R_s, L_s, C_s}}, {}, {load});
}

// The single-DGU circuit of the worked example: 10 mOhm, 1.12 mH, 6.8 mF
// with a 0.04 S / 10 A ZIP load and a configurable P component.
inline Network illustrative_node(double P_const) {
    return single_node(0.010, 1.12e-3, 6.8e-3, ZipLoad{0.04, 10.0, P_const});
}

// Two nodes joined by one line; used where hand-expanded scalar equations
// serve as the oracle.
inline Network two_node() {
    return Network::build(
        {DguParams{0.010, 1.8e-3, 2.2e-3}, DguParams{0.015, 2.0e-3, 1.9e-3}},
        {LineParams{0.070, 2.1e-6, 0, 1}},
        {ZipLoad{0.08, 10.0, 10000.0}, ZipLoad{0.04, 15.0, 2000.0}});
}

// Slow O(1)-parameter network for finite-difference audits of trajectories:
// every mode is O(1) per second, so sampled series are smooth.
inline Network slow_two_node() {
    return Network::build(
        {DguParams{1.0, 1.0, 1.0}, DguParams{1.2, 0.8, 1.1}},
        {LineParams{1.0, 0.5, 0, 1}},
        {ZipLoad{0.5, 0.2, 0.3}, ZipLoad{0.4, 0.1, 0.2}});
}

inline Network random_network(std::mt19937& rng, int n) {
    std::uniform_real_distribution<double> r(0.01, 0.5);
    std::uniform_real_distribution<double> l(1e-4, 1e-2);
    std::uniform_real_distribution<double> c(1e-4, 1e-2);
    std::uniform_real_distribution<double> z(0.0, 0.1);
    std::uniform_real_distribution<double> ic(0.0, 20.0);
    std::uniform_real_distribution<double> p(0.0, 8000.0);
    std::uniform_int_distribution<int> pick(0, n - 1);

    std::vector<DguParams> dgus;
    std::vector<ZipLoad> loads;
    for (int i = 0; i < n; ++i) {
        dgus.push_back(DguParams{r(rng), l(rng), c(rng)});
        loads.push_back(ZipLoad{z(rng), ic(rng), p(rng)});
    }
    std::vector<LineParams> lines;
    for (int i = 1; i < n; ++i) { // spanning tree
        std::uniform_int_distribution<int> parent(0, i - 1);
        lines.push_back(LineParams{r(rng), l(rng) * 1e-2, parent(rng), i});
    }
    if (n > 2) { // a couple of extra edges
        for (int e = 0; e < 2; ++e) {
            int a = pick(rng), b = pick(rng);
            if (a != b) lines.push_back(LineParams{r(rng), l(rng) * 1e-2, a, b});
        }
    }
    return Network::build(std::move(dgus), std::move(lines), std::move(loads));
}

inline NetworkState random_state(std::mt19937& rng, const Network& net,
                                 double v_lo = 300.0, double v_hi = 460.0,
                                 double i_span = 80.0) {
    std::uniform_real_distribution<double> v(v_lo, v_hi);
    std::uniform_real_distribution<double> i(-i_span, i_span);
    NetworkState s;
    s.I_s.resize(net.n());
    s.I_t.resize(net.m());
    s.V.resize(net.n());
    for (int k = 0; k < net.n(); ++k) s.I_s[k] = i(rng);
    for (int k = 0; k < net.m(); ++k) s.I_t[k] = i(rng);
    for (int k = 0; k < net.n(); ++k) s.V[k] = v(rng);
    return s;
}

// Central-difference gradient of a scalar function of the packed state,
// with per-component steps scaled to the state magnitude.
inline VectorXd fd_gradient(const std::function<double(const VectorXd&)>& f,
                            const VectorXd& x) {
    const double cbrt_eps = 6.055454452393343e-06; // cbrt(machine epsilon)
    VectorXd g(x.size());
    for (Eigen::Index k = 0; k < x.size(); ++k) {
        const double h = cbrt_eps * std::max(1.0, std::abs(x[k]));
        VectorXd xp = x, xm = x;
        xp[k] += h;
        xm[k] -= h;
        g[k] = (f(xp) - f(xm)) / (xp[k] - xm[k]);
    }
    return g;
}

} // namespace zipgrid::testing

#endif
