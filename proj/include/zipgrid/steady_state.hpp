#ifndef ZIPGRID_STEADY_STATE_HPP
#define ZIPGRID_STEADY_STATE_HPP

#include <utility>

#include "zipgrid/network.hpp"

namespace zipgrid {

// Steady state of the open-loop network together with the constant input
// that sustains it. residual is the max-norm of the steady-state equations
// evaluated at the solution.
struct Equilibrium {
    VectorXd I_s_bar;
    VectorXd I_t_bar;
    VectorXd V_bar;
    VectorXd u_bar;
    double residual = 0.0;

    NetworkState state() const { return NetworkState{I_s_bar, I_t_bar, V_bar}; }
};

// Equilibrium with the voltages pinned at V_star, by direct substitution:
//   I_t = -R_t^{-1} B^T V*,  I_s = -B I_t + I_l(V*),  u = V* + R_s I_s.
Equilibrium equilibrium_from_vstar(const Network& net, const VectorXd& V_star);

// Equilibrium for a given constant input, solving the reduced nonlinear
// system in V by damped Newton iteration started from V_init. With P-loads
// the scalar node equation is quadratic in V; the iteration converges to
// the root whose basin contains V_init (the high-voltage root for nominal
// initial guesses).
Equilibrium equilibrium_from_ustar(const Network& net, const VectorXd& u_star,
                                   const VectorXd& V_init);

// Overload defaulting V_init to 380 V per node.
Equilibrium equilibrium_from_ustar(const Network& net, const VectorXd& u_star);

// Both roots of the single-node steady-state quadratic
//   (1 + R_s Z_inv) V^2 - (u* - R_s I*) V + R_s P* = 0,
// returned as (low, high). Diagnostic companion to equilibrium_from_ustar;
// requires n == 1, m == 0 and real roots.
std::pair<double, double> scalar_equilibrium_roots(const Network& net,
                                                   double u_star);

} // namespace zipgrid

#endif
