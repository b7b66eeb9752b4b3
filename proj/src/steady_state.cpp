#include "zipgrid/steady_state.hpp"

#include <cmath>
#include <sstream>

namespace zipgrid {

namespace {

constexpr double kNewtonTol = 1e-11;
constexpr int kNewtonMaxIter = 100;

// Residual of the reduced steady-state system in V:
//   F(V) = V + R_s (B R_t^{-1} B^T V + I_l(V)) - u*
// obtained by eliminating I_t and I_s from the steady-state equations.
VectorXd reduced_residual(const Network& net, const MatrixXd& laplacian,
                          const VectorXd& V, const VectorXd& u_star) {
    return V + net.R_s().cwiseProduct(laplacian * V + zip_currents(net, V)) -
           u_star;
}

double equations_residual(const Network& net, const Equilibrium& eq) {
    const VectorXd rV = eq.V_bar + net.R_s().cwiseProduct(eq.I_s_bar) - eq.u_bar;
    const VectorXd rIt = net.R_t().cwiseProduct(eq.I_t_bar) +
                         net.incidence().transpose() * eq.V_bar;
    const VectorXd rIs = eq.I_s_bar + net.incidence() * eq.I_t_bar -
                         zip_currents(net, eq.V_bar);
    double r = rV.lpNorm<Eigen::Infinity>();
    if (rIt.size() > 0) r = std::max(r, rIt.lpNorm<Eigen::Infinity>());
    r = std::max(r, rIs.lpNorm<Eigen::Infinity>());
    return r;
}

} // namespace

Equilibrium equilibrium_from_vstar(const Network& net, const VectorXd& V_star) {
    if (V_star.size() != net.n())
        throw InvariantViolation("V_star size must equal node count");
    for (Eigen::Index i = 0; i < V_star.size(); ++i)
        if (!(V_star[i] > kMinVoltage))
            throw NonPositiveVoltage("V_star_" + std::to_string(i + 1) +
                                     " must be positive");

    Equilibrium eq;
    eq.V_bar = V_star;
    eq.I_t_bar = -(net.incidence().transpose() * V_star).cwiseQuotient(net.R_t());
    eq.I_s_bar = -net.incidence() * eq.I_t_bar + zip_currents(net, V_star);
    eq.u_bar = V_star + net.R_s().cwiseProduct(eq.I_s_bar);
    eq.residual = equations_residual(net, eq);
    if (eq.residual > 1e-10)
        throw InvariantViolation("steady-state substitution residual " +
                                 std::to_string(eq.residual));
    return eq;
}

Equilibrium equilibrium_from_ustar(const Network& net, const VectorXd& u_star,
                                   const VectorXd& V_init) {
    if (u_star.size() != net.n() || V_init.size() != net.n())
        throw InvariantViolation("u_star and V_init size must equal node count");
    for (Eigen::Index i = 0; i < V_init.size(); ++i)
        if (!(V_init[i] > kMinVoltage))
            throw NonPositiveVoltage("V_init must be positive elementwise");

    const MatrixXd laplacian = net.incidence() *
                               net.R_t().cwiseInverse().asDiagonal() *
                               net.incidence().transpose();

    VectorXd V = V_init;
    VectorXd F = reduced_residual(net, laplacian, V, u_star);
    for (int iter = 0; iter < kNewtonMaxIter; ++iter) {
        if (F.lpNorm<Eigen::Infinity>() < kNewtonTol) {
            Equilibrium eq;
            eq.V_bar = V;
            eq.I_t_bar =
                -(net.incidence().transpose() * V).cwiseQuotient(net.R_t());
            eq.I_s_bar = -net.incidence() * eq.I_t_bar + zip_currents(net, V);
            eq.u_bar = u_star;
            eq.residual = equations_residual(net, eq);
            return eq;
        }

        // J = I + R_s (L_w + Z_inv - [P*][V]^{-2})
        MatrixXd J = net.R_s().asDiagonal() * laplacian;
        const VectorXd diag = VectorXd::Ones(net.n()) +
                              net.R_s().cwiseProduct(
                                  net.Z_inv() -
                                  net.P_const().cwiseQuotient(V.cwiseProduct(V)));
        J.diagonal() += diag;

        const VectorXd delta = J.partialPivLu().solve(-F);
        if (!delta.allFinite())
            throw NewtonDivergence("singular Jacobian in steady-state solve");

        // Halve the step until the iterate stays inside the voltage domain.
        double step = 1.0;
        VectorXd V_next = V + delta;
        int halvings = 0;
        while (V_next.minCoeff() <= kMinVoltage && halvings < 60) {
            step *= 0.5;
            V_next = V + step * delta;
            ++halvings;
        }
        if (V_next.minCoeff() <= kMinVoltage)
            throw NonPositiveVoltage(
                "steady-state iterate left the positive-voltage domain");

        V = V_next;
        F = reduced_residual(net, laplacian, V, u_star);
    }
    std::ostringstream os;
    os << "no convergence in " << kNewtonMaxIter
       << " iterations, |F| = " << F.lpNorm<Eigen::Infinity>();
    throw NewtonDivergence(os.str());
}

Equilibrium equilibrium_from_ustar(const Network& net, const VectorXd& u_star) {
    return equilibrium_from_ustar(net, u_star,
                                  VectorXd::Constant(net.n(), 380.0));
}

std::pair<double, double> scalar_equilibrium_roots(const Network& net,
                                                   double u_star) {
    if (net.n() != 1 || net.m() != 0)
        throw NetworkNotScalar("scalar_equilibrium_roots needs n=1, m=0");
    const ZipLoad& load = net.loads()[0];
    const double R = net.dgus()[0].R_s;
    const double a = 1.0 + R * load.Z_inv;
    const double b = -(u_star - R * load.I_const);
    const double c = R * load.P_const;
    const double disc = b * b - 4.0 * a * c;
    if (disc < 0.0)
        throw InvariantViolation("no real steady-state voltage exists");
    const double s = std::sqrt(disc);
    // Stable quadratic roots: avoid subtracting nearly equal quantities.
    const double q = -0.5 * (b - s); // b < 0 in the operating regime
    const double r1 = q / a;
    const double r2 = (q != 0.0) ? c / q : 0.0;
    return {std::min(r1, r2), std::max(r1, r2)};
}

} // namespace zipgrid
