#ifndef ZIPGRID_BRAYTON_MOSER_HPP
#define ZIPGRID_BRAYTON_MOSER_HPP

#include <functional>

#include "zipgrid/network.hpp"

namespace zipgrid {

// Which resistive content enters the mixed potential. The full variant is
// the classical description of the network; the reduced variant drops the
// source-resistance term and is the one the passifying input acts on.
enum class PotentialVariant { full, reduced };

// Mixed potential P(I, V) = I^T Gamma V + F(I) - G(V) of the network, with
//   Gamma = [I_n  B]^T
//   F(I)  = 1/2 |I_t|^2_{R_t} (+ 1/2 |I_s|^2_{R_s} in the full variant)
//   G(V)  = 1/2 |V|^2_{Z_inv} + P*^T ln V + I*^T V.
class MixedPotential {
public:
    MixedPotential(Network net, PotentialVariant variant);

    const Network& network() const { return net_; }
    PotentialVariant variant() const { return variant_; }

    // (n+m) x n coupling matrix [I_n; B^T].
    MatrixXd gamma() const;

    double resistive_content(const VectorXd& I_s, const VectorXd& I_t) const;
    double resistive_cocontent(const VectorXd& V) const;

    double value(const NetworkState& state) const;

    // Analytic gradient w.r.t. x = [I_s; I_t; V]:
    //   [V (+ R_s I_s); R_t I_t + B^T V; I_s + B I_t - I_l(V)].
    VectorXd gradient(const NetworkState& state) const;

    // Analytic Hessian; the only state dependence is [P*][V]^{-2} in the
    // V-block.
    MatrixXd hessian(const NetworkState& state) const;

private:
    Network net_;
    PotentialVariant variant_;
};

// Defining data of one member of the family of Brayton-Moser descriptions:
// lambda, constant symmetric M, state-dependent Q0 and full-rank D.
struct BmPair {
    double lambda = 1.0;
    MatrixXd M;                                              // (2n+m)^2
    std::function<MatrixXd(const NetworkState&)> Q0;         // n x (2n+m)
    MatrixXd D;                                              // n x n
};

// The identity member: lambda = 1, M = 0, Q0 = 0, D = I (pair equals the
// original description).
BmPair identity_pair(int n, int m);

// The member used by the passivity certificate: lambda = 0,
// M = diag{L_s^{-1}, L_t^{-1}, C_s^{-1}}, Q0 = [0 0 -L_s Pi [V]^{-2}],
// D = L_s. Pair it with the reduced potential.
BmPair certificate_pair(const Network& net, const VectorXd& Pi);

// Transformed description evaluated at a state:
//   Q_A = (lambda I + Hess(P) M)(Q - B~ Q0)
//   P_A = lambda P + 1/2 grad(P)^T M grad(P)
//   B_A = (lambda I + Hess(P) M) B~ D
struct GeneralizedPair {
    MatrixXd Q_A;
    VectorXd grad_P_A;
    MatrixXd B_A;
    double P_A;
};
GeneralizedPair generalized_pair(const MixedPotential& mp, const BmPair& pair,
                                 const NetworkState& state);

// Q = diag{-L_s, -L_t, C_s} and B~ = [-I_n; 0; 0] of the gradient form
// Q xdot = grad(P) + B~ u.
MatrixXd bm_q_matrix(const Network& net);
MatrixXd bm_input_matrix(const Network& net);

// || Q^{-1}(grad P + B~ u) - (Q_A + B_A D^{-1} Q0)^{-1}(grad P_A + B_A D^{-1} u) ||.
// Zero in exact arithmetic for every family member; evaluated in extended
// precision so the returned residual reflects the identity, not roundoff.
double solution_equivalence_check(const MixedPotential& mp, const BmPair& pair,
                                  const NetworkState& state, const VectorXd& u);

// Spectral-norm stability condition || L^{1/2} diag{R_s^{-1}, R_t^{-1}}
// Gamma C_s^{-1/2} || < 1 for the open-loop network under constant input.
// Diagnostic only; the asymptotic growth condition on the co-content is not
// checked here. The controller does not rely on this condition.
struct BmStability {
    double norm_value;
    bool satisfied;
    double delta_margin; // 1 - norm_value
};
BmStability bm_stability_condition(const Network& net);

} // namespace zipgrid

#endif
