#ifndef ZIPGRID_NETWORK_HPP
#define ZIPGRID_NETWORK_HPP

#include <vector>

#include <Eigen/Dense>

#include "zipgrid/domain.hpp"
#include "zipgrid/errors.hpp"

namespace zipgrid {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Buck-converter output filter of a distributed generation unit.
struct DguParams {
    double R_s; // filter resistance, ohm
    double L_s; // filter inductance, H
    double C_s; // filter capacitance, F
};

// RL transmission line between two nodes. `from` is the positive end of
// the edge orientation, `to` the negative end (0-based node indices).
struct LineParams {
    double R_t; // line resistance, ohm
    double L_t; // line inductance, H
    int from;
    int to;
};

// Parallel combination of constant-impedance, constant-current and
// constant-power load components. Any component may be exactly zero.
struct ZipLoad {
    double Z_inv = 0.0;   // conductance 1/Z*, S
    double I_const = 0.0; // I*, A
    double P_const = 0.0; // P*, W
};

// Stacked state x = [I_s; I_t; V].
struct NetworkState {
    VectorXd I_s; // generated currents, A (size n)
    VectorXd I_t; // line currents, A (size m)
    VectorXd V;   // node voltages, V (size n)

    bool in_domain() const { return V.size() > 0 && V.minCoeff() > kMinVoltage; }

    VectorXd pack() const;
    static NetworkState unpack(const VectorXd& x, int n, int m);
};

// Immutable value object describing the DC network: n DGU nodes joined by
// m RL lines over a connected undirected graph, one ZIP load per node.
class Network {
public:
    static Network build(std::vector<DguParams> dgus,
                         std::vector<LineParams> lines,
                         std::vector<ZipLoad> loads);

    int n() const { return n_; }
    int m() const { return m_; }

    const std::vector<DguParams>& dgus() const { return dgus_; }
    const std::vector<LineParams>& lines() const { return lines_; }
    const std::vector<ZipLoad>& loads() const { return loads_; }

    // Node-edge incidence matrix (n x m), one +1 and one -1 per column.
    const MatrixXd& incidence() const { return incidence_; }

    // Diagonal parameter matrices stored as vectors.
    const VectorXd& R_s() const { return R_s_; }
    const VectorXd& L_s() const { return L_s_; }
    const VectorXd& C_s() const { return C_s_; }
    const VectorXd& R_t() const { return R_t_; }
    const VectorXd& L_t() const { return L_t_; }
    const VectorXd& Z_inv() const { return Z_inv_; }
    const VectorXd& I_const() const { return I_const_; }
    const VectorXd& P_const() const { return P_const_; }

    // Copy of this network with the loads replaced (used by timed events).
    Network with_loads(std::vector<ZipLoad> loads) const;

private:
    Network() = default;
    void cache_vectors();

    int n_ = 0;
    int m_ = 0;
    std::vector<DguParams> dgus_;
    std::vector<LineParams> lines_;
    std::vector<ZipLoad> loads_;
    MatrixXd incidence_;
    VectorXd R_s_, L_s_, C_s_, R_t_, L_t_, Z_inv_, I_const_, P_const_;
};

// ZIP load current I_l(v) = Z_inv*v + I_const + P_const/v. Requires v above
// the voltage floor.
double zip_current(const ZipLoad& load, double v);

// Per-node load currents I_l(V).
VectorXd zip_currents(const Network& net, const VectorXd& V);

// Open-loop vector field of the network:
//   dI_s = L_s^{-1} (-R_s I_s - V + u)
//   dI_t = L_t^{-1} (-R_t I_t - B^T V)
//   dV   = C_s^{-1} (I_s + B I_t - I_l(V))
NetworkState open_loop_rhs(const Network& net, const NetworkState& state,
                           const VectorXd& u);

// Diagonals of the equivalent-conductance matrices:
//   G_B  = Z_inv - [P*][V]^{-1}[V*]^{-1}
//   G_K  = Z_inv - [P*][V]^{-2}
//   G_Pi = Z_inv + (Pi - [P*])[V]^{-2}
struct ConductanceMatrices {
    VectorXd G_B;
    VectorXd G_K;
    VectorXd G_Pi;
};
ConductanceMatrices conductance_matrices(const Network& net, const VectorXd& V,
                                         const VectorXd& Pi,
                                         const VectorXd& V_star);

} // namespace zipgrid

#endif
