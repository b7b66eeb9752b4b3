#ifndef ZIPGRID_PASSIVITY_HPP
#define ZIPGRID_PASSIVITY_HPP

#include <vector>

#include "zipgrid/control.hpp"
#include "zipgrid/network.hpp"
#include "zipgrid/simulate.hpp"
#include "zipgrid/steady_state.hpp"

namespace zipgrid {

// All storage-function values at one state, plus set memberships and the
// minimum entries of the diagonal equivalent-conductance matrices.
struct StorageReport {
    double S_energy;     // stored electromagnetic energy
    double S_bregman;    // Bregman distance to the anchor equilibrium
    double S_krasovskii; // energy of the state derivative
    double P_A;          // certificate storage (transformed potential)
    double S_a;          // output-shaping term
    double S_d;          // closed-loop storage P_A + S_a
    bool in_X;
    bool in_X_B;
    bool in_X_K;
    double min_eig_G_B;
    double min_eig_G_K;
    double min_eig_G_Pi;
};

// u is the input in effect at the state (the Krasovskii storage needs the
// state derivative). eq anchors the Bregman distance; its voltages are
// expected to match cfg.V_star for closed-loop reports.
StorageReport storage_report(const Network& net, const NetworkState& state,
                             const Equilibrium& eq,
                             const ControllerConfig& cfg, const VectorXd& u);

enum class StorageId { energy, bregman, krasovskii, s_d };

struct DissipationSample {
    double t;
    double dS_dt_numeric;   // finite differences of the storage series
    double dS_dt_predicted; // closed-form dissipation identity
    double supply;          // supply-rate term of the identity
    double residual;        // numeric - predicted
};

// Checks the dissipation identity of the selected storage along a recorded
// trajectory. The storage series is differentiated with fourth-order
// central differences; samples whose stencil would touch an event instant
// are skipped, since the load step makes the storage discontinuous there.
// cfg is required for the s_d storage (it and the Bregman anchor re-anchor
// to the post-event equilibrium after every event). Throws
// InsufficientSamples when fewer than three samples were recorded, and
// requires uniform sample spacing within each inter-event segment.
std::vector<DissipationSample> dissipation_audit(const Network& base_net,
                                                 const Trajectory& traj,
                                                 StorageId which,
                                                 const ControllerConfig* cfg);

// Predicted dS_d/dt = -|dI_t|^2_{R_t} - |dV|^2_{G_Pi + K2} at one state
// (mu = 0). Exact at every state, independent of any sampling.
double predicted_sd_rate(const Network& net, const NetworkState& state,
                         const VectorXd& u, const ControllerConfig& cfg);

// Membership flags on a grid of uniform voltage levels (every node held at
// the same v). For a single-node network this traces the region boundaries
// exactly.
struct RegionSample {
    double v;
    bool in_X_B;
    bool in_X_K;
    bool g_pi_nonneg;
};
std::vector<RegionSample> set_membership_region(const Network& net,
                                                const ControllerConfig& cfg,
                                                const std::vector<double>& v_grid);

// Scalar-case boundary voltages of the conductance-nonnegativity regions:
// G_B >= 0 for V >= P/(Z_inv V*) and G_K >= 0 for V >= sqrt(P/Z_inv).
// With a pure P-load (Z_inv = 0) both regions are empty.
struct ScalarRegionBoundaries {
    bool has_boundaries; // false when Z_inv = 0 and P > 0 (regions empty)
    double v_bregman;
    double v_krasovskii;
};
ScalarRegionBoundaries scalar_region_boundaries(const Network& net,
                                                double V_star);

} // namespace zipgrid

#endif
