#ifndef ZIPGRID_CSVIO_HPP
#define ZIPGRID_CSVIO_HPP

#include <string>
#include <vector>

#include "zipgrid/control.hpp"
#include "zipgrid/network.hpp"
#include "zipgrid/passivity.hpp"
#include "zipgrid/simulate.hpp"

namespace zipgrid {

// trajectory.csv with header t,Is_1..Is_n,It_1..It_m,V_1..V_n,u_1..u_n and
// shortest round-trip decimal values (dot separator, "\n" line endings).
void write_trajectory_csv(const Trajectory& traj, const std::string& path);

// Reads a trajectory.csv back. Events are not part of the file; callers
// that need them (the audit) attach the scenario's events afterwards.
Trajectory read_trajectory_csv(const std::string& path);

// Storage diagnostics along a recorded trajectory, one row per sample,
// re-anchored after each event.
struct StorageSeriesSample {
    double t;
    StorageReport report;
    double sd_rate_predicted;
};
std::vector<StorageSeriesSample> storage_series(const Network& base_net,
                                                const Trajectory& traj,
                                                const ControllerConfig& cfg);

void write_diagnostics_csv(const std::vector<StorageSeriesSample>& series,
                           const std::string& path);

void write_audit_csv(const std::vector<DissipationSample>& samples,
                     const std::string& path);

// field.csv rows Is,V,dIs,dV plus boundaries.csv with the scalar region
// boundary voltages.
void write_vector_field_csv(const VectorFieldGrid& grid,
                            const std::string& path);
void write_region_boundaries_csv(const ScalarRegionBoundaries& b,
                                 const std::string& path);

std::string format_double(double v); // shortest round-trip decimal

} // namespace zipgrid

#endif
