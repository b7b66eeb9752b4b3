#ifndef ZIPGRID_DOMAIN_HPP
#define ZIPGRID_DOMAIN_HPP

namespace zipgrid {

// Voltages at or below this floor are outside the admissible domain. The
// load model and the adaptive controller gain divide by V, so evaluation
// refuses rather than blowing up; the simulator turns the refusal into a
// DomainExit result.
inline constexpr double kMinVoltage = 1e-6; // V

} // namespace zipgrid

#endif
