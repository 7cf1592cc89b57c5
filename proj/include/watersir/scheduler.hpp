#ifndef WATERSIR_SCHEDULER_HPP
#define WATERSIR_SCHEDULER_HPP

#include <stdexcept>
#include <string>
#include <vector>

#include "watersir/hydraulics.hpp"
#include "watersir/network.hpp"

// Single-slot pump scheduling: pick the on/off status vector of minimum
// energy cost that keeps the forecast demands hydraulically feasible. The
// chosen statuses and the signs of the resulting flows define the operating
// regime everything downstream works in.

namespace watersir {

class OpsInfeasible : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct OpsSolution {
  std::vector<char> pump_on;      // per edge; pipes always 1
  std::vector<int> sign_pattern;  // per edge, componentwise sign of flows
  HydraulicState nominal_state;   // witness point at the forecast demands
  double energy_cost = 0.0;
};

// Hydraulic power through one pump divided by efficiency, priced per slot:
// tariff * rho * g * flow * gain / efficiency with rho = 1000 kg/m^3.
// Callers pass a nonnegative flow across an on pump.
double pump_energy_cost(double flow, double gain_m, double efficiency = 0.75,
                        double tariff = 1.0, double gravity = 9.81);

// Exhaustive scan over all 2^(#pumps) status combinations (exact at desk
// scale). Ties break toward fewer pumps on, then lexicographically with off
// before on in edge order. Throws OpsInfeasible naming the least-violated
// combination when nothing is feasible.
OpsSolution solve_ops(const Network& net,
                      const std::vector<double>& forecast_demands,
                      double efficiency = 0.75, double tariff = 1.0);

// Per-node demand forecast taken from the network data: sources 0, fixed
// demands where declared, otherwise the demand box lower bound.
std::vector<double> forecast_demands(const Network& net);

}  // namespace watersir

#endif
