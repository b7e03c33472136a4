#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "dhmpc/closed_loop.hpp"
#include "dhmpc/mpc_model.hpp"

namespace dhmpc {

/// Synthetic central-plant scheduling benchmark: two storage states
/// (chilled water, hot water), fourteen controls (plant loads, storage
/// charge/discharge, purchased utilities, unmet-load slacks) and six
/// algebraic balances. All quantities are per-stage energies; prices apply
/// directly per kWh (or gallon for water).
struct HvacConfig {
  double dt_min = 5.0;
  int N = 288;       // prediction steps
  int N_sim = 288;   // simulation steps
  std::uint64_t seed = 0;

  // electricity price profile [$/kWh]
  double price_mean = 0.10;
  double price_amp = 0.06;
  double price_noise = 0.004;
  double price_peak_hour = 16.0;  // daily maximum; the minimum is 12 h earlier

  // load profiles [kWh per stage]
  double elec_load_mean = 160.0;
  double elec_load_amp = 60.0;
  double cw_load_mean = 80.0;
  double cw_load_amp = 50.0;
  double hw_load_mean = 55.0;
  double hw_load_amp = 35.0;
  double load_noise = 25.0;
  // sub-daily load oscillation (building cycling), shared by all load
  // channels with staggered phases
  double load_cycle_amp = 0.0;
  double load_cycle_hours = 3.0;

  // prices and penalties from the plant data table
  double price_water = 0.009;   // $/gal
  double price_gas = 0.018;     // $/kWh
  double penalty_unmet = 45.0;  // $/kWh on every slack

  // plant efficiency coefficients (synthetic, documented here):
  // chiller electricity per kWh cooling, heat-recovery chiller electricity
  // per kWh cooling, tower electricity per kWh rejected, tower water per
  // kWh rejected [gal], generator gas per kWh heat, heat-recovery output
  // per kWh cooling, condenser rejection per kWh cooling.
  double chiller_elec = 0.18;
  double hrc_elec = 0.25;
  double tower_elec = 0.02;
  double tower_water = 0.30;
  double gen_gas = 1.11;
  double hrc_heat = 1.25;
  double chiller_reject = 1.18;

  // capacities [kWh per stage] and storage sizes [kWh]
  double chiller_cap = 120.0;
  double hrc_cap = 60.0;
  double gen_cap = 130.0;
  double dump_cap = 400.0;
  double cw_storage_cap = 1600.0;
  double hw_storage_cap = 300.0;
  double cw_rate_max = 60.0;
  double hw_rate_max = 30.0;
  double x0_frac = 0.4;          // initial storage level as a fraction
  double slack_bound_factor = 10.0;
  double utility_bound = 5000.0;

  void validate() const;
};

struct ProfileSet {
  std::vector<double> price_elec;  // $/kWh
  std::vector<double> load_elec;   // kWh per stage
  std::vector<double> load_cw;
  std::vector<double> load_hw;

  int size() const { return static_cast<int>(price_elec.size()); }
  void validate() const;
};

/// Daily sinusoid + clamped Gaussian noise profiles of the given length.
ProfileSet synth_profiles(const HvacConfig& cfg, int length, std::uint64_t seed);

/// CSV with header `t,price_elec,load_elec,load_cw,load_hw`.
ProfileSet load_profiles(const std::string& path);
void save_profiles(const ProfileSet& profiles, const std::string& path);

/// The open-loop problem over cfg.N stages plus the scenario covering
/// cfg.N_sim + cfg.N stages, both driven by the given profiles (which must
/// be long enough). Always feasible: slacks absorb any unmet balance.
std::pair<MpcProblem, Scenario> generate_instance(const HvacConfig& cfg,
                                                  const ProfileSet& profiles);

/// Same, with synthetic profiles from cfg's own parameters and seed.
std::pair<MpcProblem, Scenario> generate_instance(const HvacConfig& cfg);

}  // namespace dhmpc
