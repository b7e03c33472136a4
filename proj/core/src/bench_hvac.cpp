#include "dhmpc/bench_hvac.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

namespace dhmpc {

namespace {

constexpr int kNx = 2;
constexpr int kNu = 14;
constexpr int kNw = 6;

// control indices (0-based)
constexpr int kChiller = 0;
constexpr int kHrc = 1;
constexpr int kGen = 2;
constexpr int kTower = 3;
constexpr int kCwStore = 4;
constexpr int kHwStore = 5;
constexpr int kDump = 6;
constexpr int kElec = 7;
constexpr int kWater = 8;
constexpr int kGas = 9;
constexpr int kSlackCwPos = 10;
constexpr int kSlackCwNeg = 11;
constexpr int kSlackHwPos = 12;
constexpr int kSlackHwNeg = 13;

void require_cfg(bool cond, const char* what) {
  if (!cond) throw ModelError(std::string("hvac config: ") + what);
}

}  // namespace

void HvacConfig::validate() const {
  require_cfg(dt_min > 0, "dt must be positive");
  require_cfg(N >= 1 && N_sim >= 1, "horizons must be >= 1");
  require_cfg(price_amp >= 0 && elec_load_amp >= 0 && cw_load_amp >= 0 && hw_load_amp >= 0,
              "amplitudes must be >= 0");
  require_cfg(price_noise >= 0 && load_noise >= 0, "noise must be >= 0");
  require_cfg(penalty_unmet > 0, "penalty must be positive");
  require_cfg(chiller_cap > 0 && hrc_cap > 0 && gen_cap > 0 && dump_cap > 0, "capacities");
  require_cfg(cw_storage_cap > 0 && hw_storage_cap > 0, "storage sizes");
  require_cfg(cw_rate_max > 0 && hw_rate_max > 0, "storage rates");
  require_cfg(x0_frac >= 0 && x0_frac <= 1, "x0_frac in [0,1]");
  require_cfg(slack_bound_factor >= 1, "slack bound factor");
  require_cfg(utility_bound > elec_load_mean + elec_load_amp, "utility bound too small");
}

void ProfileSet::validate() const {
  const size_t len = price_elec.size();
  if (load_elec.size() != len || load_cw.size() != len || load_hw.size() != len)
    throw ModelError("profiles: series lengths differ");
  for (size_t t = 0; t < len; ++t)
    if (load_elec[t] < 0 || load_cw[t] < 0 || load_hw[t] < 0)
      throw ModelError("profiles: loads must be >= 0 (row " + std::to_string(t) + ")");
}

ProfileSet synth_profiles(const HvacConfig& cfg, int length, std::uint64_t seed) {
  cfg.validate();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double two_pi = 2.0 * M_PI;

  ProfileSet out;
  out.price_elec.reserve(length);
  out.load_elec.reserve(length);
  out.load_cw.reserve(length);
  out.load_hw.reserve(length);
  for (int t = 0; t < length; ++t) {
    const double hour = std::fmod(t * cfg.dt_min / 60.0, 24.0);
    const double price =
        cfg.price_mean +
        cfg.price_amp * std::sin(two_pi * (hour - (cfg.price_peak_hour - 6.0)) / 24.0) +
        cfg.price_noise * gauss(rng);
    const double cyc = cfg.load_cycle_hours > 0 ? two_pi * hour / cfg.load_cycle_hours : 0.0;
    const double elec =
        cfg.elec_load_mean + cfg.elec_load_amp * std::sin(two_pi * (hour - 8.0) / 24.0) +
        cfg.load_cycle_amp * std::sin(cyc) + cfg.load_noise * gauss(rng);
    const double cw =
        cfg.cw_load_mean + cfg.cw_load_amp * std::sin(two_pi * (hour - 9.0) / 24.0) +
        cfg.load_cycle_amp * std::sin(cyc + 2.0) + cfg.load_noise * gauss(rng);
    const double hw =
        cfg.hw_load_mean + cfg.hw_load_amp * std::sin(two_pi * (hour - 2.0) / 24.0) +
        cfg.load_cycle_amp * std::sin(cyc + 4.0) + cfg.load_noise * gauss(rng);
    out.price_elec.push_back(std::max(price, 0.005));
    out.load_elec.push_back(std::max(elec, 0.0));
    out.load_cw.push_back(std::max(cw, 0.0));
    out.load_hw.push_back(std::max(hw, 0.0));
  }
  return out;
}

ProfileSet load_profiles(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ModelError("profiles: cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw ModelError("profiles: empty file " + path);
  if (line != "t,price_elec,load_elec,load_cw,load_hw")
    throw ModelError("profiles: bad header, expected t,price_elec,load_elec,load_cw,load_hw");

  ProfileSet out;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string field;
    double vals[5];
    for (int c = 0; c < 5; ++c) {
      if (!std::getline(ss, field, ',')) {
        static const char* names[5] = {"t", "price_elec", "load_elec", "load_cw", "load_hw"};
        throw ModelError("profiles: line " + std::to_string(lineno) + ": missing column " +
                         names[c]);
      }
      try {
        vals[c] = std::stod(field);
      } catch (const std::exception&) {
        throw ModelError("profiles: line " + std::to_string(lineno) + ": bad number '" + field +
                         "'");
      }
    }
    if (vals[2] < 0 || vals[3] < 0 || vals[4] < 0)
      throw ModelError("profiles: line " + std::to_string(lineno) + ": negative load");
    out.price_elec.push_back(vals[1]);
    out.load_elec.push_back(vals[2]);
    out.load_cw.push_back(vals[3]);
    out.load_hw.push_back(vals[4]);
  }
  out.validate();
  return out;
}

void save_profiles(const ProfileSet& profiles, const std::string& path) {
  profiles.validate();
  std::ofstream out(path);
  if (!out) throw ModelError("profiles: cannot write " + path);
  out << "t,price_elec,load_elec,load_cw,load_hw\n";
  char buf[128];
  for (int t = 0; t < profiles.size(); ++t) {
    std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%.17g\n", t, profiles.price_elec[t],
                  profiles.load_elec[t], profiles.load_cw[t], profiles.load_hw[t]);
    out << buf;
  }
}

std::pair<MpcProblem, Scenario> generate_instance(const HvacConfig& cfg,
                                                  const ProfileSet& profiles) {
  cfg.validate();
  profiles.validate();
  const int need = cfg.N_sim + cfg.N;
  if (profiles.size() < need)
    throw ModelError("hvac: profiles must cover N_sim + N = " + std::to_string(need) +
                     " stages");

  StageSpec base;
  base.A = Matrix::Identity(kNx, kNx);
  base.B = Matrix::Zero(kNx, kNu);
  base.B(0, kCwStore) = 1.0;  // charging adds energy to the CW store
  base.B(1, kHwStore) = 1.0;
  base.E = Matrix::Zero(kNw, kNx);

  Matrix F = Matrix::Zero(kNw, kNu);
  // E1: electricity balance  u8 - a1 u1 - a2 u2 - a4 u4 = w1
  F(0, kElec) = 1.0;
  F(0, kChiller) = -cfg.chiller_elec;
  F(0, kHrc) = -cfg.hrc_elec;
  F(0, kTower) = -cfg.tower_elec;
  // E2: water balance  u9 - c4 u4 = 0
  F(1, kWater) = 1.0;
  F(1, kTower) = -cfg.tower_water;
  // E3: natural gas balance  u10 - g3 u3 = 0
  F(2, kGas) = 1.0;
  F(2, kGen) = -cfg.gen_gas;
  // E4: condenser water balance  b1 u1 - u4 = 0
  F(3, kChiller) = cfg.chiller_reject;
  F(3, kTower) = -1.0;
  // E5: CW load balance  u1 + u2 - u5 + u11 - u12 = w5
  F(4, kChiller) = 1.0;
  F(4, kHrc) = 1.0;
  F(4, kCwStore) = -1.0;
  F(4, kSlackCwPos) = 1.0;
  F(4, kSlackCwNeg) = -1.0;
  // E6: HW load balance  u3 + h2 u2 - u6 - u7 + u13 - u14 = w6
  F(5, kGen) = 1.0;
  F(5, kHrc) = cfg.hrc_heat;
  F(5, kHwStore) = -1.0;
  F(5, kDump) = -1.0;
  F(5, kSlackHwPos) = 1.0;
  F(5, kSlackHwNeg) = -1.0;
  base.F = F;

  base.q = Vector::Zero(kNx);
  base.r = Vector::Zero(kNu);
  base.v = Vector::Zero(kNx);
  base.w = Vector::Zero(kNw);
  base.x_lo = Vector::Zero(kNx);
  base.x_hi = (Vector(kNx) << cfg.cw_storage_cap, cfg.hw_storage_cap).finished();

  const double peak_load =
      std::max({cfg.elec_load_mean + cfg.elec_load_amp, cfg.cw_load_mean + cfg.cw_load_amp,
                cfg.hw_load_mean + cfg.hw_load_amp});
  const double slack_hi = cfg.slack_bound_factor * peak_load;

  Vector u_lo = Vector::Zero(kNu);
  Vector u_hi = Vector::Zero(kNu);
  u_hi[kChiller] = cfg.chiller_cap;
  u_hi[kHrc] = cfg.hrc_cap;
  u_hi[kGen] = cfg.gen_cap;
  u_hi[kTower] = cfg.chiller_reject * cfg.chiller_cap;
  u_lo[kCwStore] = -cfg.cw_rate_max;
  u_hi[kCwStore] = cfg.cw_rate_max;
  u_lo[kHwStore] = -cfg.hw_rate_max;
  u_hi[kHwStore] = cfg.hw_rate_max;
  u_hi[kDump] = cfg.dump_cap;
  u_hi[kElec] = cfg.utility_bound;
  u_hi[kWater] = cfg.utility_bound;
  u_hi[kGas] = cfg.utility_bound;
  u_hi[kSlackCwPos] = slack_hi;
  u_hi[kSlackCwNeg] = slack_hi;
  u_hi[kSlackHwPos] = slack_hi;
  u_hi[kSlackHwNeg] = slack_hi;
  base.u_lo = u_lo;
  base.u_hi = u_hi;

  Scenario scenario;
  scenario.base_stage = std::make_shared<const StageSpec>(base);
  scenario.id = cfg.seed;
  scenario.x0 =
      (Vector(kNx) << cfg.x0_frac * cfg.cw_storage_cap, cfg.x0_frac * cfg.hw_storage_cap)
          .finished();
  scenario.q.assign(need, Vector::Zero(kNx));
  scenario.v.assign(need, Vector::Zero(kNx));
  scenario.r.reserve(need);
  scenario.w.reserve(need);
  for (int t = 0; t < need; ++t) {
    Vector r = Vector::Zero(kNu);
    r[kElec] = profiles.price_elec[t];
    r[kWater] = cfg.price_water;
    r[kGas] = cfg.price_gas;
    r[kSlackCwPos] = cfg.penalty_unmet;
    r[kSlackCwNeg] = cfg.penalty_unmet;
    r[kSlackHwPos] = cfg.penalty_unmet;
    r[kSlackHwNeg] = cfg.penalty_unmet;
    scenario.r.push_back(std::move(r));

    Vector w = Vector::Zero(kNw);
    w[0] = profiles.load_elec[t];
    w[4] = profiles.load_cw[t];
    w[5] = profiles.load_hw[t];
    scenario.w.push_back(std::move(w));
  }

  std::vector<StageSpec> stages;
  stages.reserve(cfg.N);
  for (int t = 0; t < cfg.N; ++t) stages.push_back(scenario.stage_at(t));
  stages[0].v = scenario.x0;
  return {MpcProblem(std::move(stages)), std::move(scenario)};
}

std::pair<MpcProblem, Scenario> generate_instance(const HvacConfig& cfg) {
  return generate_instance(cfg, synth_profiles(cfg, cfg.N_sim + cfg.N, cfg.seed));
}

}  // namespace dhmpc
