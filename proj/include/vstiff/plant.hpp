#pragma once

#include <string>

#include "vstiff/interconnect.hpp"
#include "vstiff/rational_tf.hpp"

namespace vstiff {

/// Parameters of the series-elastic actuator stand-in: a velocity-commanded motor
/// with first-order lag driving the human port through a pure spring.
struct SeaPlantParams {
  double spring_stiffness = 1.0;  ///< K_s, Nm/rad
  double motor_lag = 0.01;        ///< T_m, s
  double velocity_limit = 44.0;   ///< u_max, rad/s

  void validate() const {
    if (!(spring_stiffness > 0.0) || !(motor_lag > 0.0) || !(velocity_limit > 0.0))
      throw InvalidArgument("SeaPlantParams: K_s, T_m and u_max must be positive");
  }
  friend bool operator==(const SeaPlantParams&, const SeaPlantParams&) = default;
};

/// Where the exogenous disturbance and noise enter the loop.
struct InjectionConvention {
  std::string disturbance = "plant_input";     ///< d adds to the motor velocity command
  std::string noise = "torque_measurement";    ///< n adds to the measured interaction torque
};

/// Open-loop channels of the interactive system:
/// G1 = tau_h/u, G2 = tau_h/phi_h, G3 = tau_h_meas/n, G4 = tau_h/d.
struct OpenLoopPlant {
  SeaPlantParams params;
  RationalTF g1, g2, g3, g4;
  InjectionConvention injection;

  /// Open-loop port impedance Z = tau_h/(-phi_h) = -G2.
  RationalTF impedance() const { return -g2; }
};

inline OpenLoopPlant build_sea_plant(const SeaPlantParams& params) {
  params.validate();
  const double ks = params.spring_stiffness;
  const double tm = params.motor_lag;
  OpenLoopPlant p;
  p.params = params;
  p.g1 = RationalTF({ks}, {tm, 1.0, 0.0});
  p.g2 = RationalTF::gain(-ks);
  p.g3 = RationalTF::gain(1.0);
  p.g4 = p.g1;
  return p;
}

/// phi_h -> tau_d block. tau_d = -Zd * phi_h, so perfect rendering gives tau_h/(-phi_h) = Zd.
inline RationalTF desired_torque_model(double zd) {
  if (!(zd >= 0.0) || !std::isfinite(zd)) throw InvalidArgument("desired_torque_model: Zd must be >= 0");
  return RationalTF::gain(-zd);
}

/// Default error weight W_e(s) = 1 / (s/omega_e + 1).
inline RationalTF default_error_weight(double omega_e) {
  if (!(omega_e > 0.0)) throw InvalidArgument("default_error_weight: omega_e must be positive");
  return RationalTF({1.0}, {1.0 / omega_e, 1.0});
}

/// Model-matching interconnection. Inputs [phi_h, d, n, u]; outputs
/// [e_w, u_out, tau_h, tau_h_meas, e] with e = tau_d - tau_h, e_w = W_e e and
/// tau_h_meas = tau_h + n. The controller reads [tau_h_meas, e].
struct AugmentedPlant {
  StateSpaceModel sys;
  double zd = 0.0;
  RationalTF weight;
  OpenLoopPlant plant;
};

inline AugmentedPlant build_augmented_plant(const OpenLoopPlant& plant, double zd, const RationalTF& we) {
  if (!is_stable(tf_to_ss(we)).stable) throw InvalidArgument("build_augmented_plant: W_e must be stable");
  Matrix two_sum(1, 2);
  two_sum << 1.0, 1.0;
  Matrix diff(1, 2);
  diff << 1.0, -1.0;

  std::vector<Block> blocks{
      {"actuator_input", StateSpaceModel::static_gain(two_sum, {"u", "d"}, {"u_act"})},
      {"actuator", tf_to_ss(plant.g1, "u_act", "tau_act")},
      {"port", tf_to_ss(plant.g2, "phi_h", "tau_port")},
      {"spring", StateSpaceModel::static_gain(two_sum, {"tau_act", "tau_port"}, {"tau_h"})},
      {"sensor", tf_to_ss(plant.g3, "n", "tau_noise")},
      {"measurement", StateSpaceModel::static_gain(two_sum, {"tau_h", "tau_noise"}, {"tau_h_meas"})},
      {"target", tf_to_ss(desired_torque_model(zd), "phi_h", "tau_d")},
      {"error", StateSpaceModel::static_gain(diff, {"tau_d", "tau_h"}, {"e"})},
      {"weight", tf_to_ss(we, "e", "e_w")},
      {"control_out", StateSpaceModel::static_gain(Matrix::Identity(1, 1), {"u"}, {"u_out"})},
  };
  AugmentedPlant aug;
  aug.sys = connect(blocks, {}, {"phi_h", "d", "n", "u"}, {"e_w", "u_out", "tau_h", "tau_h_meas", "e"});
  aug.zd = zd;
  aug.weight = we;
  aug.plant = plant;
  return aug;
}

}  // namespace vstiff
