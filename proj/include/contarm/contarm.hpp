#pragma once

#include "contarm/arm_model.hpp"
#include "contarm/errors.hpp"
#include "contarm/force_estimation.hpp"
#include "contarm/imu_log.hpp"
#include "contarm/linalg.hpp"
#include "contarm/load_sim.hpp"
#include "contarm/params_io.hpp"
#include "contarm/statics.hpp"

namespace contarm {
inline constexpr const char* kVersion = "0.1.0";
}  // namespace contarm
