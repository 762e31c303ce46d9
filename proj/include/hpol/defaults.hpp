#pragma once

namespace hpol::defaults {

// flow_engine
inline constexpr double kEnergyDriftTol = 1e-8;      // relative, after projection
inline constexpr double kPreProjectionDrift = 1e-6;  // per step, before projection
inline constexpr double kCrossingTimeTol = 1e-10;
inline constexpr double kSectionTMin = 1e-6;
inline constexpr double kTransversalityFloor = 1e-4;
inline constexpr double kRestrictTol = 1e-12;

// entropy_lab
inline constexpr double kEpsLadder[4] = {0.2, 0.1, 0.05, 0.025};
inline constexpr int kHorizonExpLo = 4;   // 2^4 * T_unit
inline constexpr int kHorizonExpHi = 12;  // 2^12 * T_unit
inline constexpr double kTimeUnit = 0.01;
inline constexpr int kExactCountCap = 20;
inline constexpr double kStableSpread = 0.6;

// weak_kam
inline constexpr double kLevelTol = 1e-3;
inline constexpr int kRationalityCap = 32;  // Q
inline constexpr double kAngularTol = 1e-3;
inline constexpr int kFaceFloor = 3;  // consecutive samples
inline constexpr int kMomentumDirections = 64;  // M_p
inline constexpr double kGapTol = 1e-3;
inline constexpr double kBetaLo = 16.0;
inline constexpr double kBetaHi = 4096.0;

// cli_experiments
inline constexpr int kWitnessMLo = 3;
inline constexpr int kWitnessMHi = 8;

}  // namespace hpol::defaults
