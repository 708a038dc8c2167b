// Copyright 2026 The mftwbc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>

#include <Eigen/Dense>

namespace mftwbc {

// Generalized coordinate layout of the planar biped:
//   0 x, 1 z, 2 pitch | leg 0: 3 rear hip, 4 rear knee, 5 fore hip, 6 fore knee
//                     | leg 1: 7 rear hip, 8 rear knee, 9 fore hip, 10 fore knee
inline constexpr int kNq = 11;
inline constexpr int kNumLegs = 2;
inline constexpr int kNumActuated = 4;
inline constexpr int kNumBase = 3;
inline constexpr int kNumLoop = 4;     // 2-D closure gap per leg
inline constexpr int kNumContact = 4;  // [f1x, f1z, f2x, f2z]

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using VecQ = Eigen::Matrix<double, kNq, 1>;
using MatQ = Eigen::Matrix<double, kNq, kNq>;
using Mat2Q = Eigen::Matrix<double, 2, kNq>;
using Mat4Q = Eigen::Matrix<double, 4, kNq>;
using Mat3Q = Eigen::Matrix<double, 3, kNq>;
using MatQ4 = Eigen::Matrix<double, kNq, 4>;
using Mat2 = Eigen::Matrix2d;
using Mat4 = Eigen::Matrix4d;
using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kPi = 3.14159265358979323846;

enum class Limb { Rear = 0, Fore = 1 };

inline constexpr int hip_index(int leg, Limb limb) { return 3 + 4 * leg + 2 * static_cast<int>(limb); }
inline constexpr int knee_index(int leg, Limb limb) { return hip_index(leg, limb) + 1; }

// Actuated coordinates [q4, q6, q8, q10] (0-based 3, 5, 7, 9) and passive knees.
inline constexpr std::array<int, kNumActuated> kActuatedIndex{3, 5, 7, 9};
inline constexpr std::array<int, kNumActuated> kPassiveIndex{4, 6, 8, 10};

enum class ErrorCode {
  NoClosure,
  OutOfReach,
  RankDeficient,
  ActuationSingular,
  ZeroVector,
  SingularLimb,
  EmptyPreferable,
  InfeasibleFit,
  SchemaMismatch,
  ModelHashMismatch,
  InconsistentPhase,
  NumericalBlowup,
  BadConfig,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NoClosure: return "NoClosure";
    case ErrorCode::OutOfReach: return "OutOfReach";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::ActuationSingular: return "ActuationSingular";
    case ErrorCode::ZeroVector: return "ZeroVector";
    case ErrorCode::SingularLimb: return "SingularLimb";
    case ErrorCode::EmptyPreferable: return "EmptyPreferable";
    case ErrorCode::InfeasibleFit: return "InfeasibleFit";
    case ErrorCode::SchemaMismatch: return "SchemaMismatch";
    case ErrorCode::ModelHashMismatch: return "ModelHashMismatch";
    case ErrorCode::InconsistentPhase: return "InconsistentPhase";
    case ErrorCode::NumericalBlowup: return "NumericalBlowup";
    case ErrorCode::BadConfig: return "BadConfig";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Unit direction of a link at absolute angle `a`; a = 0 points straight down,
// positive angles rotate towards +x.
inline Vec2 link_dir(double a) { return {std::sin(a), -std::cos(a)}; }
inline Vec2 link_dir_deriv(double a) { return {std::cos(a), std::sin(a)}; }

inline Mat2 rotation(double a) {
  Mat2 r;
  r << std::cos(a), -std::sin(a), std::sin(a), std::cos(a);
  return r;
}

// Planar cross product (moment of `f` applied at `r`).
inline double cross2(const Vec2& r, const Vec2& f) { return r.x() * f.y() - r.y() * f.x(); }

inline double wrap_angle(double a) {
  a = std::fmod(a + kPi, 2.0 * kPi);
  if (a < 0) a += 2.0 * kPi;
  return a - kPi;
}

// FNV-1a; stable across platforms, used for model fingerprints.
inline std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace mftwbc
