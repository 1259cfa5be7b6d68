// Copyright 2026 The mpc3 Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace mpc3 {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define MPC3_DEFINE_ERROR(Name)  \
  class Name : public Error {    \
   public:                       \
    using Error::Error;          \
  };

MPC3_DEFINE_ERROR(RangeError)
MPC3_DEFINE_ERROR(ShapeError)
MPC3_DEFINE_ERROR(ExactnessError)
MPC3_DEFINE_ERROR(ThresholdError)
MPC3_DEFINE_ERROR(IntegrityError)
MPC3_DEFINE_ERROR(FreshnessError)
MPC3_DEFINE_ERROR(TopologyError)
MPC3_DEFINE_ERROR(TransportError)
MPC3_DEFINE_ERROR(FrameError)
MPC3_DEFINE_ERROR(DomainError)
MPC3_DEFINE_ERROR(ConfigError)
MPC3_DEFINE_ERROR(FormatError)
MPC3_DEFINE_ERROR(GeometryError)

#undef MPC3_DEFINE_ERROR

#define MPC3_ENFORCE(cond, Kind, msg) \
  do {                                \
    if (!(cond)) throw Kind(msg);     \
  } while (0)

}  // namespace mpc3
