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

// Everything at once.

#pragma once

#include "mftwbc/common.hpp"
#include "mftwbc/model.hpp"
#include "mftwbc/dynamics.hpp"
#include "mftwbc/mft.hpp"
#include "mftwbc/wsmap.hpp"
#include "mftwbc/qp.hpp"
#include "mftwbc/wbc.hpp"
#include "mftwbc/planner.hpp"
#include "mftwbc/sim.hpp"
#include "mftwbc/harness.hpp"
