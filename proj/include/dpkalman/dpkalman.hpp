//
// Copyright 2026 The dpkalman Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#pragma once

#include "dpkalman/bounds.hpp"
#include "dpkalman/calibration.hpp"
#include "dpkalman/error.hpp"
#include "dpkalman/filter.hpp"
#include "dpkalman/linalg.hpp"
#include "dpkalman/network.hpp"
#include "dpkalman/privacy.hpp"
#include "dpkalman/rng.hpp"
#include "dpkalman/simulation.hpp"
