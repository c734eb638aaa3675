// Copyright 2026 The uniftest Authors
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
#pragma once

#include "uniftest/error.hpp"
#include "uniftest/kernels.hpp"
#include "uniftest/model.hpp"
#include "uniftest/montecarlo.hpp"
#include "uniftest/normal.hpp"
#include "uniftest/numeric.hpp"
#include "uniftest/parallel.hpp"
#include "uniftest/poisson.hpp"
#include "uniftest/risk.hpp"
#include "uniftest/rng.hpp"
#include "uniftest/sampling.hpp"
#include "uniftest/statistics.hpp"
#include "uniftest/verify.hpp"
