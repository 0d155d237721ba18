// Copyright 2026 The rumorgraph Authors.
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

#include "rumorgraph/augment.hpp"
#include "rumorgraph/dataio.hpp"
#include "rumorgraph/embed.hpp"
#include "rumorgraph/errors.hpp"
#include "rumorgraph/evalkit.hpp"
#include "rumorgraph/model.hpp"
#include "rumorgraph/numcore/optim.hpp"
#include "rumorgraph/numcore/rng.hpp"
#include "rumorgraph/numcore/tape.hpp"
#include "rumorgraph/numcore/tensor.hpp"
#include "rumorgraph/objectives.hpp"
#include "rumorgraph/propagation.hpp"
#include "rumorgraph/synth.hpp"
#include "rumorgraph/trainer.hpp"
