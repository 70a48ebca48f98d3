// Copyright 2026 The sparsagg Authors
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

// Umbrella header.

#ifndef SPARSAGG_SPARSAGG_HPP_
#define SPARSAGG_SPARSAGG_HPP_

#include "sparsagg/accountant.hpp"
#include "sparsagg/adversary.hpp"
#include "sparsagg/bundle.hpp"
#include "sparsagg/correlated.hpp"
#include "sparsagg/dpnoise.hpp"
#include "sparsagg/errors.hpp"
#include "sparsagg/experiments.hpp"
#include "sparsagg/field.hpp"
#include "sparsagg/fltrain.hpp"
#include "sparsagg/integrity.hpp"
#include "sparsagg/net.hpp"
#include "sparsagg/permutation.hpp"
#include "sparsagg/prg.hpp"
#include "sparsagg/rss.hpp"
#include "sparsagg/shuffle.hpp"
#include "sparsagg/sparvecagg.hpp"
#include "sparsagg/transcript.hpp"

#endif  // SPARSAGG_SPARSAGG_HPP_
