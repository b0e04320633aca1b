// Copyright 2026 The semmass Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include "semmass/bpe_tokenizer.hpp"
#include "semmass/concept_sets.hpp"
#include "semmass/data_model.hpp"
#include "semmass/decode.hpp"
#include "semmass/error.hpp"
#include "semmass/feature_sidecar.hpp"
#include "semmass/latent_model.hpp"
#include "semmass/pipeline.hpp"
#include "semmass/probe.hpp"
#include "semmass/semantic_mass.hpp"
#include "semmass/stats.hpp"
#include "semmass/taxonomy.hpp"
#include "semmass/tokenizer.hpp"
#include "semmass/trajectory.hpp"
