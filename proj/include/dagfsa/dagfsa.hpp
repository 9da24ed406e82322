// Copyright (c) 2026 The dagfsa Authors. All Rights Reserved.
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

#include "dagfsa/common.hpp"
#include "dagfsa/token_table.hpp"
#include "dagfsa/dag.hpp"
#include "dagfsa/wfsa.hpp"
#include "dagfsa/constraints.hpp"
#include "dagfsa/length.hpp"
#include "dagfsa/decode_result.hpp"
#include "dagfsa/cbs_dag.hpp"
#include "dagfsa/metrics.hpp"
#include "dagfsa/pipeline.hpp"
