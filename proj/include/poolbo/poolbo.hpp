/*
 * Copyright 2026 The poolbo Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef POOLBO_POOLBO_HPP
#define POOLBO_POOLBO_HPP

#include "poolbo/acquisition.hpp"
#include "poolbo/bma.hpp"
#include "poolbo/cli.hpp"
#include "poolbo/dataset.hpp"
#include "poolbo/engine.hpp"
#include "poolbo/errors.hpp"
#include "poolbo/eval.hpp"
#include "poolbo/gp.hpp"
#include "poolbo/random.hpp"
#include "poolbo/report.hpp"
#include "poolbo/version.hpp"

#endif // POOLBO_POOLBO_HPP
