// SPDX-License-Identifier: Apache-2.0
//
// cvdiv: diversity-assisted Earth-to-satellite CV quantum link simulation
// Copyright (C) 2026 The cvdiv authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#pragma once

#include "cvdiv/random.hpp"
#include "cvdiv/gaussian.hpp"
#include "cvdiv/channel.hpp"
#include "cvdiv/combining.hpp"
#include "cvdiv/entanglement.hpp"
#include "cvdiv/fidelity.hpp"
#include "cvdiv/phase_screen.hpp"
#include "cvdiv/io.hpp"
#include "cvdiv/config.hpp"
#include "cvdiv/runner.hpp"
