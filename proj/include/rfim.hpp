// SPDX-License-Identifier: Apache-2.0
//
// rfim - photonic RF interference management simulator
// Copyright (C) 2026 The rfim authors
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

// Everything: signal generation, photonic link, canceller, receiver
// metrology and the run harness.

#include "rfim/core.hpp"
#include "rfim/dsp.hpp"
#include "rfim/spectrum.hpp"
#include "rfim/waveforms.hpp"
#include "rfim/evm.hpp"
#include "rfim/photonics.hpp"
#include "rfim/scenario.hpp"
#include "rfim/link.hpp"
#include "rfim/canceller.hpp"
#include "rfim/simulation.hpp"
#include "rfim/scenario_io.hpp"
#include "rfim/report_io.hpp"
