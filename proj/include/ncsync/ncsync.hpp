#pragma once

#include "ncsync/appendix.hpp"
#include "ncsync/evaluate.hpp"
#include "ncsync/harness.hpp"
#include "ncsync/impairments.hpp"
#include "ncsync/ofdm.hpp"
#include "ncsync/scenario.hpp"
#include "ncsync/sync.hpp"
#include "ncsync/types.hpp"
