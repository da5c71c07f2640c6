#pragma once

#include "smr/allocator.hpp"
#include "smr/config.hpp"
#include "smr/node.hpp"
#include "smr/reclaimer.hpp"
#include "smr/refc_ledger.hpp"
#include "smr/scheme.hpp"
