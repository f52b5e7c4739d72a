#pragma once

#include "webfsm/value.hpp"
#include "webfsm/path.hpp"
#include "webfsm/spec.hpp"
#include "webfsm/engine.hpp"
#include "webfsm/validate.hpp"
#include "webfsm/search.hpp"
#include "webfsm/replay.hpp"
#include "webfsm/datagen.hpp"
#include "webfsm/reward.hpp"
