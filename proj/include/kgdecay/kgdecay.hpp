#pragma once

#include "kgdecay/analysis.hpp"
#include "kgdecay/energy.hpp"
#include "kgdecay/error.hpp"
#include "kgdecay/laxphillips.hpp"
#include "kgdecay/model.hpp"
#include "kgdecay/profile.hpp"
#include "kgdecay/solver.hpp"
#include "kgdecay/strichartz.hpp"
