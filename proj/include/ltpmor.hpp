#pragma once

#include "ltpmor/csv.hpp"
#include "ltpmor/dpa.hpp"
#include "ltpmor/errors.hpp"
#include "ltpmor/eval.hpp"
#include "ltpmor/hill.hpp"
#include "ltpmor/phv.hpp"
#include "ltpmor/rom.hpp"
#include "ltpmor/sadpa.hpp"
#include "ltpmor/systems.hpp"
#include "ltpmor/trigfun.hpp"
#include "ltpmor/trigfun_json.hpp"
