#pragma once

#include "robvar/core.hpp"
#include "robvar/diagnostics.hpp"
#include "robvar/experiments.hpp"
#include "robvar/io.hpp"
#include "robvar/optimizer.hpp"
#include "robvar/parallel.hpp"
#include "robvar/penalty.hpp"
#include "robvar/robust_loss.hpp"
#include "robvar/simulators.hpp"
#include "robvar/var_core.hpp"
