#pragma once

#include "dmdkit/error.hpp"
#include "dmdkit/numerics.hpp"
#include "dmdkit/trajectory.hpp"
#include "dmdkit/dmd.hpp"
#include "dmdkit/koopman.hpp"
#include "dmdkit/systems.hpp"
