#pragma once

#include "dumbbell/error.hpp"
#include "dumbbell/mesh.hpp"
#include "dumbbell/marching.hpp"
#include "dumbbell/metric.hpp"
#include "dumbbell/assembly.hpp"
#include "dumbbell/eigensolver.hpp"
#include "dumbbell/harmonic.hpp"
#include "dumbbell/nodal.hpp"
#include "dumbbell/morse.hpp"
#include "dumbbell/oracle.hpp"
