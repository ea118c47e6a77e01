#pragma once

#include "aniso/common.hpp"
#include "aniso/integrate.hpp"
#include "aniso/linalg.hpp"
#include "aniso/quadrature.hpp"
#include "aniso/parallel.hpp"
#include "aniso/core_dynamics.hpp"
#include "aniso/mcgehee.hpp"
#include "aniso/saddle_connections.hpp"
#include "aniso/infinity_manifold.hpp"
#include "aniso/beta2.hpp"
#include "aniso/melnikov.hpp"
