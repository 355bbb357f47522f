#pragma once

#include "afdo/types.hpp"
#include "afdo/dynamics.hpp"
#include "afdo/melnikov.hpp"
#include "afdo/integrator.hpp"
#include "afdo/smf.hpp"
#include "afdo/geometry.hpp"
#include "afdo/manifolds.hpp"
#include "afdo/chaos.hpp"
#include "afdo/parallel.hpp"
#include "afdo/io.hpp"
