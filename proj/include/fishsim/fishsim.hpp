#pragma once

#include "fishsim/ad/derivatives.hpp"
#include "fishsim/ad/dual.hpp"
#include "fishsim/added_mass.hpp"
#include "fishsim/config.hpp"
#include "fishsim/control.hpp"
#include "fishsim/eom.hpp"
#include "fishsim/experiments.hpp"
#include "fishsim/hydrodynamics.hpp"
#include "fishsim/integrators.hpp"
#include "fishsim/io.hpp"
#include "fishsim/kinematics.hpp"
#include "fishsim/model.hpp"
#include "fishsim/quadrature.hpp"
#include "fishsim/simulation.hpp"
