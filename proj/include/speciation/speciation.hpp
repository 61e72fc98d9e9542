#pragma once

#include "activity.hpp"
#include "check.hpp"
#include "closed_forms.hpp"
#include "conservation.hpp"
#include "equilibrium.hpp"
#include "errors.hpp"
#include "fit.hpp"
#include "integer_linalg.hpp"
#include "kinetics.hpp"
#include "presets.hpp"
#include "scheme.hpp"
#include "scheme_parser.hpp"
#include "sweep.hpp"
