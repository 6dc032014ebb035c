#pragma once

#include "primfit/checks.hpp"
#include "primfit/errors.hpp"
#include "primfit/fitting.hpp"
#include "primfit/flow.hpp"
#include "primfit/forces.hpp"
#include "primfit/global_params.hpp"
#include "primfit/io.hpp"
#include "primfit/jacobians.hpp"
#include "primfit/kdtree.hpp"
#include "primfit/mathutil.hpp"
#include "primfit/mesh.hpp"
#include "primfit/metrics.hpp"
#include "primfit/pose.hpp"
#include "primfit/primitive.hpp"
#include "primfit/superquadric.hpp"
#include "primfit/synth.hpp"
#include "primfit/velocity_field.hpp"
