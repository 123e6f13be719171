#pragma once

#include "cipfem/analysis.hpp"
#include "cipfem/assembly.hpp"
#include "cipfem/fe_space.hpp"
#include "cipfem/mesh.hpp"
#include "cipfem/problems.hpp"
#include "cipfem/quadrature.hpp"
#include "cipfem/saddle_solver.hpp"
#include "cipfem/sparse.hpp"
#include "cipfem/study.hpp"
