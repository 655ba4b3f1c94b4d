#ifndef PDMP_PDMP_HPP
#define PDMP_PDMP_HPP

#include "pdmp/errors.hpp"
#include "pdmp/random.hpp"
#include "pdmp/core.hpp"
#include "pdmp/flow.hpp"
#include "pdmp/grid.hpp"
#include "pdmp/simulate.hpp"
#include "pdmp/quadrature.hpp"
#include "pdmp/kernels.hpp"
#include "pdmp/rankcheck.hpp"
#include "pdmp/drift.hpp"
#include "pdmp/density.hpp"
#include "pdmp/models.hpp"
#include "pdmp/registry.hpp"
#include "pdmp/io.hpp"

#endif  // PDMP_PDMP_HPP
