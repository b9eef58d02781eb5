// Compiles the full public header set as one translation unit.

#include "qprtm/errors.hpp"
#include "qprtm/specfun.hpp"
#include "qprtm/modes.hpp"
#include "qprtm/qpgreen.hpp"
#include "qprtm/psf.hpp"
#include "qprtm/scene.hpp"
#include "qprtm/quadrature.hpp"
#include "qprtm/linalg.hpp"
#include "qprtm/parallel.hpp"
#include "qprtm/forward.hpp"
#include "qprtm/measurement.hpp"
#include "qprtm/rtm.hpp"
#include "qprtm/noise.hpp"
#include "qprtm/harness.hpp"
