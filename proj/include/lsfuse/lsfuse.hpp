#pragma once

#include "boundary_em.hpp"
#include "config.hpp"
#include "csv.hpp"
#include "errors.hpp"
#include "filtering.hpp"
#include "filters.hpp"
#include "fuser.hpp"
#include "geometry.hpp"
#include "image.hpp"
#include "metrics.hpp"
#include "nsct.hpp"
#include "synth.hpp"
#include "tiff_io.hpp"

namespace lsfuse {

inline constexpr const char* version = "0.1.0";

}  // namespace lsfuse
