#pragma once

#include "oal/verify/brute_force.hpp"

namespace oal::testing {
using verify::bf_distance;
using verify::bf_filter;
using verify::bf_knn;
using verify::bf_select_boundary;
using verify::bf_top;
}  // namespace oal::testing
