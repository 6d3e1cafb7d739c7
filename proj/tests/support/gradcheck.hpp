#pragma once

#include "oal/verify/gradcheck.hpp"

namespace oal::testing {
using verify::grad_check;
using verify::GradCheckResult;
}  // namespace oal::testing
