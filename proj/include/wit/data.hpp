#pragma once

#include "wit/types.hpp"

namespace wit {

/// Centers y and d; centers every instrument column and rescales it to
/// ||z_j||^2 = n.  Scaling factors are retained for back-transformation.
/// Idempotent up to floating point.
IVDataset standardize(const IVDataset& ds);

/// Residualizes y, d and every instrument column on [1, w] and drops w.
IVDataset partial_out(const IVDataset& ds);

/// First-stage and reduced-form OLS plus the average gram matrix Z'Z/n.
ReducedForm reduced_form(const IVDataset& ds);

}  // namespace wit
