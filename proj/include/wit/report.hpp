#pragma once

#include <string>

#include "wit/pipeline.hpp"
#include "wit/simulation.hpp"

namespace wit {

/// JSON with the stable field names the machine interface promises:
/// beta_hat, se, ci_low, ci_high, kappa_liml, valid_set, alpha_invalid,
/// sargan_stat, sargan_p, mu_hat, variance_method.
std::string fit_to_json(const WITFit& fit);

std::string tuning_to_json(const TuningReport& rep);

std::string study_rows_to_json(const std::vector<StudyRow>& rows);
std::string study_rows_to_csv(const std::vector<StudyRow>& rows);

std::string candidate_table_to_csv(const TuningReport& rep);

}  // namespace wit
