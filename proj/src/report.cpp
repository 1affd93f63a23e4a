#include "wit/report.hpp"

#include <cmath>
#include <sstream>

#include <json.hpp>

namespace wit {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

json number_or_null(double v) {
  if (std::isnan(v)) return nullptr;
  return v;
}

ordered_json fit_json(const WITFit& fit) {
  ordered_json j;
  j["beta_hat"] = fit.beta_hat;
  j["se"] = fit.se;
  j["ci_low"] = fit.ci_low;
  j["ci_high"] = fit.ci_high;
  j["kappa_liml"] = fit.kappa_liml;
  j["valid_set"] = json::array();
  for (Index v : fit.valid_set) j["valid_set"].push_back(v + 1);  // 1-based
  j["alpha_invalid"] = json::array();
  for (Index k = 0; k < fit.alpha_hat_invalid.size(); ++k)
    j["alpha_invalid"].push_back(fit.alpha_hat_invalid[k]);
  j["sargan_stat"] = fit.sargan_stat;
  j["sargan_p"] = number_or_null(fit.sargan_p);
  j["mu_hat"] = fit.mu_hat;
  j["variance_method"] = variance_method_name(fit.variance_method);
  return j;
}

}  // namespace

std::string fit_to_json(const WITFit& fit) { return fit_json(fit).dump(2); }

std::string tuning_to_json(const TuningReport& rep) {
  ordered_json j;
  j["chosen_lambda"] = number_or_null(rep.chosen_lambda);
  j["chosen_start"] = rep.chosen_start;
  j["all_rejected"] = rep.all_rejected;
  j["chosen_untestable"] = rep.chosen_untestable;
  j["size_used"] = rep.size_used;
  j["valid_set"] = json::array();
  for (Index v : rep.valid_set) j["valid_set"].push_back(v + 1);
  j["candidates"] = json::array();
  for (const auto& c : rep.candidate_table) {
    ordered_json e;
    e["start_id"] = c.start_id;
    e["lambda"] = c.lambda;
    e["p_valid"] = c.p_valid;
    e["mcd_stat"] = c.mcd_stat;
    e["threshold"] = number_or_null(c.threshold);
    e["rejected"] = c.rejected;
    e["untestable"] = c.untestable;
    j["candidates"].push_back(std::move(e));
  }
  return j.dump(2);
}

namespace {

std::string fmt(double v) {
  if (std::isnan(v)) return "";
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

}  // namespace

std::string study_rows_to_json(const std::vector<StudyRow>& rows) {
  ordered_json arr = json::array();
  for (const auto& r : rows) {
    ordered_json e;
    e["case"] = r.case_name;
    e["n"] = r.n;
    e["method"] = r.metrics.method;
    e["mad"] = r.metrics.mad;
    e["std"] = r.metrics.std_dev;
    e["cp"] = r.metrics.cp;
    e["fpr"] = number_or_null(r.metrics.fpr);
    e["fnr"] = number_or_null(r.metrics.fnr);
    e["n_reps"] = r.metrics.n_reps;
    e["failures"] = r.metrics.failures;
    arr.push_back(std::move(e));
  }
  return arr.dump(2);
}

std::string study_rows_to_csv(const std::vector<StudyRow>& rows) {
  std::ostringstream os;
  os << "case,n,method,mad,std,cp,fpr,fnr,n_reps,failures\n";
  for (const auto& r : rows) {
    os << r.case_name << ',' << r.n << ',' << r.metrics.method << ','
       << fmt(r.metrics.mad) << ',' << fmt(r.metrics.std_dev) << ','
       << fmt(r.metrics.cp) << ',' << fmt(r.metrics.fpr) << ','
       << fmt(r.metrics.fnr) << ',' << r.metrics.n_reps << ','
       << r.metrics.failures << '\n';
  }
  return os.str();
}

std::string candidate_table_to_csv(const TuningReport& rep) {
  std::ostringstream os;
  os << "start_id,lambda,p_valid,mcd_stat,threshold,rejected,untestable\n";
  for (const auto& c : rep.candidate_table) {
    os << c.start_id << ',' << fmt(c.lambda) << ',' << c.p_valid << ','
       << fmt(c.mcd_stat) << ',' << fmt(c.threshold) << ','
       << (c.rejected ? 1 : 0) << ',' << (c.untestable ? 1 : 0) << '\n';
  }
  return os.str();
}

}  // namespace wit
