#pragma once

#include <string>
#include <utility>
#include <vector>

#include "peerfx/estimator.h"

namespace peerfx {

// "0.0733\n(0.0008)": estimate over its standard error, four decimals.
std::string format_cell(double estimate, double se, const std::string& stars = "");

// 13700538 -> "13,700,538".
std::string group_thousands(std::size_t value);

// *** p < .01, ** p < .05, * p < .1 (two-sided normal).
std::string significance_stars(double estimate, double se);

struct BaselineFits {
  FitResult ols;
  FitResult reduced_form;
  FitResult first_stage;
  FitResult iv;
  double ar_stat = 0.0;
};

// Four columns: OLS, Reduced Form, IV First Stage, IV Second Stage.
std::string render_baseline(const BaselineFits& fits, const std::string& game, bool player_fe = true,
                            bool week_fe = true);

std::string render_heterogeneity(const FitResult& fit, const std::string& game);

// One column per fit, in the order given (the playtime table's variants).
std::string render_playtime(const std::vector<FitResult>& fits);

// Machine-readable `term,estimate,se,stat` rows, each term prefixed
// `<label>.`; stat is estimate / se. Fit-level numbers follow as
// `<label>.n_obs` and, when present, `<label>.anderson_rubin`.
std::string fits_csv(const std::vector<std::pair<std::string, const FitResult*>>& fits);

}  // namespace peerfx
