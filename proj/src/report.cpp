#include "peerfx/report.h"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace peerfx {

namespace {

constexpr std::size_t kLabelWidth = 30;
constexpr std::size_t kColumnWidth = 18;

struct Table {
  std::vector<std::string> header_rows;
  std::vector<std::vector<std::string>> rows;  // label + one cell per column; cells may hold "\n"
  std::size_t columns = 0;

  std::string render() const {
    const std::size_t width = kLabelWidth + columns * kColumnWidth;
    const std::string heavy(width, '=');
    const std::string light(width, '-');
    std::string out = heavy + "\n";
    for (const auto& h : header_rows) out += h + "\n";
    out += light + "\n";
    for (const auto& row : rows) {
      if (row.empty()) {
        out += light + "\n";
        continue;
      }
      std::vector<std::vector<std::string>> lines;
      std::size_t height = 1;
      for (const auto& cell : row) {
        std::vector<std::string> parts;
        std::size_t start = 0;
        while (true) {
          const auto nl = cell.find('\n', start);
          parts.push_back(cell.substr(start, nl == std::string::npos ? std::string::npos : nl - start));
          if (nl == std::string::npos) break;
          start = nl + 1;
        }
        height = std::max(height, parts.size());
        lines.push_back(std::move(parts));
      }
      for (std::size_t l = 0; l < height; ++l) {
        std::string line;
        for (std::size_t c = 0; c < lines.size(); ++c) {
          const std::string text = l < lines[c].size() ? lines[c][l] : "";
          line += c == 0 ? fmt::format("{:<{}}", text, kLabelWidth) : fmt::format("{:>{}}", text, kColumnWidth);
        }
        while (!line.empty() && line.back() == ' ') line.pop_back();
        out += line + "\n";
      }
    }
    out += heavy + "\n";
    return out;
  }
};

std::string header_line(const std::string& label, const std::vector<std::string>& cells) {
  std::string line = fmt::format("{:<{}}", label, kLabelWidth);
  for (const auto& c : cells) line += fmt::format("{:>{}}", c, kColumnWidth);
  while (!line.empty() && line.back() == ' ') line.pop_back();
  return line;
}

std::string coef_cell(const FitResult& fit, const std::string& term, bool stars = false) {
  const auto it = std::find(fit.terms.begin(), fit.terms.end(), term);
  if (it == fit.terms.end()) return "";
  const auto k = static_cast<std::size_t>(it - fit.terms.begin());
  const double b = fit.coef[static_cast<Eigen::Index>(k)];
  const double se = fit.se(k);
  return format_cell(b, se, stars ? significance_stars(b, se) : "");
}

std::string numbered(std::size_t n) {
  return fmt::format("({})", n);
}

}  // namespace

std::string format_cell(double estimate, double se, const std::string& stars) {
  // Avoid printing "-0.0000".
  const double b = std::abs(estimate) < 5e-5 ? 0.0 : estimate;
  return fmt::format("{:.4f}{}\n({:.4f})", b, stars, se);
}

std::string group_thousands(std::size_t value) {
  std::string digits = std::to_string(value);
  std::string out;
  for (std::size_t i = 0; i < digits.size(); ++i) {
    if (i != 0 && (digits.size() - i) % 3 == 0) out.push_back(',');
    out.push_back(digits[i]);
  }
  return out;
}

std::string significance_stars(double estimate, double se) {
  if (!(se > 0.0)) return "";
  const double p = std::erfc(std::abs(estimate / se) / std::sqrt(2.0));
  if (p < 0.01) return "***";
  if (p < 0.05) return "**";
  if (p < 0.1) return "*";
  return "";
}

std::string render_baseline(const BaselineFits& fits, const std::string& game, bool player_fe, bool week_fe) {
  Table table;
  table.columns = 4;
  const std::string adopt = "Adopt " + game;
  table.header_rows = {
      header_line("Dependent variable:", {"OLS", "Reduced Form", "IV First Stage", "IV Second Stage"}),
      header_line("", {adopt + "_i,t", adopt + "_i,t", "Friends j adopt", adopt + "_i,t"}),
      header_line("", {numbered(1), numbered(2), numbered(3), numbered(4)}),
  };
  table.rows.push_back({"Friends j adopt " + game + "_i,t", coef_cell(fits.ols, "x_friend"), "", "",
                        coef_cell(fits.iv, "x_friend")});
  table.rows.push_back({"Friends k adopt " + game + "_i,t-1", "", coef_cell(fits.reduced_form, "z_sd_lag"),
                        coef_cell(fits.first_stage, "z_sd_lag"), ""});
  table.rows.push_back({});
  table.rows.push_back({"Observations", group_thousands(fits.ols.n_obs), group_thousands(fits.reduced_form.n_obs),
                        group_thousands(fits.first_stage.n_obs), group_thousands(fits.iv.n_obs)});
  const std::string check = "✓";
  table.rows.push_back({"Player FE", player_fe ? check : "", player_fe ? check : "", player_fe ? check : "",
                        player_fe ? check : ""});
  table.rows.push_back({"Week FE", week_fe ? check : "", week_fe ? check : "", week_fe ? check : "",
                        week_fe ? check : ""});
  table.rows.push_back({"Anderson-Rubin stat.", "", "", fmt::format("{:.2f}", fits.ar_stat), ""});
  std::string out = table.render();
  out += fmt::format("Clustered standard errors in parentheses ({} clusters).\n", group_thousands(fits.iv.n_clusters));
  if (!fits.iv.within_converged) out += "Warning: fixed-effect demeaning did not converge.\n";
  return out;
}

std::string render_heterogeneity(const FitResult& fit, const std::string& game) {
  Table table;
  table.columns = 1;
  table.header_rows = {header_line("Dependent variable:", {"Adopt " + game + "_i,t"}),
                       header_line("", {fit.model == "heterogeneity_ols" ? "OLS" : "2SLS"})};
  table.rows.push_back({"Friends j adopt x KP", coef_cell(fit, "x_kp", true)});
  table.rows.push_back({"Friends j adopt x OF", coef_cell(fit, "x_of", true)});
  table.rows.push_back({});
  table.rows.push_back({"Observations", group_thousands(fit.n_obs)});
  table.rows.push_back({"Player FE", "✓"});
  table.rows.push_back({"Week FE", "✓"});
  std::string out = table.render();
  out += "Reference group: newer friends who are not key players.\n";
  for (const auto& term : fit.dropped_terms) out += fmt::format("Not identified (identically zero): {}\n", term);
  return out;
}

std::string render_playtime(const std::vector<FitResult>& fits) {
  Table table;
  table.columns = fits.size();
  std::vector<std::string> numbers;
  for (std::size_t c = 0; c < fits.size(); ++c) numbers.push_back(numbered(c + 1));
  table.header_rows = {header_line("Dependent variable:", std::vector<std::string>(fits.size(), "Ln(Playtime)")),
                       header_line("", numbers)};
  const std::pair<const char*, const char*> peers[] = {{"Key Player Purchase", "kp_purchase"},
                                                       {"Old Friend Purchase", "of_purchase"},
                                                       {"No Friend Purchase", "no_friend_purchase"}};
  for (const auto& [label, term] : peers) {
    std::vector<std::string> row{label};
    for (const auto& fit : fits) row.push_back(coef_cell(fit, term, true));
    table.rows.push_back(std::move(row));
  }
  table.rows.push_back({});
  std::vector<std::string> obs{"Observations"};
  for (const auto& fit : fits) obs.push_back(group_thousands(fit.n_obs));
  table.rows.push_back(std::move(obs));
  std::string out = table.render();
  out += "Heteroskedasticity-robust standard errors in parentheses. *** p<0.01, ** p<0.05, * p<0.1.\n";
  if (!fits.empty() && !fits.front().dropped_terms.empty()) {
    std::string dropped;
    for (const auto& t : fits.front().dropped_terms) dropped += (dropped.empty() ? "" : ", ") + t;
    out += fmt::format("Constant in the sample and omitted: {}\n", dropped);
  }
  return out;
}

std::string fits_csv(const std::vector<std::pair<std::string, const FitResult*>>& fits) {
  std::string out = "term,estimate,se,stat\n";
  for (const auto& [label, fit] : fits) {
    for (std::size_t k = 0; k < fit->terms.size(); ++k) {
      const double b = fit->coef[static_cast<Eigen::Index>(k)];
      const double se = fit->se(k);
      out += fmt::format("{}.{},{},{},{}\n", label, fit->terms[k], b, se, se > 0 ? b / se : 0.0);
    }
    out += fmt::format("{}.n_obs,{},,\n", label, fit->n_obs);
    if (fit->ar_stat) out += fmt::format("{}.anderson_rubin,{},,{}\n", label, *fit->ar_stat, *fit->ar_stat);
  }
  return out;
}

}  // namespace peerfx
