#pragma once

#include "selfsim/evaluation.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace selfsim {

enum class ReportFormat { json, csv, markdown };

[[nodiscard]] ReportFormat parse_report_format(const std::string& name);
[[nodiscard]] const char* extension(ReportFormat f);

/// Header of the per-cell CSV, in column order.
inline constexpr const char* kCsvHeader = "model,ticker,horizon,seed,n_test,nll,ci_lo,ci_hi,ks,tail_energy";

// Each renderer throws std::invalid_argument when the report has no model rows.
[[nodiscard]] std::string render_json(const EvalReport& r);
[[nodiscard]] std::string render_csv(const EvalReport& r);
[[nodiscard]] std::string render_markdown(const EvalReport& r);
[[nodiscard]] std::string render(const EvalReport& r, ReportFormat f);

[[nodiscard]] EvalReport parse_report_json(const std::string& text);

/// Writes `<stem>.<ext>` for each format into `dir`, returning the paths.
std::vector<std::filesystem::path> write_report(const EvalReport& r, const std::filesystem::path& dir,
                                                const std::string& stem, const std::vector<ReportFormat>& formats);

}  // namespace selfsim
