#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "ryno/dataset.hpp"
#include "ryno/stats.hpp"

namespace ryno::stats {

inline constexpr std::string_view kColIngame = "INGAME";
inline constexpr std::string_view kColPre = "PRE";
inline constexpr std::string_view kColPost = "POST";

// Row labels in published order, paired with the trait key used in ParticipantRow::big_five.
inline constexpr std::pair<std::string_view, std::string_view> kTraitRows[] = {
    {"Conscientiousness", "Conscientiousness"},
    {"Neuroticism", "Neuroticism"},
    {"Openness to Experience", "Openness"},
    {"Agreeableness", "Agreeableness"},
    {"Extraversion", "Extraversion"},
};

inline constexpr std::string_view kPoliticalRows[] = {
    "Support the norms of democracy",
    "Evaluation of the status quo",
    "Willingness to participate in collective action",
};

struct ReportCell {
    std::string row;
    std::string column;
    std::optional<CorrelationResult> result;  // empty when the correlation is undefined
    std::string error;
    bool published = true;  // false for cells outside the published layout

    std::string rendered() const;  // format_rho, or "n/a"
};

struct ReportTable {
    std::string id;
    std::string title;
    std::vector<std::string> rows;
    std::vector<std::string> columns;
    std::vector<ReportCell> cells;        // row-major
    std::map<std::string, double> means;  // per row label; personality table only

    const ReportCell& cell(std::string_view row, std::string_view column) const;
};

struct ScatterPoint {
    std::string participant_id;
    double x = 0.0;  // in-game score
    double y = 0.0;  // pre or post climate score
};

struct CorrelationReport {
    std::size_t n = 0;
    CorrelationMethod method = CorrelationMethod::TApprox;
    std::vector<ReportCell> overall;  // PRE~INGAME, POST~INGAME, PRE~POST
    ReportTable personality;
    ReportTable political_pre;
    ReportTable political_post;
    std::vector<ScatterPoint> scatter_pre;
    std::vector<ScatterPoint> scatter_post;

    const ReportCell& overall_cell(std::string_view row, std::string_view column) const;
};

// Throws ValidationError with fewer than three rows. Undefined correlations
// (constant columns) are recorded per cell and render as "n/a".
CorrelationReport correlation_report(std::span<const ParticipantRow> rows,
                                     CorrelationMethod method = CorrelationMethod::TApprox);

nlohmann::json report_to_json(const CorrelationReport& report);
std::string render_report_text(const CorrelationReport& report);
// "x,y" header, then one point per line.
std::string scatter_csv(std::span<const ScatterPoint> series);

}  // namespace ryno::stats
