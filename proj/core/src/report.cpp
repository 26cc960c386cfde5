#include "ryno/report.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ryno/error.hpp"

namespace ryno::stats {

using nlohmann::json;

namespace {

std::string two_decimals(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string shortest(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

using Column = std::vector<double>;

ReportCell correlate(std::string row, std::string_view column, const Column& x, const Column& y,
                     CorrelationMethod method, bool reported = true) {
    ReportCell c;
    c.row = std::move(row);
    c.column = std::string(column);
    c.published = reported;
    try {
        c.result = spearman(x, y, method);
    } catch (const UndefinedCorrelation& e) {
        c.error = e.what();
    }
    return c;
}

template <typename F>
Column column_of(std::span<const ParticipantRow> rows, F&& f) {
    Column out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(f(r));
    return out;
}

json cell_json(const ReportCell& c) {
    json j{{"row", c.row}, {"column", c.column}, {"rendered", c.rendered()}, {"published", c.published}};
    if (c.result) {
        j["rho"] = c.result->rho;
        j["p_value"] = c.result->p_value;
        j["n"] = c.result->n;
    } else {
        j["rho"] = nullptr;
        j["p_value"] = nullptr;
        j["error"] = c.error;
    }
    return j;
}

json table_json(const ReportTable& t) {
    json rows = json::array();
    for (const auto& label : t.rows) {
        json r{{"label", label}};
        if (auto it = t.means.find(label); it != t.means.end()) r["mean"] = it->second;
        json cells = json::object();
        for (const auto& col : t.columns) cells[col] = cell_json(t.cell(label, col));
        r["cells"] = std::move(cells);
        rows.push_back(std::move(r));
    }
    return json{{"id", t.id}, {"title", t.title}, {"columns", t.columns}, {"rows", std::move(rows)}};
}

json scatter_json(const std::vector<ScatterPoint>& s) {
    json a = json::array();
    for (const auto& p : s) a.push_back(json{{"participant_id", p.participant_id}, {"x", p.x}, {"y", p.y}});
    return a;
}

std::string pad(std::string s, std::size_t w) {
    if (s.size() < w) s.append(w - s.size(), ' ');
    return s;
}

void render_table(std::ostringstream& out, const ReportTable& t, std::size_t n) {
    out << t.title << " (N=" << n << ")\n";
    std::size_t label_w = std::string_view("Political Element").size();
    for (const auto& r : t.rows) label_w = std::max(label_w, r.size());
    const bool with_mean = !t.means.empty();
    out << pad(t.id == "personality" ? "Personality Trait" : "Political Element", label_w + 2);
    if (with_mean) out << pad("Mean", 7);
    for (const auto& c : t.columns) out << pad(c, 10);
    out << '\n';
    for (const auto& r : t.rows) {
        out << pad(r, label_w + 2);
        if (with_mean) out << pad(two_decimals(t.means.at(r)), 7);
        for (const auto& c : t.columns) {
            const auto& cell = t.cell(r, c);
            out << pad(cell.published ? cell.rendered() : "[" + cell.rendered() + "]", 10);
        }
        out << '\n';
    }
}

}  // namespace

std::string ReportCell::rendered() const { return result ? format_rho(*result) : "n/a"; }

const ReportCell& ReportTable::cell(std::string_view row, std::string_view column) const {
    for (const auto& c : cells) {
        if (c.row == row && c.column == column) return c;
    }
    throw NotFound("no cell (" + std::string(row) + ", " + std::string(column) + ") in " + id);
}

const ReportCell& CorrelationReport::overall_cell(std::string_view row, std::string_view column) const {
    for (const auto& c : overall) {
        if (c.row == row && c.column == column) return c;
    }
    throw NotFound("no overall cell (" + std::string(row) + ", " + std::string(column) + ")");
}

CorrelationReport correlation_report(std::span<const ParticipantRow> rows, CorrelationMethod method) {
    if (rows.size() < 3)
        throw ValidationError("correlation report needs at least 3 rows, got " + std::to_string(rows.size()));
    if (method == CorrelationMethod::ExactPermutation && rows.size() > kMaxExactN)
        throw ValidationError("exact permutation p is limited to n <= " + std::to_string(kMaxExactN));

    const Column ingame = column_of(rows, [](const ParticipantRow& r) { return r.ingame; });
    const Column pre = column_of(rows, [](const ParticipantRow& r) { return r.pre_climate; });
    const Column post = column_of(rows, [](const ParticipantRow& r) { return r.post_climate; });

    CorrelationReport rep;
    rep.n = rows.size();
    rep.method = method;
    rep.overall.push_back(correlate(std::string(kColPre), kColIngame, pre, ingame, method));
    rep.overall.push_back(correlate(std::string(kColPost), kColIngame, post, ingame, method));
    rep.overall.push_back(correlate(std::string(kColPre), kColPost, pre, post, method));

    auto& t3 = rep.personality;
    t3.id = "personality";
    t3.title = "Spearman correlation: personality traits and climate attitudes";
    t3.columns = {std::string(kColIngame), std::string(kColPre), std::string(kColPost)};
    for (const auto& [label, key] : kTraitRows) {
        const std::string trait(key);
        for (const auto& r : rows) {
            if (!r.big_five.count(trait))
                throw ValidationError("participant " + r.participant_id + " has no " + trait + " score");
        }
        const Column x = column_of(rows, [&](const ParticipantRow& r) { return r.big_five.at(trait); });
        const std::string row(label);
        t3.rows.push_back(row);
        double sum = 0.0;
        for (double v : x) sum += v;
        t3.means[row] = sum / static_cast<double>(x.size());
        t3.cells.push_back(correlate(row, kColIngame, x, ingame, method));
        t3.cells.push_back(correlate(row, kColPre, x, pre, method));
        t3.cells.push_back(correlate(row, kColPost, x, post, method));
    }

    using assessment::PoliticalScores;
    auto political_table = [&](ReportTable& t, bool pre_wave) {
        const std::string suffix = pre_wave ? " (Pre)" : " (Post)";
        t.id = pre_wave ? "political_pre" : "political_post";
        t.title = std::string("Spearman correlation: political elements") +
                  (pre_wave ? " before gameplay" : " after gameplay");
        // published panel columns first, the complementary wave last
        t.columns = pre_wave ? std::vector<std::string>{std::string(kColIngame), std::string(kColPre),
                                                        std::string(kColPost)}
                             : std::vector<std::string>{std::string(kColIngame), std::string(kColPost),
                                                        std::string(kColPre)};
        double PoliticalScores::*members[] = {&PoliticalScores::democracy_enthusiasm,
                                              &PoliticalScores::status_quo_eval,
                                              &PoliticalScores::collective_action};
        for (std::size_t i = 0; i < std::size(kPoliticalRows); ++i) {
            auto m = members[i];
            const Column x = column_of(rows, [&](const ParticipantRow& r) {
                return (pre_wave ? r.political_pre : r.political_post).*m;
            });
            const std::string row = std::string(kPoliticalRows[i]) + suffix;
            t.rows.push_back(row);
            t.cells.push_back(correlate(row, kColIngame, x, ingame, method));
            if (pre_wave) {
                t.cells.push_back(correlate(row, kColPre, x, pre, method));
                t.cells.push_back(correlate(row, kColPost, x, post, method, false));
            } else {
                t.cells.push_back(correlate(row, kColPost, x, post, method));
                t.cells.push_back(correlate(row, kColPre, x, pre, method, false));
            }
        }
    };
    political_table(rep.political_pre, true);
    political_table(rep.political_post, false);

    for (const auto& r : rows) {
        rep.scatter_pre.push_back({r.participant_id, r.ingame, r.pre_climate});
        rep.scatter_post.push_back({r.participant_id, r.ingame, r.post_climate});
    }
    return rep;
}

json report_to_json(const CorrelationReport& report) {
    json overall = json::array();
    for (const auto& c : report.overall) overall.push_back(cell_json(c));
    return json{{"n", report.n},
                {"method", to_string(report.method)},
                {"overall", std::move(overall)},
                {"tables", json::array({table_json(report.personality), table_json(report.political_pre),
                                        table_json(report.political_post)})},
                {"scatter", {{"pre", scatter_json(report.scatter_pre)}, {"post", scatter_json(report.scatter_post)}}}};
}

std::string render_report_text(const CorrelationReport& report) {
    std::ostringstream out;
    out << "Climate attitude correlations (N=" << report.n << ", Spearman, " << to_string(report.method) << ")\n";
    for (const auto& c : report.overall) out << "  " << pad(c.row + " ~ " + c.column, 18) << c.rendered() << '\n';
    out << '\n';
    render_table(out, report.personality, report.n);
    out << '\n';
    render_table(out, report.political_pre, report.n);
    out << '\n';
    render_table(out, report.political_post, report.n);
    out << "\n* p<.05  ** p<.01  n/a = undefined (constant column)  [..] = outside the published layout\n";
    return out.str();
}

std::string scatter_csv(std::span<const ScatterPoint> series) {
    std::string out = "x,y\n";
    for (const auto& p : series) out += shortest(p.x) + "," + shortest(p.y) + "\n";
    return out;
}

}  // namespace ryno::stats
