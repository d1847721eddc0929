/*
 * Copyright 2026 The TaxoRAG Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <fmt/format.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>

#include "taxorag/errors.hpp"
#include "taxorag/eval.hpp"

namespace taxorag {

namespace {

using Row = std::vector<std::string>;

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string out = "\"";
    for (const char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::string csv(const std::vector<Row>& rows) {
    std::string out;
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i > 0) out += ',';
            out += csv_field(row[i]);
        }
        out += '\n';
    }
    return out;
}

// Space-padded columns, two spaces apart; the header is underlined.
std::string aligned(const std::vector<Row>& rows) {
    std::vector<std::size_t> width;
    for (const auto& row : rows) {
        width.resize(std::max(width.size(), row.size()), 0);
        for (std::size_t i = 0; i < row.size(); ++i) width[i] = std::max(width[i], row[i].size());
    }
    std::string out;
    auto emit = [&](const Row& row) {
        std::string line;
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i > 0) line += "  ";
            line += fmt::format("{:<{}}", row[i], width[i]);
        }
        while (!line.empty() && line.back() == ' ') line.pop_back();
        out += line + '\n';
    };
    for (std::size_t r = 0; r < rows.size(); ++r) {
        emit(rows[r]);
        if (r == 0) {
            Row rule;
            for (const auto w : width) rule.emplace_back(w, '-');
            emit(rule);
        }
    }
    return out;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::filesystem::create_directories(path.parent_path());
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        out << content;
        if (!out) throw Error(fmt::format("cannot write {}", tmp.string()));
    }
    std::filesystem::rename(tmp, path);
}

std::string fixed6(double v) { return fmt::format("{:.6f}", v); }

}  // namespace

void write_classification_report(const std::filesystem::path& dir, const std::string& stem,
                                 const std::map<Variant, std::vector<RankMetrics>>& by_variant) {
    std::vector<Row> csv_rows{
        {"rank", "variant", "total", "attempts", "attempt_rate", "macro_accuracy", "macro_f1", "micro_accuracy"}};
    std::vector<Row> txt_rows{{"Rank", "Variant", "Attempts", "Acc.", "F1", "Micro acc."}};
    for (const Rank rank : kReportedRanks) {
        for (const auto& [variant, metrics] : by_variant) {
            const auto it = std::find_if(metrics.begin(), metrics.end(), [&](const RankMetrics& m) { return m.rank == rank; });
            if (it == metrics.end()) continue;
            const RankMetrics& m = *it;
            const std::string v(to_string(variant));
            const std::string r(to_string(rank));
            csv_rows.push_back({r, v, std::to_string(m.total), std::to_string(m.attempts),
                                fmt::format("{:.4f}", m.attempt_rate), format_metric(m.macro_accuracy),
                                format_metric(m.macro_f1), format_metric(m.micro_accuracy)});
            txt_rows.push_back({r, v, format_attempts(m),
                                format_metric(m.macro_accuracy), format_metric(m.macro_f1),
                                format_metric(m.micro_accuracy)});
        }
    }
    write_file(dir / (stem + ".csv"), csv(csv_rows));
    write_file(dir / (stem + ".txt"), aligned(txt_rows));
}

void write_rag_report(const std::filesystem::path& dir, const std::vector<RagScores>& scores) {
    std::string jsonl;
    std::vector<Row> rows{{"sample_id", "variant", "faithfulness", "claims_total", "claims_supported",
                           "answer_relevancy", "flags"}};
    std::set<Variant> variants;
    for (const auto& s : scores) {
        jsonl += dump_line(to_json(s)) + '\n';
        std::string flags;
        for (const auto* list : {&s.faithfulness.flags, &s.relevancy.flags}) {
            for (const auto& f : *list) flags += (flags.empty() ? "" : ";") + f;
        }
        rows.push_back({s.sample_id, std::string(to_string(s.variant)), format_metric(s.faithfulness.score),
                        std::to_string(s.faithfulness.total), std::to_string(s.faithfulness.supported),
                        format_metric(s.relevancy.score), flags});
        variants.insert(s.variant);
    }

    std::vector<Row> summary{{"variant", "metric", "n", "undefined", "min", "q1", "median", "q3", "max", "iqr",
                              "lower_fence", "upper_fence", "outliers"}};
    for (const Variant v : variants) {
        for (const bool faith : {true, false}) {
            std::vector<double> values;
            std::size_t undefined = 0;
            for (const auto& s : scores) {
                if (s.variant != v) continue;
                const auto& score = faith ? s.faithfulness.score : s.relevancy.score;
                if (score) {
                    values.push_back(*score);
                } else {
                    ++undefined;
                }
            }
            Row row{std::string(to_string(v)), faith ? "faithfulness" : "answer_relevancy"};
            const auto box = box_summary(values);
            row.push_back(std::to_string(values.size()));
            row.push_back(std::to_string(undefined));
            if (box) {
                for (const double x : {box->min, box->q1, box->median, box->q3, box->max, box->iqr, box->lower_fence,
                                       box->upper_fence}) {
                    row.push_back(fixed6(x));
                }
                row.push_back(std::to_string(box->outliers));
            } else {
                row.insert(row.end(), 9, "--");
            }
            summary.push_back(std::move(row));
        }
    }
    write_file(dir / "rag_scores.jsonl", jsonl);
    write_file(dir / "rag_scores.csv", csv(rows));
    write_file(dir / "rag_summary.csv", csv(summary));
    write_file(dir / "rag_summary.txt", aligned(summary));
}

}  // namespace taxorag
