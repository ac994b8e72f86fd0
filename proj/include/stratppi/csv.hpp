#pragma once

#include <cmath>
#include <cstddef>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "stratppi/errors.hpp"

namespace stratppi {

/// One parsed CSV row. An empty label cell marks an unlabeled row.
struct EvaluationCsvRow {
    std::optional<double> label;
    double prediction = 0.0;
    std::optional<double> confidence;
    std::optional<long> stratum;
};

struct CsvPool {
    std::vector<EvaluationCsvRow> rows;
    std::size_t labeled_count = 0;
    std::size_t unlabeled_count = 0;
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.push_back("");
    return cells;
}

inline std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

inline double parse_number(const std::string& cell, std::size_t row, const std::string& column) {
    std::size_t consumed = 0;
    double v;
    try {
        v = std::stod(cell, &consumed);
    } catch (const std::exception&) {
        throw data_error("csv row " + std::to_string(row) + ", column '" + column +
                         "': cannot parse '" + cell + "'");
    }
    if (consumed != cell.size() || !std::isfinite(v))
        throw data_error("csv row " + std::to_string(row) + ", column '" + column +
                         "': cannot parse '" + cell + "'");
    return v;
}

} // namespace detail

/// Loads a header-named CSV with columns label, prediction, confidence,
/// stratum (extra columns ignored). In binary mode labels must be 0/1 and
/// predictions must lie in [0,1].
inline CsvPool load_csv(const std::string& path, bool binary = false) {
    std::ifstream in(path);
    if (!in) throw data_error("cannot open file: " + path);

    std::string line;
    if (!std::getline(in, line)) throw data_error("empty file: " + path);
    auto header = detail::split_csv_line(line);
    long label_col = -1, pred_col = -1, conf_col = -1, strat_col = -1;
    for (std::size_t i = 0; i < header.size(); ++i) {
        std::string name = detail::trim(header[i]);
        if (name == "label") label_col = static_cast<long>(i);
        else if (name == "prediction") pred_col = static_cast<long>(i);
        else if (name == "confidence") conf_col = static_cast<long>(i);
        else if (name == "stratum") strat_col = static_cast<long>(i);
    }
    if (pred_col < 0) throw data_error(path + ": header is missing the 'prediction' column");

    CsvPool pool;
    std::size_t row_index = 1;
    while (std::getline(in, line)) {
        ++row_index;
        if (detail::trim(line).empty()) continue;
        auto cells = detail::split_csv_line(line);
        auto cell_at = [&](long col) -> std::string {
            return (col >= 0 && static_cast<std::size_t>(col) < cells.size())
                       ? detail::trim(cells[static_cast<std::size_t>(col)])
                       : "";
        };

        EvaluationCsvRow row;
        row.prediction = detail::parse_number(cell_at(pred_col), row_index, "prediction");
        if (binary && !(row.prediction >= 0.0 && row.prediction <= 1.0))
            throw data_error("csv row " + std::to_string(row_index) +
                             ": prediction outside [0,1] in binary mode");

        std::string label_cell = cell_at(label_col);
        if (!label_cell.empty()) {
            double y = detail::parse_number(label_cell, row_index, "label");
            if (binary && y != 0.0 && y != 1.0)
                throw data_error("csv row " + std::to_string(row_index) +
                                 ": label must be 0 or 1 in binary mode, got " + label_cell);
            row.label = y;
            ++pool.labeled_count;
        } else {
            ++pool.unlabeled_count;
        }

        std::string conf_cell = cell_at(conf_col);
        if (!conf_cell.empty()) row.confidence = detail::parse_number(conf_cell, row_index, "confidence");

        std::string strat_cell = cell_at(strat_col);
        if (!strat_cell.empty())
            row.stratum = static_cast<long>(detail::parse_number(strat_cell, row_index, "stratum"));

        pool.rows.push_back(row);
    }
    return pool;
}

} // namespace stratppi
