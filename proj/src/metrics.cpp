// SPDX-License-Identifier: Apache-2.0
#include "mcsc/metrics.hpp"

#include <algorithm>
#include <istream>
#include <ostream>

#include "json.hpp"

#include "mcsc/errors.hpp"
#include "mcsc/numeric.hpp"

namespace mcsc {

PrefMode pref_mode_from_string(const std::string& name) {
    if (name == "tau") return PrefMode::Tau;
    if (name == "diff") return PrefMode::Diff;
    throw ConfigError("unknown accuracy mode '" + name + "' (expected tau or diff)");
}

double preference_accuracy(std::span<const PrefRecord> records, PrefMode mode) {
    if (records.empty()) throw InputError("preference_accuracy: no records");
    long eligible = 0, correct = 0;
    for (const auto& r : records) {
        if (mode == PrefMode::Diff && r.label == Verdict::Tie) continue;
        ++eligible;
        if (r.prediction == r.label) ++correct;
    }
    if (eligible == 0) throw UndefinedResultError("preference_accuracy: diff mode undefined when every label is a tie");
    return static_cast<double>(correct) / static_cast<double>(eligible);
}

double preference_accuracy(std::span<const Verdict> predictions, std::span<const Verdict> labels, PrefMode mode) {
    if (predictions.size() != labels.size()) throw InputError("preference_accuracy: length mismatch");
    std::vector<PrefRecord> records;
    records.reserve(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) records.push_back({predictions[i], labels[i]});
    return preference_accuracy(records, mode);
}

double dim_accuracy(std::span<const int> predictions, std::span<const int> labels) {
    if (predictions.size() != labels.size()) throw InputError("dim_accuracy: length mismatch");
    if (labels.empty()) throw InputError("dim_accuracy: no records");
    long correct = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) correct += predictions[i] == labels[i] ? 1 : 0;
    return static_cast<double>(correct) / static_cast<double>(labels.size());
}

RunSummary summarize_run(std::istream& in) {
    RunSummary s;
    std::map<std::string, double> sums;
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            s.malformed.push_back({line_no, e.what()});
            continue;
        }
        if (!j.is_object()) {
            s.malformed.push_back({line_no, "not a JSON object"});
            continue;
        }
        ++s.records;
        std::map<std::string, double> row;
        for (const auto& [key, value] : j.items()) {
            if (!value.is_number()) continue;
            const double x = value.get<double>();
            row[key] = x;
            auto& f = s.fields[key];
            if (f.count == 0) {
                f.first = f.min = f.max = x;
            }
            f.last = x;
            f.min = std::min(f.min, x);
            f.max = std::max(f.max, x);
            ++f.count;
            sums[key] += x;
        }
        s.rows.push_back(std::move(row));
    }
    for (auto& [key, f] : s.fields) f.mean = sums[key] / static_cast<double>(f.count);
    return s;
}

std::string summary_json(const RunSummary& summary) {
    nlohmann::ordered_json j;
    j["records"] = summary.records;
    nlohmann::ordered_json fields = nlohmann::ordered_json::object();
    for (const auto& [key, f] : summary.fields) {
        fields[key] = {{"count", f.count}, {"first", f.first}, {"last", f.last},
                       {"mean", f.mean},   {"min", f.min},     {"max", f.max}};
    }
    j["fields"] = fields;
    nlohmann::ordered_json bad = nlohmann::ordered_json::array();
    for (const auto& m : summary.malformed) bad.push_back({{"line", m.line}, {"message", m.message}});
    j["malformed"] = bad;
    return j.dump(2);
}

void write_curves(std::ostream& out, const RunSummary& summary, const std::vector<std::string>& columns) {
    out << "step";
    for (const auto& c : columns) out << ',' << c;
    out << '\n';
    for (std::size_t i = 0; i < summary.rows.size(); ++i) {
        const auto& row = summary.rows[i];
        const auto step = row.find("step");
        out << (step != row.end() ? format_double(step->second) : std::to_string(i));
        for (const auto& c : columns) {
            out << ',';
            if (const auto it = row.find(c); it != row.end()) out << format_double(it->second);
        }
        out << '\n';
    }
}

}  // namespace mcsc
