// SPDX-License-Identifier: Apache-2.0
//
// Preference-accuracy protocols, per-dimension accuracy and run summaries.
#pragma once

#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "mcsc/world.hpp"

namespace mcsc {

/// tau: exact match over all records, ties included.
/// diff: records with a tie label are dropped; a tie prediction on the rest
/// is wrong.
enum class PrefMode { Tau, Diff };

PrefMode pref_mode_from_string(const std::string& name);

struct PrefRecord {
    Verdict prediction = Verdict::Tie;
    Verdict label = Verdict::Tie;
};

/// Throws InputError on empty input, UndefinedResultError for diff over
/// tie-only labels.
double preference_accuracy(std::span<const PrefRecord> records, PrefMode mode);
double preference_accuracy(std::span<const Verdict> predictions, std::span<const Verdict> labels, PrefMode mode);

/// Exact-match fraction. Throws InputError on empty input or length mismatch.
double dim_accuracy(std::span<const int> predictions, std::span<const int> labels);

struct FieldStats {
    long count = 0;
    double first = 0.0;
    double last = 0.0;
    double mean = 0.0;
    double min = 0.0;
    double max = 0.0;
};

struct MalformedLine {
    long line = 0;  ///< 1-based
    std::string message;
};

struct RunSummary {
    long records = 0;
    std::map<std::string, FieldStats> fields;  ///< numeric fields only
    std::vector<MalformedLine> malformed;
    /// Numeric fields per parsed record, in stream order.
    std::vector<std::map<std::string, double>> rows;
};

/// Aggregates a JSONL metrics stream. Blank lines are ignored; lines that are
/// not JSON objects are recorded in `malformed` and skipped.
RunSummary summarize_run(std::istream& in);

/// Single JSON document; keys sorted so output is byte-stable.
std::string summary_json(const RunSummary& summary);

/// CSV with header `step,<columns...>`; one row per record, empty cells for
/// missing fields. Rows lacking a step use their record index.
void write_curves(std::ostream& out, const RunSummary& summary, const std::vector<std::string>& columns);

}  // namespace mcsc
