#pragma once

#include <Eigen/Dense>
#include <json.hpp>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rffkm/common.hpp"

namespace rffkm {

struct CsvData {
    Eigen::MatrixXd X;
    std::vector<int> labels;
    bool has_labels = false;
};

/// Loads a numeric CSV (RFC-4180-style quoting, dot decimals, optional .gz).
/// `label_column` selects a column by header name, or by 0-based index when
/// it parses as an integer; the column is extracted and dense-relabeled.
CsvData load_csv(const std::string& path, bool has_header = false,
                 const std::optional<std::string>& label_column = std::nullopt);

struct ViewEntry {
    std::string path;
    std::string format = "csv";
    std::optional<double> sigma;  // per-view bandwidth override
};

struct DatasetManifest {
    std::string name;
    std::vector<ViewEntry> views;
    std::optional<std::string> labels_path;

    static DatasetManifest load(const std::string& path);
    void save(const std::string& path) const;
};

struct LoadedDataset {
    std::string name;
    std::vector<Eigen::MatrixXd> views;
    std::vector<double> sigmas;  // resolved per view
    std::vector<int> labels;
    bool has_labels = false;
};

/// Loads every view of a manifest, validates equal row counts, applies
/// per-view sigma overrides on top of `default_sigma`. Relative paths are
/// resolved against the manifest's directory.
LoadedDataset load_manifest(const std::string& path, double default_sigma);

struct RunTraceRow {
    int iteration = 0;
    double s = 0.0;
    double objective = 0.0;
    std::vector<double> view_weights;  // empty for single-view runs

    bool operator==(const RunTraceRow&) const = default;
};

// Wall-clock data lives apart from the scientific payload so determinism
// checks can strip it in one place.
struct RunTiming {
    std::string started_at;
    std::string finished_at;
    std::map<std::string, double> seconds;  // per phase

    bool operator==(const RunTiming&) const = default;
};

struct RunRecord {
    int schema_version = 1;
    std::string solver;
    std::string dataset;
    std::uint64_t seed = 0;
    nlohmann::json config;
    std::vector<RunTraceRow> trace;
    std::map<std::string, double> metrics;
    std::vector<int> assignments;
    RunTiming timing;

    bool operator==(const RunRecord&) const = default;
};

struct RunPaths {
    std::string record;       // <stem>.json
    std::string assignments;  // <stem>.assignments.tsv
    std::string trace;        // <stem>.trace.tsv
};

/// Writes the record (JSON), a flat assignments table, and a TSV trace with
/// header iter/s/objective/alpha_1..alpha_L. Takes an exclusive lock on the
/// directory while writing.
RunPaths write_run(const RunRecord& record, const std::string& out_dir);

RunRecord load_run(const std::string& record_path);

/// Record file contents with the timing block removed, for byte-level
/// determinism comparisons.
std::string canonical_record_text(const std::string& record_path);

}  // namespace rffkm
