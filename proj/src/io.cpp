#include "rffkm/io.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>
#include <zlib.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "rffkm/metrics.hpp"

namespace fs = std::filesystem;

namespace rffkm {

namespace {

std::string read_text(const std::string& path) {
    if (path.size() > 3 && path.substr(path.size() - 3) == ".gz") {
        gzFile gz = gzopen(path.c_str(), "rb");
        if (!gz) throw IoError("cannot open " + path);
        std::string out;
        char buf[1 << 16];
        int got;
        while ((got = gzread(gz, buf, sizeof(buf))) > 0) {
            out.append(buf, static_cast<std::size_t>(got));
        }
        const bool bad = (got < 0);
        gzclose(gz);
        if (bad) throw IoError("gzip read failed for " + path);
        return out;
    }
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Splits one physical line into fields, honoring double-quote quoting with
// "" escapes. Embedded newlines inside quotes are not supported.
std::vector<std::string> split_csv_line(const std::string& line,
                                        std::size_t line_no) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (quoted) throw ParseError("unterminated quote", line_no);
    fields.push_back(std::move(cur));
    return fields;
}

double parse_number(const std::string& field, std::size_t line_no) {
    std::string trimmed = field;
    const auto first = trimmed.find_first_not_of(" \t");
    const auto last = trimmed.find_last_not_of(" \t");
    if (first == std::string::npos) {
        throw ParseError("empty numeric cell", line_no);
    }
    trimmed = trimmed.substr(first, last - first + 1);
    double value = 0.0;
    const char* begin = trimmed.data();
    const char* end = begin + trimmed.size();
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc{} || ptr != end || !std::isfinite(value)) {
        throw ParseError("cannot parse '" + trimmed + "' as a finite number",
                         line_no);
    }
    return value;
}

std::vector<std::string> split_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::string cur;
    for (char c : text) {
        if (c == '\n') {
            if (!cur.empty() && cur.back() == '\r') cur.pop_back();
            lines.push_back(std::move(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) {
        if (cur.back() == '\r') cur.pop_back();
        lines.push_back(std::move(cur));
    }
    return lines;
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// Exclusive advisory lock on a directory for the duration of a write.
class DirectoryLock {
public:
    explicit DirectoryLock(const fs::path& dir) {
        const fs::path lock_path = dir / ".rffkm.lock";
        fd_ = ::open(lock_path.c_str(), O_CREAT | O_RDWR, 0644);
        if (fd_ < 0) throw IoError("cannot create lock in " + dir.string());
        if (::flock(fd_, LOCK_EX) != 0) {
            ::close(fd_);
            throw IoError("cannot lock " + dir.string());
        }
    }
    ~DirectoryLock() {
        if (fd_ >= 0) {
            ::flock(fd_, LOCK_UN);
            ::close(fd_);
        }
    }
    DirectoryLock(const DirectoryLock&) = delete;
    DirectoryLock& operator=(const DirectoryLock&) = delete;

private:
    int fd_ = -1;
};

std::string sanitize(const std::string& name) {
    std::string out;
    for (char c : name) {
        out.push_back((std::isalnum(static_cast<unsigned char>(c)) || c == '-' ||
                       c == '_')
                          ? c
                          : '_');
    }
    return out.empty() ? std::string("run") : out;
}

void to_json(nlohmann::json& j, const RunTraceRow& row) {
    j = {{"iteration", row.iteration},
         {"s", row.s},
         {"objective", row.objective}};
    if (!row.view_weights.empty()) j["view_weights"] = row.view_weights;
}

void from_json(const nlohmann::json& j, RunTraceRow& row) {
    row.iteration = j.at("iteration").get<int>();
    row.s = j.at("s").get<double>();
    row.objective = j.at("objective").get<double>();
    row.view_weights.clear();
    if (j.contains("view_weights")) {
        row.view_weights = j.at("view_weights").get<std::vector<double>>();
    }
}

}  // namespace

CsvData load_csv(const std::string& path, bool has_header,
                 const std::optional<std::string>& label_column) {
    const auto lines = split_lines(read_text(path));
    std::size_t line_no = 0;
    std::vector<std::string> header;
    std::size_t start = 0;
    if (has_header) {
        if (lines.empty()) throw ParseError("missing header row", 1);
        header = split_csv_line(lines[0], 1);
        start = 1;
    }

    int label_index = -1;
    if (label_column) {
        const std::string& sel = *label_column;
        const bool numeric =
            !sel.empty() &&
            std::all_of(sel.begin(), sel.end(),
                        [](unsigned char c) { return std::isdigit(c); });
        if (numeric) {
            label_index = std::stoi(sel);
        } else {
            if (!has_header) {
                throw InvalidInput(
                    "label column referenced by name but the file has no header");
            }
            const auto it = std::find(header.begin(), header.end(), sel);
            if (it == header.end()) {
                throw ParseError("label column '" + sel + "' not in header", 1);
            }
            label_index = static_cast<int>(it - header.begin());
        }
    }

    std::vector<std::vector<double>> values;
    std::vector<int> raw_labels;
    std::size_t width = 0;
    for (std::size_t li = start; li < lines.size(); ++li) {
        line_no = li + 1;
        if (lines[li].empty()) continue;  // tolerate trailing blank lines
        const auto fields = split_csv_line(lines[li], line_no);
        if (values.empty() && raw_labels.empty()) {
            width = fields.size();
            if (label_index >= static_cast<int>(width)) {
                throw ParseError("label column index out of range", line_no);
            }
        } else if (fields.size() != width) {
            throw ParseError("ragged row: expected " + std::to_string(width) +
                                 " fields, got " + std::to_string(fields.size()),
                             line_no);
        }
        std::vector<double> row;
        row.reserve(width);
        for (std::size_t c = 0; c < fields.size(); ++c) {
            if (static_cast<int>(c) == label_index) {
                raw_labels.push_back(
                    static_cast<int>(parse_number(fields[c], line_no)));
            } else {
                row.push_back(parse_number(fields[c], line_no));
            }
        }
        values.push_back(std::move(row));
    }
    if (values.empty()) {
        throw ParseError("no data rows", std::max<std::size_t>(line_no, 1));
    }

    CsvData out;
    out.X.resize(static_cast<Eigen::Index>(values.size()),
                 static_cast<Eigen::Index>(values[0].size()));
    for (std::size_t i = 0; i < values.size(); ++i) {
        for (std::size_t c = 0; c < values[i].size(); ++c) {
            out.X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) =
                values[i][c];
        }
    }
    if (label_index >= 0) {
        out.labels = dense_relabel(raw_labels);
        out.has_labels = true;
    }
    return out;
}

DatasetManifest DatasetManifest::load(const std::string& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_text(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("manifest: ") + e.what(), 1);
    }
    DatasetManifest manifest;
    manifest.name = j.value("name", fs::path(path).stem().string());
    if (!j.contains("views") || !j["views"].is_array()) {
        throw ValidationError("manifest: missing 'views' array");
    }
    for (const auto& v : j["views"]) {
        ViewEntry entry;
        entry.path = v.at("path").get<std::string>();
        entry.format = v.value("format", std::string("csv"));
        if (entry.format != "csv") {
            throw ValidationError("manifest: unsupported view format '" +
                                  entry.format + "'");
        }
        if (v.contains("sigma")) entry.sigma = v["sigma"].get<double>();
        manifest.views.push_back(std::move(entry));
    }
    if (j.contains("labels")) {
        manifest.labels_path = j["labels"].get<std::string>();
    }
    if (manifest.views.empty()) {
        throw ValidationError("manifest: empty views list");
    }
    return manifest;
}

void DatasetManifest::save(const std::string& path) const {
    nlohmann::json j;
    j["name"] = name;
    j["views"] = nlohmann::json::array();
    for (const auto& v : views) {
        nlohmann::json e = {{"path", v.path}, {"format", v.format}};
        if (v.sigma) e["sigma"] = *v.sigma;
        j["views"].push_back(e);
    }
    if (labels_path) j["labels"] = *labels_path;
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << j.dump(2) << "\n";
}

LoadedDataset load_manifest(const std::string& path, double default_sigma) {
    const DatasetManifest manifest = DatasetManifest::load(path);
    const fs::path base = fs::path(path).parent_path();
    auto resolve = [&](const std::string& p) {
        const fs::path fp(p);
        return fp.is_absolute() ? fp.string() : (base / fp).string();
    };

    LoadedDataset data;
    data.name = manifest.name;
    for (const auto& view : manifest.views) {
        const CsvData csv = load_csv(resolve(view.path), false, std::nullopt);
        data.views.push_back(csv.X);
        data.sigmas.push_back(view.sigma.value_or(default_sigma));
    }
    for (std::size_t l = 1; l < data.views.size(); ++l) {
        if (data.views[l].rows() != data.views[0].rows()) {
            throw ValidationError(
                "row-count mismatch between view '" + manifest.views[0].path +
                "' (" + std::to_string(data.views[0].rows()) + ") and view '" +
                manifest.views[l].path + "' (" +
                std::to_string(data.views[l].rows()) + ")");
        }
    }
    if (manifest.labels_path) {
        const CsvData labels =
            load_csv(resolve(*manifest.labels_path), false, std::string("0"));
        if (static_cast<Eigen::Index>(labels.labels.size()) !=
            data.views[0].rows()) {
            throw ValidationError("labels row count does not match the views");
        }
        data.labels = labels.labels;
        data.has_labels = true;
    }
    return data;
}

RunPaths write_run(const RunRecord& record, const std::string& out_dir) {
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (!fs::is_directory(out_dir)) {
        throw IoError("cannot create output directory " + out_dir);
    }
    DirectoryLock lock{fs::path(out_dir)};

    const std::string stem = sanitize(record.dataset) + "_" +
                             sanitize(record.solver) + "_seed" +
                             std::to_string(record.seed);
    RunPaths paths;
    paths.record = (fs::path(out_dir) / (stem + ".json")).string();
    paths.assignments =
        (fs::path(out_dir) / (stem + ".assignments.tsv")).string();
    paths.trace = (fs::path(out_dir) / (stem + ".trace.tsv")).string();

    nlohmann::json j;
    j["schema_version"] = record.schema_version;
    j["solver"] = record.solver;
    j["dataset"] = record.dataset;
    j["seed"] = record.seed;
    j["config"] = record.config;
    j["trace"] = nlohmann::json::array();
    for (const auto& row : record.trace) {
        nlohmann::json r;
        to_json(r, row);
        j["trace"].push_back(r);
    }
    j["metrics"] = record.metrics;
    j["assignments"] = record.assignments;
    j["timing"] = {{"started_at", record.timing.started_at},
                   {"finished_at", record.timing.finished_at},
                   {"seconds", record.timing.seconds}};
    {
        std::ofstream out(paths.record);
        if (!out) throw IoError("cannot write " + paths.record);
        out << j.dump(2) << "\n";
    }
    {
        std::ofstream out(paths.assignments);
        if (!out) throw IoError("cannot write " + paths.assignments);
        out << "row\tcluster\n";
        for (std::size_t i = 0; i < record.assignments.size(); ++i) {
            out << i << "\t" << record.assignments[i] << "\n";
        }
    }
    {
        std::ofstream out(paths.trace);
        if (!out) throw IoError("cannot write " + paths.trace);
        out << "iter\ts\tobjective";
        const std::size_t n_alpha =
            record.trace.empty() ? 0 : record.trace.front().view_weights.size();
        for (std::size_t l = 1; l <= n_alpha; ++l) {
            out << "\talpha_" << l;
        }
        out << "\n";
        for (const auto& row : record.trace) {
            out << row.iteration << "\t" << format_double(row.s) << "\t"
                << format_double(row.objective);
            for (double a : row.view_weights) out << "\t" << format_double(a);
            out << "\n";
        }
    }
    return paths;
}

RunRecord load_run(const std::string& record_path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_text(record_path));
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("run record: ") + e.what(), 1);
    }
    RunRecord record;
    record.schema_version = j.at("schema_version").get<int>();
    record.solver = j.at("solver").get<std::string>();
    record.dataset = j.at("dataset").get<std::string>();
    record.seed = j.at("seed").get<std::uint64_t>();
    record.config = j.at("config");
    for (const auto& r : j.at("trace")) {
        RunTraceRow row;
        from_json(r, row);
        record.trace.push_back(std::move(row));
    }
    record.metrics = j.at("metrics").get<std::map<std::string, double>>();
    record.assignments = j.at("assignments").get<std::vector<int>>();
    const auto& t = j.at("timing");
    record.timing.started_at = t.at("started_at").get<std::string>();
    record.timing.finished_at = t.at("finished_at").get<std::string>();
    record.timing.seconds =
        t.at("seconds").get<std::map<std::string, double>>();
    return record;
}

std::string canonical_record_text(const std::string& record_path) {
    nlohmann::json j = nlohmann::json::parse(read_text(record_path));
    j.erase("timing");
    return j.dump(2);
}

}  // namespace rffkm
