#include "clare/harness/report.hpp"

#include "clare/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace clare::harness {

using nlohmann::json;

namespace {

Spread spread_of(const std::vector<double>& xs) {
    Spread s;
    s.n = xs.size();
    if (xs.empty()) {
        return s;
    }
    double sum = 0.0;
    for (const double x : xs) {
        sum += x;
    }
    s.mean = sum / static_cast<double>(xs.size());
    if (xs.size() > 1) {
        double ss = 0.0;
        for (const double x : xs) {
            ss += (x - s.mean) * (x - s.mean);
        }
        s.sd = std::sqrt(ss / static_cast<double>(xs.size() - 1));
    }
    return s;
}

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> read_optional(const json& j) {
    if (j.is_null()) {
        return std::nullopt;
    }
    return j.get<double>();
}

json spread_json(const Spread& s) { return {{"mean", s.mean}, {"sd", s.sd}, {"n", s.n}}; }

json optional_spread(const std::optional<Spread>& s) { return s ? spread_json(*s) : json(nullptr); }

json record_json(const MetricsRecord& r, bool include_timing) {
    json per_class = json::array();
    for (const auto& c : r.per_class) {
        per_class.push_back({{"label", c.label}, {"accuracy", c.accuracy}, {"support", c.support}});
    }
    json trace = json::array();
    for (const auto& l : r.loss_trace) {
        trace.push_back(
            {{"total", l.total}, {"classification", l.classification}, {"reconstruction", l.reconstruction}, {"kl", l.kl}});
    }
    json out = {{"increment", r.increment},
                {"classes_seen", r.classes_seen},
                {"overall_accuracy", r.overall_accuracy},
                {"per_class", per_class},
                {"train_samples", r.train_samples},
                {"replay_samples", r.replay_samples},
                {"loss_trace", trace}};
    if (include_timing) {
        out["wall_seconds"] = r.wall_seconds;
    }
    return out;
}

MetricsRecord record_from_json(const json& j) {
    MetricsRecord r;
    r.increment = j.at("increment").get<std::size_t>();
    r.classes_seen = j.at("classes_seen").get<std::vector<std::int32_t>>();
    r.overall_accuracy = j.at("overall_accuracy").get<double>();
    for (const auto& c : j.at("per_class")) {
        r.per_class.push_back(
            {c.at("label").get<std::int32_t>(), c.at("accuracy").get<double>(), c.at("support").get<std::size_t>()});
    }
    r.train_samples = j.at("train_samples").get<std::size_t>();
    r.replay_samples = j.at("replay_samples").get<std::size_t>();
    for (const auto& l : j.at("loss_trace")) {
        r.loss_trace.push_back({l.at("total").get<double>(), l.at("classification").get<double>(),
                                l.at("reconstruction").get<double>(), l.at("kl").get<double>()});
    }
    r.wall_seconds = j.value("wall_seconds", 0.0);
    return r;
}

void check_record(const MetricsRecord& r) {
    if (!(r.overall_accuracy >= 0.0 && r.overall_accuracy <= 100.0)) {
        throw ConfigError("record " + std::to_string(r.increment) + " has accuracy outside [0, 100]");
    }
    std::vector<std::int32_t> seen = r.classes_seen;
    std::vector<std::int32_t> scored;
    for (const auto& c : r.per_class) {
        scored.push_back(c.label);
    }
    std::sort(seen.begin(), seen.end());
    if (seen != scored) {
        throw ConfigError("record " + std::to_string(r.increment) + " per-class accuracies do not cover the seen classes");
    }
}

} // namespace

double average_over_tasks(std::span<const double> accuracies, std::size_t k) {
    if (k == 0) {
        throw ConfigError("average_over_tasks needs k >= 1");
    }
    if (k > accuracies.size()) {
        throw ConfigError("average_over_tasks: k = " + std::to_string(k) + " but only " +
                          std::to_string(accuracies.size()) + " increments");
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        sum += accuracies[i];
    }
    return sum / static_cast<double>(k);
}

double average_over_tasks(std::span<const MetricsRecord> records, std::size_t k) {
    std::vector<double> acc;
    acc.reserve(records.size());
    for (const auto& r : records) {
        acc.push_back(r.overall_accuracy);
    }
    return average_over_tasks(acc, k);
}

RunSummary summarize(std::span<const MetricsRecord> records) {
    RunSummary s;
    if (records.empty()) {
        return s;
    }
    s.final_accuracy = records.back().overall_accuracy;
    if (records.size() >= 5) {
        s.average_5 = average_over_tasks(records, 5);
    }
    if (records.size() >= 10) {
        s.average_10 = average_over_tasks(records, 10);
    }
    return s;
}

AggregateTable aggregate(std::span<const RunResult> runs) {
    AggregateTable table;
    if (runs.empty()) {
        return table;
    }
    std::size_t increments = runs.front().records.size();
    for (const auto& run : runs) {
        increments = std::min(increments, run.records.size());
    }
    for (std::size_t i = 0; i < increments; ++i) {
        std::vector<double> xs;
        for (const auto& run : runs) {
            xs.push_back(run.records[i].overall_accuracy);
        }
        table.per_increment.push_back(spread_of(xs));
    }
    std::vector<double> finals;
    std::vector<double> avg5;
    std::vector<double> avg10;
    for (const auto& run : runs) {
        const RunSummary s = summarize(run.records);
        finals.push_back(s.final_accuracy);
        if (s.average_5) {
            avg5.push_back(*s.average_5);
        }
        if (s.average_10) {
            avg10.push_back(*s.average_10);
        }
    }
    table.final_accuracy = spread_of(finals);
    if (avg5.size() == runs.size()) {
        table.average_5 = spread_of(avg5);
    }
    if (avg10.size() == runs.size()) {
        table.average_10 = spread_of(avg10);
    }
    return table;
}

ResultsReport make_report(ExperimentConfig config, std::vector<RunResult> runs, double total_wall_seconds) {
    ResultsReport report;
    report.config = std::move(config);
    for (auto& run : runs) {
        run.summary = summarize(run.records);
    }
    report.runs = std::move(runs);
    report.aggregate = aggregate(report.runs);
    report.total_wall_seconds = total_wall_seconds;
    return report;
}

json report_to_json(const ResultsReport& report, bool include_timing) {
    json runs = json::array();
    for (const auto& run : report.runs) {
        json records = json::array();
        for (const auto& r : run.records) {
            records.push_back(record_json(r, include_timing));
        }
        runs.push_back({{"seed", run.seed},
                        {"records", records},
                        {"summary",
                         {{"final_accuracy", run.summary.final_accuracy},
                          {"average_5", optional_number(run.summary.average_5)},
                          {"average_10", optional_number(run.summary.average_10)}}}});
    }
    json per_increment = json::array();
    for (const auto& s : report.aggregate.per_increment) {
        per_increment.push_back(spread_json(s));
    }
    json out = {
        {"format_version", kReportFormatVersion},
        {"artifact_version", report.artifact_version},
        {"conventions",
         {{"runs", "single run per seed, accuracy after the last epoch of each increment"},
          {"aggregate", "mean and sample standard deviation over seeds"},
          {"accuracy", "percent correct on the test rows of all classes seen so far"}}},
        {"config", to_json(report.config)},
        {"runs", runs},
        {"aggregate",
         {{"per_increment", per_increment},
          {"final_accuracy", spread_json(report.aggregate.final_accuracy)},
          {"average_5", optional_spread(report.aggregate.average_5)},
          {"average_10", optional_spread(report.aggregate.average_10)}}},
    };
    if (include_timing) {
        out["total_wall_seconds"] = report.total_wall_seconds;
    }
    return out;
}

ResultsReport report_from_json(const json& j) {
    const int version = j.value("format_version", -1);
    if (version != kReportFormatVersion) {
        throw ConfigError("report format version " + std::to_string(version) + " is not supported (expected " +
                          std::to_string(kReportFormatVersion) + ")");
    }
    try {
        ExperimentConfig config = config_from_json(j.at("config"));
        std::vector<RunResult> runs;
        for (const auto& rj : j.at("runs")) {
            RunResult run;
            run.seed = rj.at("seed").get<std::uint64_t>();
            for (const auto& rec : rj.at("records")) {
                run.records.push_back(record_from_json(rec));
                check_record(run.records.back());
            }
            const auto& sj = rj.at("summary");
            run.summary = {sj.at("final_accuracy").get<double>(), read_optional(sj.at("average_5")),
                           read_optional(sj.at("average_10"))};
            if (!(run.summary == summarize(run.records))) {
                throw ConfigError("report summary for seed " + std::to_string(run.seed) +
                                  " is inconsistent with its records");
            }
            runs.push_back(std::move(run));
        }
        ResultsReport report;
        report.config = std::move(config);
        report.runs = std::move(runs);
        report.aggregate = aggregate(report.runs);
        report.artifact_version = j.at("artifact_version").get<std::string>();
        report.total_wall_seconds = j.value("total_wall_seconds", 0.0);
        if (report_to_json(report, false).at("aggregate") != j.at("aggregate")) {
            throw ConfigError("report aggregate table is inconsistent with its records");
        }
        return report;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed report: ") + e.what());
    }
}

void write_report(const ResultsReport& report, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot open " + path.string() + " for writing");
    }
    out << report_to_json(report).dump(2) << '\n';
    if (!out) {
        throw std::runtime_error("failed writing " + path.string());
    }
}

ResultsReport read_report(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw MissingFileError("cannot open report " + path.string());
    }
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError("report " + path.string() + " is not valid JSON: " + e.what());
    }
    return report_from_json(j);
}

void write_csv(const ResultsReport& report, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot open " + path.string() + " for writing");
    }
    out << "seed,increment,class,accuracy\n";
    out << std::setprecision(17);
    for (const auto& run : report.runs) {
        for (const auto& r : run.records) {
            out << run.seed << ',' << r.increment << ",all," << r.overall_accuracy << '\n';
            for (const auto& c : r.per_class) {
                out << run.seed << ',' << r.increment << ',' << c.label << ',' << c.accuracy << '\n';
            }
        }
    }
}

std::string format_table(const ResultsReport& report) {
    std::ostringstream out;
    const auto& cfg = report.config;
    out << "mode " << to_string(cfg.mode) << ", dataset " << to_string(cfg.dataset) << ", g = " << cfg.group_size
        << ", epochs " << cfg.epochs << "\n";
    std::size_t columns = 0;
    for (const auto& run : report.runs) {
        columns = std::max(columns, run.records.size());
    }
    out << std::left << std::setw(16) << "run";
    for (std::size_t i = 0; i < columns; ++i) {
        out << std::right << std::setw(8) << ("inc" + std::to_string(i));
    }
    out << std::setw(9) << "avg5" << std::setw(9) << "avg10" << "\n";
    out << std::fixed << std::setprecision(1);
    for (const auto& run : report.runs) {
        out << std::left << std::setw(16) << ("g=" + std::to_string(cfg.group_size) + " seed=" + std::to_string(run.seed));
        for (const auto& r : run.records) {
            out << std::right << std::setw(8) << r.overall_accuracy;
        }
        for (std::size_t i = run.records.size(); i < columns; ++i) {
            out << std::setw(8) << "";
        }
        out << std::right << std::setw(9);
        run.summary.average_5 ? out << *run.summary.average_5 : out << "-";
        out << std::setw(9);
        run.summary.average_10 ? out << *run.summary.average_10 : out << "-";
        out << "\n";
    }
    if (report.runs.size() > 1) {
        out << std::left << std::setw(16) << "mean +- sd";
        for (const auto& s : report.aggregate.per_increment) {
            std::ostringstream cell;
            cell << std::fixed << std::setprecision(1) << s.mean << "+-" << s.sd;
            out << std::right << std::setw(12) << cell.str();
        }
        out << "\n";
    }
    return out.str();
}

} // namespace clare::harness
