#include "leaklock/run_record.hpp"

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "leaklock/checkpoint.hpp"

namespace leaklock {

namespace fs = std::filesystem;

namespace {

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

double parse_double(const std::string& s) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc()) throw IoError("run record: bad numeric field '" + s + "'");
    return v;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

}  // namespace

void RunRecord::validate() const {
    for (size_t i = 1; i < metrics.size(); ++i)
        if (metrics[i].step <= metrics[i - 1].step)
            throw ConfigError("RunRecord: metric steps must be strictly increasing");
    for (size_t i = 1; i < gamma_log.size(); ++i)
        if (gamma_log[i].first <= gamma_log[i - 1].first)
            throw ConfigError("RunRecord: gamma snapshots must be strictly increasing");
}

void save_run_record(const RunRecord& record, const std::string& dir) {
    record.validate();
    fs::create_directories(fs::path(dir) / "checkpoints");

    {
        std::ofstream out(fs::path(dir) / "config.toml", std::ios::binary);
        out << record.config_toml;
        if (!out) throw IoError("run record: cannot write config.toml in " + dir);
    }
    {
        std::ofstream out(fs::path(dir) / "metrics.csv", std::ios::binary);
        out << "step,loss,val_rank,val_loss\n";
        for (const auto& row : record.metrics) {
            out << row.step << ',' << fmt_double(row.loss) << ',';
            if (row.has_val)
                out << fmt_double(row.val_rank) << ',' << fmt_double(row.val_loss);
            else
                out << ',';
            out << '\n';
        }
        if (!out) throw IoError("run record: cannot write metrics.csv in " + dir);
    }
    {
        std::ofstream out(fs::path(dir) / "gamma.csv", std::ios::binary);
        out << "step";
        const Index t = record.gamma_log.empty() ? 0 : record.gamma_log.front().second.size();
        for (Index i = 0; i < t; ++i) out << ",g" << (i + 1);
        out << '\n';
        for (const auto& [step, gamma] : record.gamma_log) {
            out << step;
            for (Index i = 0; i < gamma.size(); ++i) out << ',' << fmt_double(gamma[i]);
            out << '\n';
        }
        if (!out) throw IoError("run record: cannot write gamma.csv in " + dir);
    }
    {
        std::ofstream out(fs::path(dir) / "status.txt", std::ios::binary);
        out << (record.failed ? "failed" : "ok") << '\n'
            << record.failure_reason << '\n'
            << record.best_step << '\n'
            << fmt_double(record.best_val_rank) << '\n';
    }
    if (record.best_model.n_layers() > 0)
        save_checkpoint(record.best_model, (fs::path(dir) / "checkpoints" / "best.llmd").string());
    if (record.final_model.n_layers() > 0)
        save_checkpoint(record.final_model, (fs::path(dir) / "checkpoints" / "final.llmd").string());
}

RunRecord load_run_record(const std::string& dir) {
    RunRecord record;
    {
        std::ifstream in(fs::path(dir) / "config.toml", std::ios::binary);
        if (!in) throw IoError("run record: missing config.toml in " + dir);
        std::stringstream ss;
        ss << in.rdbuf();
        record.config_toml = ss.str();
    }
    {
        std::ifstream in(fs::path(dir) / "metrics.csv");
        if (!in) throw IoError("run record: missing metrics.csv in " + dir);
        std::string line;
        std::getline(in, line);  // header
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            auto fields = split_csv_line(line);
            if (fields.size() < 4) throw IoError("run record: malformed metrics row");
            RunRecord::MetricRow row;
            row.step = static_cast<int64_t>(parse_double(fields[0]));
            row.loss = parse_double(fields[1]);
            if (!fields[2].empty()) {
                row.has_val = true;
                row.val_rank = parse_double(fields[2]);
                row.val_loss = parse_double(fields[3]);
            }
            record.metrics.push_back(row);
        }
    }
    {
        std::ifstream in(fs::path(dir) / "gamma.csv");
        if (!in) throw IoError("run record: missing gamma.csv in " + dir);
        std::string line;
        std::getline(in, line);  // header
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            auto fields = split_csv_line(line);
            Vector gamma(static_cast<Index>(fields.size()) - 1);
            for (Index i = 0; i < gamma.size(); ++i) gamma[i] = parse_double(fields[i + 1]);
            record.gamma_log.emplace_back(static_cast<int64_t>(parse_double(fields[0])),
                                          std::move(gamma));
        }
    }
    {
        std::ifstream in(fs::path(dir) / "status.txt");
        if (in) {
            std::string status;
            std::getline(in, status);
            record.failed = status == "failed";
            std::getline(in, record.failure_reason);
            std::string field;
            if (std::getline(in, field) && !field.empty())
                record.best_step = static_cast<int64_t>(parse_double(field));
            if (std::getline(in, field) && !field.empty())
                record.best_val_rank = parse_double(field);
        }
    }
    const auto best_path = fs::path(dir) / "checkpoints" / "best.llmd";
    if (fs::exists(best_path)) record.best_model = load_checkpoint(best_path.string());
    const auto final_path = fs::path(dir) / "checkpoints" / "final.llmd";
    if (fs::exists(final_path)) record.final_model = load_checkpoint(final_path.string());
    record.validate();
    return record;
}

}  // namespace leaklock
