#include "censoring/io/results_csv.hpp"

#include "censoring/errors.hpp"

#include <fmt/format.h>

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>

namespace censoring::io {

namespace {

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        fields.push_back(line.substr(start, comma - start));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return fields;
}

template <typename T>
T parse_number(const std::string& text, const char* field, std::size_t line) {
    T value{};
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc() || ptr != end) {
        throw FormatError(fmt::format("results line {}: bad {} '{}'", line, field, text));
    }
    return value;
}

}  // namespace

std::string format_result_row(const stats::RunResult& r) {
    const bool control = r.lambda == 0.0;
    const std::string mode = control ? "none" : std::string(censor::to_string(r.mode));
    const std::string method = control ? "none" : std::string(censor::to_string(r.method));
    std::string line = fmt::format("{},{},{},{},{},{},{},{},{},", r.run_id, r.seed, r.fold, mode, method, r.lambda,
                                   train::to_string(r.projection), train::to_string(r.eval_point), r.epochs_trained);
    if (r.failed) return line + ",,,,,failed";
    const std::string val = r.val_ba ? fmt::format("{}", *r.val_ba) : std::string();
    return line + fmt::format("{},{},{},{},{},ok", r.train_ba, val, r.test_ba, r.overfit_ratio, r.probe_ba);
}

void write_results_csv(std::ostream& out, const std::vector<stats::RunResult>& rows) {
    out << kResultsHeader << '\n';
    for (const auto& row : rows) out << format_result_row(row) << '\n';
}

std::vector<stats::RunResult> read_results_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != kResultsHeader) {
        throw FormatError("results line 1: header does not match the results schema");
    }
    std::vector<stats::RunResult> rows;
    std::size_t number = 1;
    while (std::getline(in, line)) {
        ++number;
        if (line.empty()) continue;
        const auto f = split_fields(line);
        if (f.size() != 15) {
            throw FormatError(fmt::format("results line {}: expected 15 fields, found {}", number, f.size()));
        }
        stats::RunResult r;
        r.run_id = parse_number<std::uint64_t>(f[0], "run_id", number);
        r.seed = parse_number<std::uint64_t>(f[1], "seed", number);
        r.fold = parse_number<int>(f[2], "fold", number);
        r.lambda = parse_number<double>(f[5], "lambda", number);
        try {
            if (f[3] != "none") r.mode = censor::parse_mode(f[3]);
            if (f[4] != "none") r.method = censor::parse_method(f[4]);
            r.projection = train::parse_projection(f[6]);
            r.eval_point = train::parse_eval_point(f[7]);
        } catch (const ConfigError& e) {
            throw FormatError(fmt::format("results line {}: {}", number, e.what()));
        }
        r.epochs_trained = parse_number<int>(f[8], "epochs_trained", number);
        if (f[14] == "failed") {
            r.failed = true;
        } else if (f[14] == "ok") {
            r.train_ba = parse_number<double>(f[9], "train_ba", number);
            if (!f[10].empty()) r.val_ba = parse_number<double>(f[10], "val_ba", number);
            r.test_ba = parse_number<double>(f[11], "test_ba", number);
            r.overfit_ratio = parse_number<double>(f[12], "overfit_ratio", number);
            r.probe_ba = parse_number<double>(f[13], "probe_ba", number);
        } else {
            throw FormatError(fmt::format("results line {}: unknown status '{}'", number, f[14]));
        }
        rows.push_back(r);
    }
    return rows;
}

std::vector<stats::RunResult> read_results_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open " + path.string());
    return read_results_csv(in);
}

}  // namespace censoring::io
