#include "knnids/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include "knnids/error.hpp"

namespace knnids::streams {

namespace {

using nlohmann::json;

std::string_view trim(std::string_view s) {
    const auto ws = " \t\r\n";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    return s.substr(b, s.find_last_not_of(ws) - b + 1);
}

double parse_field(std::string_view field, std::size_t line_no, std::size_t col) {
    field = trim(field);
    if (!field.empty() && field.front() == '+') field.remove_prefix(1);
    double v = 0.0;
    const auto* end = field.data() + field.size();
    const auto [ptr, ec] = std::from_chars(field.data(), end, v);
    if (field.empty() || ec != std::errc() || ptr != end) {
        throw ParseError(line_no, "column " + std::to_string(col + 1) + ": not a number: '" + std::string(field) + "'");
    }
    if (!std::isfinite(v)) throw ParseError(line_no, "column " + std::to_string(col + 1) + ": non-finite value");
    return v;
}

}  // namespace

std::optional<Format> format_from_extension(const std::filesystem::path& p) {
    const auto ext = p.extension().string();
    if (ext == ".csv") return Format::csv_matrix;
    if (ext == ".jsonl" || ext == ".ndjson") return Format::jsonl_stream;
    return std::nullopt;
}

std::vector<core::DataInstance> read_csv(std::istream& in) {
    std::vector<core::DataInstance> out;
    std::string line;
    std::size_t line_no = 0;
    std::size_t d = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto body = trim(line);
        if (body.empty() || body.front() == '#') continue;
        std::vector<double> values;
        std::size_t pos = 0;
        while (true) {
            const auto comma = body.find(',', pos);
            const auto field = body.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos);
            values.push_back(parse_field(field, line_no, values.size()));
            if (comma == std::string_view::npos) break;
            pos = comma + 1;
        }
        if (d == 0) {
            d = values.size();
        } else if (values.size() != d) {
            throw DimensionMismatch("line " + std::to_string(line_no) + ": " + std::to_string(values.size()) +
                                    " columns, expected " + std::to_string(d));
        }
        out.push_back({std::move(values), static_cast<core::Tick>(out.size() + 1), {}});
    }
    return out;
}

std::vector<core::DataInstance> read_jsonl(std::istream& in) {
    std::vector<core::DataInstance> out;
    std::string line;
    std::size_t line_no = 0;
    std::size_t d = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ParseError(line_no, e.what());
        }
        if (!j.is_object()) throw ParseError(line_no, "expected a JSON object");
        const auto t = j.find("t");
        if (t == j.end() || !t->is_number_integer() || t->get<long long>() < 0) {
            throw ParseError(line_no, "field 't' must be a non-negative integer");
        }
        const auto src = j.find("source_id");
        if (src == j.end() || !src->is_string()) throw ParseError(line_no, "field 'source_id' must be a string");
        const auto vals = j.find("values");
        if (vals == j.end() || !vals->is_array() || vals->empty()) {
            throw ParseError(line_no, "field 'values' must be a non-empty array");
        }
        std::vector<double> values;
        values.reserve(vals->size());
        for (const auto& v : *vals) {
            if (!v.is_number()) throw ParseError(line_no, "field 'values' must contain numbers only");
            values.push_back(v.get<double>());
        }
        if (d == 0) {
            d = values.size();
        } else if (values.size() != d) {
            throw DimensionMismatch("line " + std::to_string(line_no) + ": " + std::to_string(values.size()) +
                                    " values, expected " + std::to_string(d));
        }
        out.push_back({std::move(values), t->get<core::Tick>(), src->get<std::string>()});
    }
    return out;
}

std::ifstream open_in(const std::filesystem::path& p) {
    std::ifstream in(p);
    if (!in) throw DataError("cannot open '" + p.string() + "' for reading");
    return in;
}

std::ofstream open_out(const std::filesystem::path& p) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open '" + p.string() + "' for writing");
    return out;
}

std::vector<core::DataInstance> ingest(const std::filesystem::path& path, Format format) {
    auto in = open_in(path);
    return format == Format::csv_matrix ? read_csv(in) : read_jsonl(in);
}

std::string format_double(double x) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, ptr);
}

void write_csv(std::ostream& out, std::span<const core::DataInstance> xs) {
    for (const auto& x : xs) {
        for (std::size_t n = 0; n < x.values.size(); ++n) {
            if (n) out << ',';
            out << format_double(x.values[n]);
        }
        out << '\n';
    }
}

void write_jsonl(std::ostream& out, std::span<const core::DataInstance> xs) {
    for (const auto& x : xs) {
        out << json{{"t", x.t}, {"source_id", x.source_id}, {"values", x.values}}.dump() << '\n';
    }
}

void export_stream(const std::filesystem::path& path, std::span<const core::DataInstance> xs, Format format) {
    auto out = open_out(path);
    if (format == Format::csv_matrix) {
        write_csv(out, xs);
    } else {
        write_jsonl(out, xs);
    }
    out.flush();
    if (!out) throw DataError("write to '" + path.string() + "' failed");
}

json truth_to_json(const ScenarioSpec& spec) {
    json j{{"d", spec.d}, {"horizon", spec.horizon}, {"source_id", spec.source_id}};
    if (spec.attack) {
        j["target_dims"] = spec.attack->target_dims;
        j["window"] = {spec.attack->start, spec.attack->end};
    } else {
        j["target_dims"] = json::array();
        j["window"] = nullptr;
    }
    return j;
}

std::string report_line(const ReportRecord& r) {
    // ordered_json keeps the documented field order
    nlohmann::ordered_json j;
    j["source_id"] = r.source_id;
    j["T"] = r.T;
    j["q"] = r.q;
    j["final_stat"] = r.final_stat;
    j["flagged_dims"] = r.flagged_dims;
    j["mean_contributions"] = r.mean_contributions;
    return j.dump();
}

ReportRecord parse_report_line(const std::string& line, std::size_t line_no) {
    try {
        const auto j = json::parse(line);
        return {j.at("source_id").get<std::string>(),          j.at("T").get<core::Tick>(),
                j.at("q").get<core::Tick>(),                   j.at("final_stat").get<double>(),
                j.at("flagged_dims").get<std::vector<std::size_t>>(),
                j.at("mean_contributions").get<std::vector<double>>()};
    } catch (const json::exception& e) {
        throw ParseError(line_no, e.what());
    }
}

}  // namespace knnids::streams
