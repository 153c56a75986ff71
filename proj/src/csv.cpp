#include "selfsim/csv.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <vector>

namespace selfsim {

namespace {

std::string trim(std::string_view s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        out.push_back(trim(std::string_view(line).substr(start, comma - start)));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

double parse_number(const std::string& cell, std::size_t line) {
    double v = 0.0;
    const char* first = cell.data();
    const char* last = cell.data() + cell.size();
    if (!cell.empty() && *first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last || !std::isfinite(v)) {
        throw ParseError("cannot parse '" + cell + "' as a number", line);
    }
    return v;
}

struct Observation {
    std::string date;
    double value;
};

Panel finish(std::map<std::string, std::vector<Observation>> raw, ValueFormat format) {
    Panel panel;
    for (auto& [ticker, obs] : raw) {
        std::stable_sort(obs.begin(), obs.end(),
                         [](const Observation& a, const Observation& b) { return a.date < b.date; });
        std::vector<double> values;
        std::vector<std::string> dates;
        if (format == ValueFormat::price) {
            for (const auto& o : obs) {
                if (!(o.value > 0.0)) {
                    throw std::domain_error("non-positive price for '" + ticker + "' at " + o.date);
                }
            }
            for (std::size_t i = 1; i < obs.size(); ++i) {
                values.push_back(std::log(obs[i].value / obs[i - 1].value));
                dates.push_back(obs[i].date);
            }
        } else {
            for (const auto& o : obs) {
                values.push_back(o.value);
                dates.push_back(o.date);
            }
        }
        if (values.empty()) {
            throw std::invalid_argument("series '" + ticker + "' is empty after parsing");
        }
        panel.emplace(ticker, PanelSeries{TimeSeries(ticker, std::move(values)), std::move(dates)});
    }
    return panel;
}

}  // namespace

ValueFormat parse_value_format(const std::string& name) {
    const auto n = lower(name);
    if (n == "price") return ValueFormat::price;
    if (n == "return" || n == "returns") return ValueFormat::ret;
    throw std::invalid_argument("unknown value format '" + name + "' (expected price|return)");
}

Panel parse_csv(const std::string& text, ValueFormat format) {
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line_no == 1 && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) {
            line.erase(0, 3);
        }
        if (!trim(line).empty()) {
            header = split_fields(line);
            break;
        }
    }
    if (header.empty()) {
        throw ParseError("missing header", line_no == 0 ? 1 : line_no);
    }

    std::map<std::string, std::vector<Observation>> raw;
    const bool single = header.size() == 1;
    const bool long_form = header.size() == 3 && lower(header[0]) == "date" &&
                           lower(header[1]) == "ticker" && lower(header[2]) == "value";
    if (!single && !long_form) {
        for (std::size_t c = 1; c < header.size(); ++c) {
            if (header[c].empty()) throw ParseError("empty ticker name in header", line_no);
            if (raw.count(header[c])) throw ParseError("duplicate ticker '" + header[c] + "'", line_no);
            raw[header[c]];
        }
    } else if (single) {
        raw[header[0].empty() ? std::string("series") : header[0]];
    }

    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        const auto fields = split_fields(line);
        if (fields.size() != header.size()) {
            throw ParseError("expected " + std::to_string(header.size()) + " fields, found " +
                                 std::to_string(fields.size()),
                             line_no);
        }
        if (single) {
            std::ostringstream label;
            label << std::setw(9) << std::setfill('0') << row;
            if (!fields[0].empty()) {
                raw.begin()->second.push_back({label.str(), parse_number(fields[0], line_no)});
            }
        } else if (long_form) {
            if (fields[1].empty()) throw ParseError("empty ticker", line_no);
            if (fields[2].empty()) continue;
            raw[fields[1]].push_back({fields[0], parse_number(fields[2], line_no)});
        } else {
            for (std::size_t c = 1; c < fields.size(); ++c) {
                if (fields[c].empty()) continue;
                raw[header[c]].push_back({fields[0], parse_number(fields[c], line_no)});
            }
        }
        ++row;
    }
    return finish(std::move(raw), format);
}

Panel load_csv(const std::filesystem::path& path, ValueFormat format) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::invalid_argument("cannot open '" + path.string() + "'");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_csv(buf.str(), format);
}

void write_series_csv(const std::filesystem::path& path, const TimeSeries& x) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot write '" + path.string() + "'");
    }
    out << x.id() << '\n' << std::setprecision(17);
    for (double v : x.values()) {
        out << v << '\n';
    }
}

}  // namespace selfsim
