#include "selfsim/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace selfsim {

ReportFormat parse_report_format(const std::string& name) {
    if (name == "json") return ReportFormat::json;
    if (name == "csv") return ReportFormat::csv;
    if (name == "markdown" || name == "md") return ReportFormat::markdown;
    throw std::invalid_argument("unknown report format '" + name + "'");
}

const char* extension(ReportFormat f) {
    switch (f) {
        case ReportFormat::json: return "json";
        case ReportFormat::csv: return "csv";
        case ReportFormat::markdown: return "md";
    }
    return "txt";
}

namespace {

void require_models(const EvalReport& r) {
    if (r.models.empty()) throw std::invalid_argument("report has no models");
}

std::string fmt(double v, int digits = 3, bool sign = false) {
    if (std::isnan(v)) return "n/a";
    char buf[64];
    std::snprintf(buf, sizeof buf, sign ? "%+.*f" : "%.*f", digits, v);
    return buf;
}

std::string full(double v) {
    if (std::isnan(v)) return "";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string day_label(std::size_t h) { return std::to_string(h) + "-day"; }

}  // namespace

std::string render_json(const EvalReport& r) {
    require_models(r);
    nlohmann::ordered_json j = r;
    return j.dump(2) + "\n";
}

EvalReport parse_report_json(const std::string& text) {
    return nlohmann::ordered_json::parse(text).get<EvalReport>();
}

std::string render_csv(const EvalReport& r) {
    require_models(r);
    std::ostringstream os;
    os << kCsvHeader << '\n';
    for (const auto& c : r.cells) {
        os << c.model << ',' << c.ticker << ',' << c.horizon << ',' << c.seed << ',' << c.n_test << ','
           << full(c.nll) << ',' << full(c.ci_lo) << ',' << full(c.ci_hi) << ',' << full(c.ks) << ','
           << (c.tail_energy ? full(*c.tail_energy) : std::string()) << '\n';
    }
    return os.str();
}

std::string render_markdown(const EvalReport& r) {
    require_models(r);
    std::ostringstream os;
    const bool ablation = r.table == "ablation";
    os << (ablation ? "## Ablations\n\n" : "## Forecasting NLL\n\n");
    if (ablation) {
        os << "| Ablation |";
        for (auto h : r.horizons) os << " NLL " << h << " | dNLL " << h << " |";
        os << "\n|---|";
        for (std::size_t i = 0; i < r.horizons.size(); ++i) os << "---:|---:|";
        os << '\n';
        for (const auto& m : r.models) {
            os << "| " << m.model << " |";
            for (auto h : r.horizons) {
                const auto& s = m.horizons.at(h);
                os << ' ' << fmt(s.mean_nll) << " | " << fmt(s.delta, 3, true) << " |";
            }
            os << '\n';
        }
    } else {
        os << "| Model | Conv params |";
        for (auto h : r.horizons) os << ' ' << day_label(h) << " NLL |";
        os << "\n|---|---:|";
        for (std::size_t i = 0; i < r.horizons.size(); ++i) os << "---:|";
        os << '\n';
        for (const auto& m : r.models) {
            os << "| " << m.model << " | " << m.conv_params << " |";
            for (auto h : r.horizons) {
                const auto& s = m.horizons.at(h);
                os << ' ' << fmt(s.mean_nll, 3, true) << " ± " << fmt(s.error_bar) << " |";
            }
            os << '\n';
        }
    }
    if (!r.tests.empty()) {
        os << "\n### Paired tests against " << r.reference << "\n\n";
        os << "| Other | Horizon | Mean delta | W+ | n | p | Holm p | Reject |\n|---|---:|---:|---:|---:|---:|---:|---|\n";
        for (const auto& t : r.tests) {
            os << "| " << t.other << " | " << t.horizon << " | " << fmt(t.mean_delta, 3, true) << " | "
               << fmt(t.statistic, 1) << " | " << t.n << " | " << fmt(t.p_value, 4) << " | "
               << fmt(t.holm_adjusted, 4) << " | " << (t.reject ? "yes" : "no") << " |\n";
        }
    }
    if (!r.collapse.empty()) {
        os << "\n### Scaling collapse\n\n| Model | Ticker | H* | C* | C* empirical |\n|---|---|---:|---:|---:|\n";
        auto o = [](const std::optional<double>& v, int d) { return v ? fmt(*v, d) : std::string("n/a"); };
        for (const auto& c : r.collapse) {
            os << "| " << c.model << " | " << c.ticker << " | " << o(c.h_star, 3) << " | " << o(c.c_star, 4) << " | "
               << o(c.c_star_empirical, 4) << " |\n";
        }
    }
    return os.str();
}

std::string render(const EvalReport& r, ReportFormat f) {
    switch (f) {
        case ReportFormat::json: return render_json(r);
        case ReportFormat::csv: return render_csv(r);
        case ReportFormat::markdown: return render_markdown(r);
    }
    throw std::invalid_argument("unknown report format");
}

std::vector<std::filesystem::path> write_report(const EvalReport& r, const std::filesystem::path& dir,
                                                const std::string& stem, const std::vector<ReportFormat>& formats) {
    require_models(r);
    std::filesystem::create_directories(dir);
    std::vector<std::filesystem::path> out;
    for (auto f : formats) {
        const auto path = dir / (stem + "." + extension(f));
        std::ofstream os(path);
        if (!os) throw std::runtime_error("cannot write '" + path.string() + "'");
        os << render(r, f);
        out.push_back(path);
    }
    return out;
}

}  // namespace selfsim
