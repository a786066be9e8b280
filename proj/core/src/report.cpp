#include "stylerl/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "stylerl/common.hpp"

namespace stylerl {

namespace {

constexpr double kWidth = 640.0, kHeight = 400.0;
constexpr double kLeft = 64.0, kRight = 150.0, kTop = 40.0, kBottom = 48.0;

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c",
                          "#9467bd", "#ff7f0e", "#8c564b"};
constexpr size_t kPaletteSize = sizeof kPalette / sizeof kPalette[0];

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

std::string escape_xml(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

struct Scale {
    double lo = 0.0, hi = 1.0, px0 = 0.0, px1 = 1.0;
    double operator()(double v) const {
        if (hi == lo) return (px0 + px1) / 2.0;
        return px0 + (v - lo) / (hi - lo) * (px1 - px0);
    }
};

void open_svg(std::ostringstream& out, const std::string& title) {
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth
        << "\" height=\"" << kHeight << "\" viewBox=\"0 0 " << kWidth << " "
        << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<text x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" "
        << "font-size=\"15\">" << escape_xml(title) << "</text>\n";
}

void draw_axes(std::ostringstream& out, const Scale& x, const Scale& y,
               const std::string& x_label, const std::string& y_label) {
    double bx = kWidth - kRight, by = kHeight - kBottom;
    out << "<line x1=\"" << kLeft << "\" y1=\"" << by << "\" x2=\"" << bx
        << "\" y2=\"" << by << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft
        << "\" y2=\"" << by << "\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        double fx = x.lo + (x.hi - x.lo) * i / 4.0;
        double fy = y.lo + (y.hi - y.lo) * i / 4.0;
        double px = x(fx), py = y(fy);
        out << "<line x1=\"" << num(px) << "\" y1=\"" << by << "\" x2=\""
            << num(px) << "\" y2=\"" << by + 4 << "\" stroke=\"black\"/>\n";
        out << "<text x=\"" << num(px) << "\" y=\"" << by + 18
            << "\" text-anchor=\"middle\">" << num(fx) << "</text>\n";
        out << "<line x1=\"" << kLeft - 4 << "\" y1=\"" << num(py) << "\" x2=\""
            << kLeft << "\" y2=\"" << num(py) << "\" stroke=\"black\"/>\n";
        out << "<text x=\"" << kLeft - 8 << "\" y=\"" << num(py + 4)
            << "\" text-anchor=\"end\">" << num(fy) << "</text>\n";
    }
    out << "<text x=\"" << (kLeft + bx) / 2 << "\" y=\"" << kHeight - 10
        << "\" text-anchor=\"middle\">" << escape_xml(x_label) << "</text>\n";
    out << "<text x=\"16\" y=\"" << (kTop + by) / 2
        << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
        << (kTop + by) / 2 << ")\">" << escape_xml(y_label) << "</text>\n";
}

}  // namespace

std::string render_line_chart(const std::string& title,
                              const std::string& x_label,
                              const std::string& y_label,
                              const std::vector<ChartSeries>& series) {
    if (series.empty()) throw ValidationError("line chart with no series");
    double xlo = 0.0, xhi = 1.0, ylo = 0.0, yhi = 1.0;
    bool first = true;
    for (const ChartSeries& s : series)
        for (const auto& [px, py] : s.points) {
            if (first) {
                xlo = xhi = px;
                ylo = yhi = py;
                first = false;
            }
            xlo = std::min(xlo, px);
            xhi = std::max(xhi, px);
            ylo = std::min(ylo, py);
            yhi = std::max(yhi, py);
        }
    if (first) throw ValidationError("line chart with no points");

    Scale x{xlo, xhi, kLeft, kWidth - kRight};
    Scale y{ylo, yhi, kHeight - kBottom, kTop};
    std::ostringstream out;
    open_svg(out, title);
    draw_axes(out, x, y, x_label, y_label);
    for (size_t i = 0; i < series.size(); ++i) {
        const char* color = kPalette[i % kPaletteSize];
        out << "<polyline fill=\"none\" stroke=\"" << color
            << "\" stroke-width=\"1.5\" points=\"";
        for (const auto& [px, py] : series[i].points)
            out << num(x(px)) << "," << num(y(py)) << " ";
        out << "\"/>\n";
        double ly = kTop + 16.0 * double(i);
        out << "<line x1=\"" << kWidth - kRight + 10 << "\" y1=\"" << ly
            << "\" x2=\"" << kWidth - kRight + 30 << "\" y2=\"" << ly
            << "\" stroke=\"" << color << "\" stroke-width=\"1.5\"/>\n";
        out << "<text x=\"" << kWidth - kRight + 34 << "\" y=\"" << ly + 4
            << "\">" << escape_xml(series[i].label) << "</text>\n";
    }
    out << "</svg>\n";
    return out.str();
}

std::string render_bar_chart(const std::string& title,
                             const std::string& y_label,
                             const std::vector<BarEntry>& bars) {
    if (bars.empty()) throw ValidationError("bar chart with no bars");
    double hi = 0.0;
    for (const BarEntry& b : bars) hi = std::max(hi, b.value);
    if (hi == 0.0) hi = 1.0;
    Scale y{0.0, hi * 1.05, kHeight - kBottom, kTop};

    double plot_w = kWidth - kLeft - 40.0;
    double slot = plot_w / double(bars.size());
    double bar_w = slot * 0.6;
    std::ostringstream out;
    open_svg(out, title);
    double by = kHeight - kBottom;
    out << "<line x1=\"" << kLeft << "\" y1=\"" << by << "\" x2=\""
        << kLeft + plot_w << "\" y2=\"" << by << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft
        << "\" y2=\"" << by << "\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        double fy = hi * 1.05 * i / 4.0;
        out << "<text x=\"" << kLeft - 8 << "\" y=\"" << num(y(fy) + 4)
            << "\" text-anchor=\"end\">" << num(fy) << "</text>\n";
    }
    for (size_t i = 0; i < bars.size(); ++i) {
        double cx = kLeft + slot * (double(i) + 0.5);
        double top = y(bars[i].value);
        out << "<rect x=\"" << num(cx - bar_w / 2) << "\" y=\"" << num(top)
            << "\" width=\"" << num(bar_w) << "\" height=\"" << num(by - top)
            << "\" fill=\"" << kPalette[i % kPaletteSize] << "\"/>\n";
        out << "<text x=\"" << num(cx) << "\" y=\"" << num(top - 4)
            << "\" text-anchor=\"middle\">" << num(bars[i].value)
            << "</text>\n";
        out << "<text x=\"" << num(cx) << "\" y=\"" << by + 18
            << "\" text-anchor=\"middle\">" << escape_xml(bars[i].label)
            << "</text>\n";
    }
    out << "<text x=\"16\" y=\"" << (kTop + by) / 2
        << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
        << (kTop + by) / 2 << ")\">" << escape_xml(y_label) << "</text>\n";
    out << "</svg>\n";
    return out.str();
}

std::vector<std::string> write_reports(const std::string& dir,
                                       const std::vector<MetricsStream>& streams,
                                       const std::vector<RunSummary>& evals,
                                       double fraction) {
    if (streams.empty() && evals.empty())
        throw ValidationError("nothing to report");
    std::vector<std::string> written;

    if (!streams.empty()) {
        EfficiencyReport eff = efficiency_report(streams, fraction);
        std::string csv = dir + "/reward_vs_episodes.csv";
        write_efficiency_csv(csv, eff);
        written.push_back(csv);

        std::vector<ChartSeries> series;
        for (const EfficiencyRun& run : eff.runs) {
            ChartSeries s;
            s.label = run.strategy + " seed " + std::to_string(run.seed);
            for (const EfficiencyPoint& p : run.points)
                s.points.push_back({double(p.episodes), p.normalized_reward});
            series.push_back(std::move(s));
        }
        std::string svg = dir + "/reward_vs_episodes.svg";
        write_text_file(svg, render_line_chart("Normalized reward vs episodes",
                                               "episodes", "normalized reward",
                                               series));
        written.push_back(svg);
    }

    if (!evals.empty()) {
        struct Metric {
            const char* name;
            double EvalReport::* field;
        };
        const Metric metrics[] = {
            {"style_accuracy", &EvalReport::style_accuracy},
            {"content_bleu", &EvalReport::content_bleu},
            {"perplexity", &EvalReport::perplexity},
            {"gm_all", &EvalReport::gm_all},
        };
        for (const Metric& m : metrics) {
            std::ostringstream csv;
            csv << "run,strategy,seed," << m.name << "\n";
            std::vector<BarEntry> bars;
            for (const RunSummary& r : evals) {
                double v = r.eval.*(m.field);
                char buf[40];
                std::snprintf(buf, sizeof buf, "%.17g", v);
                csv << r.run_id << "," << r.strategy << "," << r.seed << ","
                    << buf << "\n";
                bars.push_back({r.strategy + " s" + std::to_string(r.seed), v});
            }
            std::string csv_path = dir + "/" + m.name + ".csv";
            write_text_file(csv_path, csv.str());
            written.push_back(csv_path);
            std::string svg_path = dir + "/" + m.name + ".svg";
            write_text_file(svg_path,
                            render_bar_chart(m.name, m.name, bars));
            written.push_back(svg_path);
        }
    }
    return written;
}

}  // namespace stylerl
