#include "censoring/io/report.hpp"

#include "censoring/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <tuple>

namespace censoring::io {

namespace {

using stats::RunResult;

using PairKey = std::pair<std::uint64_t, int>;

std::map<PairKey, double> by_seed_fold(const std::vector<const RunResult*>& rows) {
    std::map<PairKey, double> out;
    for (const auto* r : rows) out.emplace(PairKey{r->seed, r->fold}, r->test_ba);
    return out;
}

std::string mode_name(const RunResult& r) {
    return r.lambda == 0.0 ? "none" : std::string(censor::to_string(r.mode));
}

std::string method_name(const RunResult& r) {
    return r.lambda == 0.0 ? "none" : std::string(censor::to_string(r.method));
}

std::string short_method(censor::Method m) {
    switch (m) {
        case censor::Method::adversarial: return "ADV";
        case censor::Method::density_ratio: return "DRE";
        case censor::Method::wasserstein: return "W";
    }
    return "?";
}

void write_distribution(std::ofstream& out, const stats::Distribution& d) {
    out << fmt::format(",{},{},{},{},{},{}", d.min, d.q1, d.median, d.q3, d.max, d.mean);
}

}  // namespace

std::string render_boxplot(const ReportFigure& fig) {
    constexpr double kLeft = 70, kTop = 50, kPlotHeight = 300, kBoxWidth = 36, kSlot = 64, kBottom = 90;
    const double plot_width = std::max<double>(kSlot, kSlot * static_cast<double>(fig.boxes.size()));
    const double width = kLeft + plot_width + 30;
    const double height = kTop + kPlotHeight + kBottom;

    double lo = 1.0, hi = 0.0;
    auto widen = [&](const stats::Distribution& d) {
        lo = std::min(lo, d.min);
        hi = std::max(hi, d.max);
    };
    for (const auto& b : fig.boxes) widen(b.test_ba);
    if (fig.control) widen(*fig.control);
    lo = std::max(0.0, std::floor(lo * 10.0 - 0.5) / 10.0);
    hi = std::min(1.0, std::ceil(hi * 10.0 + 0.5) / 10.0);
    if (hi <= lo) hi = lo + 0.1;
    auto y = [&](double v) { return kTop + (hi - v) / (hi - lo) * kPlotHeight; };

    std::string svg = fmt::format(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" viewBox=\"0 0 {0} {1}\" "
        "font-family=\"sans-serif\" font-size=\"11\">\n"
        "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n",
        width, height);
    svg += fmt::format("<text x=\"{}\" y=\"20\" text-anchor=\"middle\" font-size=\"13\">test balanced accuracy: "
                       "mode {}, projection {}, eval {}</text>\n",
                       width / 2, fig.mode, train::to_string(fig.projection), train::to_string(fig.eval_point));

    for (int i = 0; i <= static_cast<int>(std::lround((hi - lo) * 10.0)); ++i) {
        const double v = lo + 0.1 * i;
        svg += fmt::format("<line x1=\"{}\" y1=\"{:.2f}\" x2=\"{}\" y2=\"{:.2f}\" stroke=\"#ddd\"/>\n", kLeft, y(v),
                           kLeft + plot_width, y(v));
        svg += fmt::format("<text x=\"{}\" y=\"{:.2f}\" text-anchor=\"end\">{:.1f}</text>\n", kLeft - 6, y(v) + 4, v);
    }
    svg += fmt::format("<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"black\"/>\n", kLeft, kTop,
                       kTop + kPlotHeight);

    if (fig.control) {
        const auto& c = *fig.control;
        for (double v : {c.q1, c.median, c.q3}) {
            svg += fmt::format("<line class=\"control-quartile\" x1=\"{}\" y1=\"{:.2f}\" x2=\"{}\" y2=\"{:.2f}\" "
                               "stroke=\"#555\" stroke-dasharray=\"6,3\"/>\n",
                               kLeft, y(v), kLeft + plot_width, y(v));
        }
        svg += fmt::format("<line class=\"control-mean\" x1=\"{}\" y1=\"{:.2f}\" x2=\"{}\" y2=\"{:.2f}\" "
                           "stroke=\"#c33\" stroke-dasharray=\"2,2\"/>\n",
                           kLeft, y(c.mean), kLeft + plot_width, y(c.mean));
    }

    for (std::size_t i = 0; i < fig.boxes.size(); ++i) {
        const auto& b = fig.boxes[i];
        const auto& d = b.test_ba;
        const double cx = kLeft + kSlot * (static_cast<double>(i) + 0.5);
        const double x0 = cx - kBoxWidth / 2;
        svg += fmt::format("<g class=\"box\" data-lambda=\"{}\">\n", b.key.lambda);
        svg += fmt::format("<line x1=\"{0}\" y1=\"{1:.2f}\" x2=\"{0}\" y2=\"{2:.2f}\" stroke=\"black\"/>\n", cx,
                           y(d.max), y(d.q3));
        svg += fmt::format("<line x1=\"{0}\" y1=\"{1:.2f}\" x2=\"{0}\" y2=\"{2:.2f}\" stroke=\"black\"/>\n", cx,
                           y(d.q1), y(d.min));
        for (double v : {d.min, d.max}) {
            svg += fmt::format("<line x1=\"{}\" y1=\"{:.2f}\" x2=\"{}\" y2=\"{:.2f}\" stroke=\"black\"/>\n", cx - 8,
                               y(v), cx + 8, y(v));
        }
        svg += fmt::format("<rect x=\"{}\" y=\"{:.2f}\" width=\"{}\" height=\"{:.2f}\" fill=\"#9ecae1\" "
                           "stroke=\"black\"/>\n",
                           x0, y(d.q3), kBoxWidth, std::max(0.5, y(d.q1) - y(d.q3)));
        svg += fmt::format("<line x1=\"{}\" y1=\"{:.2f}\" x2=\"{}\" y2=\"{:.2f}\" stroke=\"black\" "
                           "stroke-width=\"2\"/>\n",
                           x0, y(d.median), x0 + kBoxWidth, y(d.median));
        svg += fmt::format("<circle cx=\"{}\" cy=\"{:.2f}\" r=\"2.5\" fill=\"#c33\"/>\n", cx, y(d.mean));
        if (b.versus_control) {
            svg += fmt::format("<text class=\"tier\" x=\"{}\" y=\"{:.2f}\" text-anchor=\"middle\" "
                               "font-size=\"14\">{}</text>\n",
                               cx, y(d.max) - 8, stats::symbol(b.versus_control->tier));
        }
        const std::string label =
            b.key.lambda == 0.0 ? "control" : fmt::format("{} {}", short_method(b.key.method), b.key.lambda);
        svg += fmt::format("<text x=\"{0}\" y=\"{1}\" text-anchor=\"end\" transform=\"rotate(-45 {0} {1})\">{2}"
                           "</text>\n",
                           cx, kTop + kPlotHeight + 14, label);
        svg += "</g>\n";
    }
    svg += "</svg>\n";
    return svg;
}

Report emit_report(const std::vector<RunResult>& rows, const std::filesystem::path& out_dir) {
    std::vector<RunResult> ok;
    for (const auto& r : rows) {
        if (!r.failed) ok.push_back(r);
    }
    if (ok.empty()) throw ConfigError("report: no successful runs to report");

    // Controls and censored cells, each grouped by their identity.
    using Setting = std::pair<model::Projection, train::EvalPoint>;
    std::map<Setting, std::vector<const RunResult*>> controls;
    std::map<std::tuple<censor::Mode, model::Projection, train::EvalPoint>,
             std::map<std::pair<censor::Method, double>, std::vector<const RunResult*>>>
        cells;
    for (const auto& r : ok) {
        if (r.lambda == 0.0) {
            controls[{r.projection, r.eval_point}].push_back(&r);
        } else {
            cells[{r.mode, r.projection, r.eval_point}][{r.method, r.lambda}].push_back(&r);
        }
    }

    auto make_box = [&](const std::vector<const RunResult*>& members) {
        ReportBox box;
        box.key = *members.front();
        box.n = members.size();
        std::vector<double> values;
        for (const auto* r : members) values.push_back(r->test_ba);
        box.test_ba = stats::describe(values);
        if (box.key.lambda == 0.0) return box;
        const auto found = controls.find({box.key.projection, box.key.eval_point});
        if (found == controls.end()) return box;
        const auto reference = by_seed_fold(found->second);
        std::vector<double> a, b;
        for (const auto& [key, value] : by_seed_fold(members)) {
            const auto match = reference.find(key);
            if (match == reference.end()) continue;
            a.push_back(value);
            b.push_back(match->second);
        }
        box.pairs = a.size();
        try {
            box.versus_control = stats::paired_t_test(a, b);
        } catch (const ConfigError&) {
        }
        return box;
    };

    auto control_distribution = [&](const Setting& setting) -> std::optional<stats::Distribution> {
        const auto found = controls.find(setting);
        if (found == controls.end()) return std::nullopt;
        std::vector<double> values;
        for (const auto* r : found->second) values.push_back(r->test_ba);
        return stats::describe(values);
    };

    Report report;
    std::filesystem::create_directories(out_dir);
    for (const auto& [identity, by_cell] : cells) {
        const auto& [mode, projection, point] = identity;
        ReportFigure fig;
        fig.mode = std::string(censor::to_string(mode));
        fig.projection = projection;
        fig.eval_point = point;
        fig.control = control_distribution({projection, point});
        for (const auto& [cell, members] : by_cell) fig.boxes.push_back(make_box(members));
        report.figures.push_back(std::move(fig));
    }
    for (const auto& [setting, members] : controls) {
        const bool covered = std::any_of(report.figures.begin(), report.figures.end(), [&](const auto& f) {
            return f.projection == setting.first && f.eval_point == setting.second;
        });
        if (covered) continue;
        ReportFigure fig;
        fig.mode = "none";
        fig.projection = setting.first;
        fig.eval_point = setting.second;
        fig.control = control_distribution(setting);
        fig.boxes.push_back(make_box(members));
        report.figures.push_back(std::move(fig));
    }
    for (auto& fig : report.figures) {
        fig.path = out_dir / fmt::format("boxplot_{}_{}_{}.svg", fig.mode, train::to_string(fig.projection),
                                         train::to_string(fig.eval_point));
        std::ofstream svg(fig.path);
        svg << render_boxplot(fig);
        if (!svg) throw ConfigError("report: cannot write " + fig.path.string());
    }

    report.summary_path = out_dir / "summary.csv";
    std::ofstream out(report.summary_path);
    out << "# quantiles: linear interpolation between order statistics, h = (n - 1) p; tiers vs lambda = 0 "
           "paired by (seed, fold): \xe2\x88\x92 p > 0.05, * p <= 0.05, \xe2\x80\xa0 p <= 0.01, \xe2\x80\xa1 p <= 0.001\n";
    out << "censor_mode,censor_method,lambda,projection,eval_point,n,"
           "test_ba_min,test_ba_q1,test_ba_median,test_ba_q3,test_ba_max,test_ba_mean,"
           "overfit_min,overfit_q1,overfit_median,overfit_q3,overfit_max,overfit_mean,pairs,t,df,p,tier\n";
    for (const auto& row : stats::aggregate(ok)) {
        const auto& k = row.key;
        out << fmt::format("{},{},{},{},{},{}", mode_name(k), method_name(k), k.lambda,
                           train::to_string(k.projection), train::to_string(k.eval_point), row.n);
        write_distribution(out, row.test_ba);
        write_distribution(out, row.overfit_ratio);
        std::optional<ReportBox> box;
        if (k.lambda != 0.0) box = make_box(cells[{k.mode, k.projection, k.eval_point}][{k.method, k.lambda}]);
        if (box && box->versus_control) {
            const auto& t = *box->versus_control;
            out << fmt::format(",{},{},{},{},{}\n", box->pairs, t.t, t.df, t.p, stats::symbol(t.tier));
        } else {
            out << fmt::format(",{},,,,\n", box ? box->pairs : 0);
        }
    }
    if (!out) throw ConfigError("report: cannot write " + report.summary_path.string());
    return report;
}

}  // namespace censoring::io
