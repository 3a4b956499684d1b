#include "bdaudit/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace bdaudit {

namespace {

constexpr double kWidth = 720.0;
constexpr double kHeight = 480.0;
constexpr double kMarginL = 70.0;
constexpr double kMarginR = 150.0;
constexpr double kMarginT = 30.0;
constexpr double kMarginB = 60.0;

const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                          "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

}  // namespace

std::string render_curves_svg(const ReferenceLibrary& library, const AccuracyCurve& cloud_curve,
                              const FittedCurve& cloud_fit) {
    double x_max = cloud_fit.x_hi;
    for (const auto& e : library.entries) x_max = std::max(x_max, e.fit.x_hi);
    for (const auto& p : cloud_curve.points) x_max = std::max(x_max, static_cast<double>(p.x));
    if (x_max <= 0.0) x_max = 1.0;

    const double plot_w = kWidth - kMarginL - kMarginR;
    const double plot_h = kHeight - kMarginT - kMarginB;
    auto px = [&](double x) { return kMarginL + plot_w * x / x_max; };
    auto py = [&](double y) { return kMarginT + plot_h * (1.0 - std::clamp(y, 0.0, 1.0)); };

    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
        << kHeight << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

    // axes
    out << "<line x1=\"" << kMarginL << "\" y1=\"" << kMarginT + plot_h << "\" x2=\""
        << kMarginL + plot_w << "\" y2=\"" << kMarginT + plot_h
        << "\" stroke=\"black\" stroke-width=\"1\"/>\n";
    out << "<line x1=\"" << kMarginL << "\" y1=\"" << kMarginT << "\" x2=\"" << kMarginL
        << "\" y2=\"" << kMarginT + plot_h << "\" stroke=\"black\" stroke-width=\"1\"/>\n";
    for (int t = 0; t <= 5; ++t) {
        const double yv = t / 5.0;
        out << "<text x=\"" << kMarginL - 8 << "\" y=\"" << py(yv) + 4
            << "\" font-size=\"11\" text-anchor=\"end\">" << fmt(yv) << "</text>\n";
        const double xv = x_max * t / 5.0;
        out << "<text x=\"" << px(xv) << "\" y=\"" << kMarginT + plot_h + 18
            << "\" font-size=\"11\" text-anchor=\"middle\">" << static_cast<long>(xv)
            << "</text>\n";
    }
    out << "<text x=\"" << kMarginL + plot_w / 2 << "\" y=\"" << kHeight - 16
        << "\" font-size=\"13\" text-anchor=\"middle\">poisoned samples</text>\n";
    out << "<text x=\"18\" y=\"" << kMarginT + plot_h / 2
        << "\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
        << kMarginT + plot_h / 2 << ")\">attack accuracy</text>\n";

    auto path_for = [&](const FittedCurve& fit, const char* color, const char* dash) {
        std::ostringstream p;
        p << "<path fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.6\"";
        if (dash[0]) p << " stroke-dasharray=\"" << dash << "\"";
        p << " d=\"";
        const int steps = 100;
        for (int i = 0; i <= steps; ++i) {
            const double x = fit.x_lo + (fit.x_hi - fit.x_lo) * i / steps;
            p << (i == 0 ? 'M' : 'L') << fmt(px(x)) << ' ' << fmt(py(fit.eval(x))) << ' ';
        }
        p << "\"/>\n";
        return p.str();
    };

    double legend_y = kMarginT + 10.0;
    std::size_t color_i = 0;
    for (const auto& e : library.entries) {
        const char* color = kPalette[color_i % (sizeof(kPalette) / sizeof(kPalette[0]))];
        out << path_for(e.fit, color, "");
        for (const auto& p : e.curve.points)
            out << "<circle cx=\"" << fmt(px(static_cast<double>(p.x))) << "\" cy=\""
                << fmt(py(p.y_mean)) << "\" r=\"2\" fill=\"" << color << "\"/>\n";
        out << "<text x=\"" << kMarginL + plot_w + 12 << "\" y=\"" << legend_y
            << "\" font-size=\"11\" fill=\"" << color << "\">reference s=" << fmt(e.s)
            << "</text>\n";
        legend_y += 16.0;
        ++color_i;
    }

    out << path_for(cloud_fit, "#000000", "6,3");
    for (const auto& p : cloud_curve.points)
        out << "<rect x=\"" << fmt(px(static_cast<double>(p.x)) - 2.0) << "\" y=\""
            << fmt(py(p.y_mean) - 2.0) << "\" width=\"4\" height=\"4\" fill=\"black\"/>\n";
    out << "<text x=\"" << kMarginL + plot_w + 12 << "\" y=\"" << legend_y
        << "\" font-size=\"11\" fill=\"black\">cloud</text>\n";

    out << "</svg>\n";
    return out.str();
}

}  // namespace bdaudit
