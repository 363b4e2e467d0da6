#include "slicesim/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "slicesim/config.hpp"

namespace slicesim {

namespace {

const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"};

std::string fmt(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

std::string fmt2(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

}  // namespace

void write_svg_chart(const std::string& path, const std::string& title,
                     const std::string& xlabel, const std::string& ylabel,
                     const std::vector<PlotSeries>& series,
                     const std::optional<PlotWindow>& window) {
  const double W = 840, H = 520;
  const double ml = 70, mr = 160, mt = 50, mb = 60;
  const double pw = W - ml - mr, ph = H - mt - mb;

  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  for (const auto& s : series) {
    for (size_t i = 0; i < s.x.size(); ++i) {
      xmin = std::min(xmin, s.x[i]);
      xmax = std::max(xmax, s.x[i]);
      const double e = i < s.err.size() ? s.err[i] : 0.0;
      ymin = std::min(ymin, s.y[i] - e);
      ymax = std::max(ymax, s.y[i] + e);
    }
  }
  if (!std::isfinite(xmin)) {
    xmin = 0;
    xmax = 1;
    ymin = 0;
    ymax = 1;
  }
  if (xmax - xmin < 1e-12) xmax = xmin + 1;
  if (ymax - ymin < 1e-12) ymax = ymin + 1;
  const double ypad = 0.06 * (ymax - ymin);
  ymin -= ypad;
  ymax += ypad;

  auto X = [&](double x) { return ml + pw * (x - xmin) / (xmax - xmin); };
  auto Y = [&](double y) { return mt + ph * (1.0 - (y - ymin) / (ymax - ymin)); };

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(W) + "\" height=\"" + fmt(H) +
         "\" viewBox=\"0 0 " + fmt(W) + " " + fmt(H) + "\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  if (window && window->x1 > window->x0) {
    const double wx0 = std::max(xmin, window->x0), wx1 = std::min(xmax, window->x1);
    if (wx1 > wx0) {
      svg += "<rect x=\"" + fmt(X(wx0)) + "\" y=\"" + fmt(mt) + "\" width=\"" +
             fmt(X(wx1) - X(wx0)) + "\" height=\"" + fmt(ph) +
             "\" fill=\"#fdd\" opacity=\"0.6\"/>\n";
      svg += "<text x=\"" + fmt((X(wx0) + X(wx1)) / 2) + "\" y=\"" + fmt(mt + 16) +
             "\" font-size=\"12\" text-anchor=\"middle\" fill=\"#a33\">high-load window</text>\n";
    }
  }

  // axes + ticks
  svg += "<rect x=\"" + fmt(ml) + "\" y=\"" + fmt(mt) + "\" width=\"" + fmt(pw) + "\" height=\"" +
         fmt(ph) + "\" fill=\"none\" stroke=\"#333\"/>\n";
  for (int i = 0; i <= 5; ++i) {
    const double fx = xmin + (xmax - xmin) * i / 5.0;
    const double fy = ymin + (ymax - ymin) * i / 5.0;
    svg += "<line x1=\"" + fmt(X(fx)) + "\" y1=\"" + fmt(mt + ph) + "\" x2=\"" + fmt(X(fx)) +
           "\" y2=\"" + fmt(mt + ph + 5) + "\" stroke=\"#333\"/>\n";
    svg += "<text x=\"" + fmt(X(fx)) + "\" y=\"" + fmt(mt + ph + 20) +
           "\" font-size=\"11\" text-anchor=\"middle\">" + fmt2(fx) + "</text>\n";
    svg += "<line x1=\"" + fmt(ml - 5) + "\" y1=\"" + fmt(Y(fy)) + "\" x2=\"" + fmt(ml) +
           "\" y2=\"" + fmt(Y(fy)) + "\" stroke=\"#333\"/>\n";
    svg += "<text x=\"" + fmt(ml - 9) + "\" y=\"" + fmt(Y(fy) + 4) +
           "\" font-size=\"11\" text-anchor=\"end\">" + fmt2(fy) + "</text>\n";
    svg += "<line x1=\"" + fmt(ml) + "\" y1=\"" + fmt(Y(fy)) + "\" x2=\"" + fmt(ml + pw) +
           "\" y2=\"" + fmt(Y(fy)) + "\" stroke=\"#eee\"/>\n";
  }

  svg += "<text x=\"" + fmt(ml + pw / 2) + "\" y=\"28\" font-size=\"16\" text-anchor=\"middle\">" +
         title + "</text>\n";
  svg += "<text x=\"" + fmt(ml + pw / 2) + "\" y=\"" + fmt(H - 14) +
         "\" font-size=\"13\" text-anchor=\"middle\">" + xlabel + "</text>\n";
  svg += "<text x=\"20\" y=\"" + fmt(mt + ph / 2) + "\" font-size=\"13\" text-anchor=\"middle\" " +
         "transform=\"rotate(-90 20 " + fmt(mt + ph / 2) + ")\">" + ylabel + "</text>\n";

  for (size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const char* color = kPalette[k % (sizeof(kPalette) / sizeof(kPalette[0]))];
    std::string points;
    for (size_t i = 0; i < s.x.size(); ++i) {
      points += fmt(X(s.x[i])) + "," + fmt(Y(s.y[i])) + " ";
    }
    svg += "<polyline fill=\"none\" stroke=\"" + std::string(color) +
           "\" stroke-width=\"2\" points=\"" + points + "\"/>\n";
    for (size_t i = 0; i < s.x.size(); ++i) {
      if (i < s.err.size() && s.err[i] > 0) {
        svg += "<line x1=\"" + fmt(X(s.x[i])) + "\" y1=\"" + fmt(Y(s.y[i] - s.err[i])) +
               "\" x2=\"" + fmt(X(s.x[i])) + "\" y2=\"" + fmt(Y(s.y[i] + s.err[i])) +
               "\" stroke=\"" + color + "\" stroke-width=\"1\"/>\n";
      }
      svg += "<circle cx=\"" + fmt(X(s.x[i])) + "\" cy=\"" + fmt(Y(s.y[i])) +
             "\" r=\"3\" fill=\"" + color + "\"/>\n";
    }
    const double ly = mt + 18 + 20 * static_cast<double>(k);
    svg += "<line x1=\"" + fmt(ml + pw + 12) + "\" y1=\"" + fmt(ly) + "\" x2=\"" +
           fmt(ml + pw + 38) + "\" y2=\"" + fmt(ly) + "\" stroke=\"" + color +
           "\" stroke-width=\"2\"/>\n";
    svg += "<text x=\"" + fmt(ml + pw + 44) + "\" y=\"" + fmt(ly + 4) + "\" font-size=\"12\">" +
           s.label + "</text>\n";
  }

  svg += "</svg>\n";
  write_text_file(path, svg);
}

}  // namespace slicesim
