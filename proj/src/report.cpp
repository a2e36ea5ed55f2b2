#include "robustq/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "robustq/errors.hpp"

namespace robustq {

namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&':
        out += "&amp;";
        break;
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      case '"':
        out += "&quot;";
        break;
      default:
        out += c;
    }
  }
  return out;
}

std::string fixed(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", x);
  return buf;
}

}  // namespace

std::string format_number(double x, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, x);
  return buf;
}

std::string aggregate_csv(const AggregateResult& r) {
  std::string out = "step,mean_error,min_error,max_error,trigger_rate\n";
  out.reserve(out.size() + r.steps.size() * 64);
  for (std::size_t i = 0; i < r.steps.size(); ++i) {
    out += std::to_string(r.steps[i]);
    out += ',';
    out += format_number(r.mean_error[i]);
    out += ',';
    out += format_number(r.min_error[i]);
    out += ',';
    out += format_number(r.max_error[i]);
    out += ',';
    out += format_number(r.trigger_rate[i]);
    out += '\n';
  }
  return out;
}

std::string line_plot_svg(std::span<const PlotSeries> series, const std::string& title,
                          std::size_t max_points) {
  if (series.empty()) throw InvalidArgument("nothing to plot");
  max_points = std::max<std::size_t>(max_points, 2);
  const double width = 860, height = 520;
  const double left = 80, right = 230, top = 50, bottom = 60;
  const double pw = width - left - right, ph = height - top - bottom;
  constexpr double kFloor = 1e-6;

  double x_max = 1.0;
  double y_lo = std::numeric_limits<double>::infinity();
  double y_hi = -std::numeric_limits<double>::infinity();
  for (const PlotSeries& s : series) {
    x_max = std::max(x_max, static_cast<double>(s.result->horizon));
    for (double e : s.result->mean_error) {
      const double v = std::log10(std::max(e, kFloor));
      y_lo = std::min(y_lo, v);
      y_hi = std::max(y_hi, v);
    }
  }
  if (!std::isfinite(y_lo)) {
    y_lo = 0.0;
    y_hi = 1.0;
  }
  y_lo = std::floor(y_lo);
  y_hi = std::max(std::ceil(y_hi), y_lo + 1.0);

  auto px = [&](double step) { return left + pw * step / x_max; };
  auto py = [&](double e) {
    const double v = std::log10(std::max(e, kFloor));
    return top + ph * (y_hi - v) / (y_hi - y_lo);
  };

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fixed(width) + "\" height=\"" +
         fixed(height) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg += "<text x=\"" + fixed(left + pw / 2) + "\" y=\"28\" text-anchor=\"middle\" font-size=\"15\">" +
         xml_escape(title) + "</text>\n";

  for (double d = y_lo; d <= y_hi + 1e-9; d += 1.0) {
    const double y = top + ph * (y_hi - d) / (y_hi - y_lo);
    svg += "<line x1=\"" + fixed(left) + "\" y1=\"" + fixed(y) + "\" x2=\"" + fixed(left + pw) +
           "\" y2=\"" + fixed(y) + "\" stroke=\"#ddd\"/>\n";
    svg += "<text x=\"" + fixed(left - 8) + "\" y=\"" + fixed(y + 4) + "\" text-anchor=\"end\">1e" +
           std::to_string(static_cast<int>(d)) + "</text>\n";
  }
  for (int k = 0; k <= 5; ++k) {
    const double step = x_max * k / 5.0;
    const double x = px(step);
    svg += "<line x1=\"" + fixed(x) + "\" y1=\"" + fixed(top + ph) + "\" x2=\"" + fixed(x) +
           "\" y2=\"" + fixed(top + ph + 5) + "\" stroke=\"black\"/>\n";
    svg += "<text x=\"" + fixed(x) + "\" y=\"" + fixed(top + ph + 20) + "\" text-anchor=\"middle\">" +
           format_number(step, 4) + "</text>\n";
  }
  svg += "<rect x=\"" + fixed(left) + "\" y=\"" + fixed(top) + "\" width=\"" + fixed(pw) +
         "\" height=\"" + fixed(ph) + "\" fill=\"none\" stroke=\"black\"/>\n";
  svg += "<text x=\"" + fixed(left + pw / 2) + "\" y=\"" + fixed(height - 15) +
         "\" text-anchor=\"middle\">step t</text>\n";
  svg += "<text x=\"20\" y=\"" + fixed(top + ph / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 20 " +
         fixed(top + ph / 2) + ")\">mean E_t (log scale)</text>\n";

  for (std::size_t k = 0; k < series.size(); ++k) {
    const AggregateResult& r = *series[k].result;
    const char* color = kPalette[k % std::size(kPalette)];
    const std::size_t n = r.steps.size();
    const std::size_t stride = n > max_points ? (n + max_points - 1) / max_points : 1;
    svg += "<polyline fill=\"none\" stroke=\"" + std::string(color) + "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < n; i += stride) {
      svg += fixed(px(static_cast<double>(r.steps[i]))) + "," + fixed(py(r.mean_error[i])) + " ";
    }
    if (n > 0 && (n - 1) % stride != 0) {
      svg += fixed(px(static_cast<double>(r.steps[n - 1]))) + "," + fixed(py(r.mean_error[n - 1]));
    }
    svg += "\"/>\n";
    const double ly = top + 10 + 18.0 * static_cast<double>(k);
    svg += "<line x1=\"" + fixed(left + pw + 12) + "\" y1=\"" + fixed(ly) + "\" x2=\"" +
           fixed(left + pw + 32) + "\" y2=\"" + fixed(ly) + "\" stroke=\"" + color +
           "\" stroke-width=\"2\"/>\n";
    svg += "<text x=\"" + fixed(left + pw + 38) + "\" y=\"" + fixed(ly + 4) + "\">" +
           xml_escape(series[k].label) + "</text>\n";
  }
  svg += "</svg>\n";
  return svg;
}

std::string summary_line(const AggregateResult& r) {
  std::string s = r.name + ": learner=" + std::string(to_string(r.learner)) +
                  " eps=" + format_number(r.epsilon, 6) + " seeds=" + std::to_string(r.seeds.size()) +
                  " T=" + std::to_string(r.horizon) +
                  " steady_state_error=" + format_number(r.steady_state_error, 6);
  if (r.learner != LearnerKind::vanilla) {
    s += " burn_in=" + std::to_string(r.burn_in) +
         " post_burn_in_trigger_rate=" + format_number(r.post_burn_in_trigger_rate, 4) +
         " max|Q|=" + format_number(r.max_iterate_norm, 6) +
         " bound=" + format_number(r.iterate_bound, 6) +
         " violations=" + std::to_string(r.iterate_bound_violations + r.proxy_bound_violations);
  }
  if (r.subsample_tau > 1) s += " tau=" + std::to_string(r.subsample_tau);
  return s;
}

}  // namespace robustq
