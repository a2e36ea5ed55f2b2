#pragma once

#include <span>
#include <string>
#include <vector>

#include "robustq/experiment.hpp"

namespace robustq {

/// step,mean_error,min_error,max_error,trigger_rate; one row per recorded step.
std::string aggregate_csv(const AggregateResult& result);

struct PlotSeries {
  std::string label;
  const AggregateResult* result;
};

/// Mean-error curves on a log-scaled y axis. Long series are thinned to
/// at most `max_points` per curve.
std::string line_plot_svg(std::span<const PlotSeries> series, const std::string& title,
                          std::size_t max_points = 1000);

/// One-line human summary: name, steady-state error, trigger rate, bounds.
std::string summary_line(const AggregateResult& result);

/// Formats a double with `digits` significant digits ("%.*g").
std::string format_number(double x, int digits = 10);

}  // namespace robustq
