// Aggregation of metrics CSVs into a comparison table and an SVG chart.
// Everything here is a pure function of the input records.
#pragma once

#include <string>
#include <vector>

#include "lwpd/metrics.hpp"

namespace lwpd {

// Lower-median trajectory per scheme, checkpoint by checkpoint, across the
// seeds present in the input. Curves are truncated to the shortest run of
// their scheme.
struct SchemeCurve {
  std::string scheme;
  int seeds = 0;
  std::vector<MetricsRecord> points;
};

std::vector<SchemeCurve> median_curves(const std::vector<MetricsRecord>& rows);

struct ReportOutput {
  std::string table;  // plain text comparison table
  std::string svg;    // test_loss vs sim_time, one polyline per scheme
};

ReportOutput render_report(const std::vector<MetricsRecord>& rows, bool log_loss);

}  // namespace lwpd
