#include "lwpd/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

namespace lwpd {

namespace {

int scheme_rank(const std::string& s) {
  if (s == "lwpd") return 0;
  if (s == "gc") return 1;
  if (s == "kac") return 2;
  if (s == "centralized") return 3;
  return 4;
}

const char* scheme_color(const std::string& s) {
  if (s == "lwpd") return "#1f77b4";
  if (s == "gc") return "#d62728";
  if (s == "kac") return "#2ca02c";
  if (s == "centralized") return "#7f7f7f";
  return "#9467bd";
}

template <typename T>
T lower_median(std::vector<T> v) {
  std::sort(v.begin(), v.end());
  return v[(v.size() - 1) / 2];
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

}  // namespace

std::vector<SchemeCurve> median_curves(const std::vector<MetricsRecord>& rows) {
  // per scheme, per seed, rows in input order
  std::map<std::string, std::map<std::uint64_t, std::vector<MetricsRecord>>> bucket;
  for (const auto& r : rows) bucket[r.scheme][r.seed].push_back(r);

  std::vector<SchemeCurve> curves;
  for (auto& [scheme, runs] : bucket) {
    size_t len = SIZE_MAX;
    for (auto& [seed, run] : runs) len = std::min(len, run.size());
    if (len == SIZE_MAX) len = 0;
    SchemeCurve c;
    c.scheme = scheme;
    c.seeds = static_cast<int>(runs.size());
    for (size_t i = 0; i < len; ++i) {
      std::vector<double> time, tl, ta, trl;
      std::vector<long> upd;
      std::vector<long long> comm, mults;
      for (auto& [seed, run] : runs) {
        time.push_back(run[i].sim_time);
        tl.push_back(run[i].test_loss);
        ta.push_back(run[i].test_accuracy);
        trl.push_back(run[i].train_loss);
        upd.push_back(run[i].updates);
        comm.push_back(run[i].comm_floats);
        mults.push_back(run[i].decode_mults);
      }
      MetricsRecord m;
      m.scheme = scheme;
      m.seed = 0;  // aggregate row
      m.sim_time = lower_median(time);
      m.updates = lower_median(upd);
      m.test_loss = lower_median(tl);
      m.test_accuracy = lower_median(ta);
      m.train_loss = lower_median(trl);
      m.comm_floats = lower_median(comm);
      m.decode_mults = lower_median(mults);
      c.points.push_back(std::move(m));
    }
    curves.push_back(std::move(c));
  }
  std::stable_sort(curves.begin(), curves.end(), [](const SchemeCurve& a, const SchemeCurve& b) {
    int ra = scheme_rank(a.scheme), rb = scheme_rank(b.scheme);
    if (ra != rb) return ra < rb;
    return a.scheme < b.scheme;
  });
  return curves;
}

namespace {

std::string render_table(const std::vector<SchemeCurve>& curves) {
  std::ostringstream out;
  out << "== median trajectories (lower median across seeds) ==\n";
  out << "scheme,seeds,sim_time,updates,test_loss,test_accuracy,train_loss,"
         "comm_floats,decode_mults\n";
  for (const auto& c : curves)
    for (const auto& p : c.points) {
      char buf[256];
      std::snprintf(buf, sizeof buf, "%s,%d,%.6g,%ld,%.6g,%.6g,%.6g,%lld,%lld\n",
                    c.scheme.c_str(), c.seeds, p.sim_time, p.updates, p.test_loss,
                    p.test_accuracy, p.train_loss, p.comm_floats, p.decode_mults);
      out << buf;
    }
  out << "\n== final checkpoint ==\n";
  out << "scheme,seeds,sim_time,updates,test_loss,test_accuracy,comm_floats,decode_mults\n";
  for (const auto& c : curves) {
    if (c.points.empty()) continue;
    const MetricsRecord& p = c.points.back();
    char buf[256];
    std::snprintf(buf, sizeof buf, "%s,%d,%.6g,%ld,%.6g,%.6g,%lld,%lld\n", c.scheme.c_str(),
                  c.seeds, p.sim_time, p.updates, p.test_loss, p.test_accuracy, p.comm_floats,
                  p.decode_mults);
    out << buf;
  }
  return out.str();
}

std::string render_svg(const std::vector<SchemeCurve>& curves, bool log_loss) {
  const double W = 760, H = 480;
  const double ml = 70, mr = 170, mt = 20, mb = 50;
  const double pw = W - ml - mr, ph = H - mt - mb;

  double xmax = 0, ymin = 0, ymax = 1;
  bool have = false;
  auto yval = [log_loss](double loss) {
    return log_loss ? std::log10(std::max(loss, 1e-12)) : loss;
  };
  for (const auto& c : curves)
    for (const auto& p : c.points) {
      double y = yval(p.test_loss);
      if (!have) {
        ymin = ymax = y;
        have = true;
      }
      xmax = std::max(xmax, p.sim_time);
      ymin = std::min(ymin, y);
      ymax = std::max(ymax, y);
    }
  if (!have) {
    ymin = 0;
    ymax = 1;
  }
  if (xmax <= 0) xmax = 1;
  double pad = (ymax - ymin) * 0.05;
  if (pad <= 0) pad = 0.5;
  ymin -= pad;
  ymax += pad;

  auto px = [&](double x) { return ml + x / xmax * pw; };
  auto py = [&](double y) { return mt + (ymax - y) / (ymax - ymin) * ph; };

  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
    << "\" viewBox=\"0 0 " << W << " " << H << "\">\n";
  s << "<rect width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
  s << "<g font-family=\"sans-serif\" font-size=\"12\" fill=\"#333\">\n";

  // frame and ticks
  s << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << pw << "\" height=\"" << ph
    << "\" fill=\"none\" stroke=\"#999\"/>\n";
  for (int i = 0; i <= 5; ++i) {
    double xv = xmax * i / 5.0;
    double x = px(xv);
    s << "<line x1=\"" << fmt("%.2f", x) << "\" y1=\"" << mt + ph << "\" x2=\"" << fmt("%.2f", x)
      << "\" y2=\"" << mt + ph + 5 << "\" stroke=\"#999\"/>\n";
    s << "<text x=\"" << fmt("%.2f", x) << "\" y=\"" << mt + ph + 20
      << "\" text-anchor=\"middle\">" << fmt("%.4g", xv) << "</text>\n";

    double yv = ymin + (ymax - ymin) * i / 5.0;
    double y = py(yv);
    double label = log_loss ? std::pow(10.0, yv) : yv;
    s << "<line x1=\"" << ml - 5 << "\" y1=\"" << fmt("%.2f", y) << "\" x2=\"" << ml
      << "\" y2=\"" << fmt("%.2f", y) << "\" stroke=\"#999\"/>\n";
    s << "<text x=\"" << ml - 8 << "\" y=\"" << fmt("%.2f", y + 4)
      << "\" text-anchor=\"end\">" << fmt("%.3g", label) << "</text>\n";
  }
  s << "<text x=\"" << ml + pw / 2 << "\" y=\"" << H - 10
    << "\" text-anchor=\"middle\">simulated seconds</text>\n";
  s << "<text x=\"18\" y=\"" << mt + ph / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
    << mt + ph / 2 << ")\">" << (log_loss ? "median test loss (log scale)" : "median test loss")
    << "</text>\n";

  // curves
  for (const auto& c : curves) {
    if (c.points.empty()) continue;
    s << "<polyline fill=\"none\" stroke=\"" << scheme_color(c.scheme)
      << "\" stroke-width=\"1.8\" points=\"";
    for (const auto& p : c.points)
      s << fmt("%.2f", px(p.sim_time)) << "," << fmt("%.2f", py(yval(p.test_loss))) << " ";
    s << "\"/>\n";
  }

  // legend
  double ly = mt + 10;
  for (const auto& c : curves) {
    double lx = W - mr + 16;
    s << "<line x1=\"" << lx << "\" y1=\"" << ly << "\" x2=\"" << lx + 26 << "\" y2=\"" << ly
      << "\" stroke=\"" << scheme_color(c.scheme) << "\" stroke-width=\"2\"/>\n";
    s << "<text x=\"" << lx + 32 << "\" y=\"" << ly + 4 << "\">" << c.scheme << " ("
      << c.seeds << (c.seeds == 1 ? " seed" : " seeds") << ")</text>\n";
    ly += 20;
  }
  s << "</g>\n</svg>\n";
  return s.str();
}

}  // namespace

ReportOutput render_report(const std::vector<MetricsRecord>& rows, bool log_loss) {
  std::vector<SchemeCurve> curves = median_curves(rows);
  ReportOutput out;
  out.table = render_table(curves);
  out.svg = render_svg(curves, log_loss);
  return out;
}

}  // namespace lwpd
