#include "lwpd/metrics.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace lwpd {

std::string metrics_header() {
  return "scheme,seed,sim_time,updates,test_loss,test_accuracy,train_loss,"
         "comm_floats,decode_mults";
}

std::string format_metrics_row(const MetricsRecord& r) {
  char buf[512];
  std::snprintf(buf, sizeof buf, "%s,%llu,%.17g,%ld,%.17g,%.17g,%.17g,%lld,%lld",
                r.scheme.c_str(), static_cast<unsigned long long>(r.seed), r.sim_time,
                r.updates, r.test_loss, r.test_accuracy, r.train_loss, r.comm_floats,
                r.decode_mults);
  return buf;
}

void save_metrics_csv(const std::vector<MetricsRecord>& records, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write metrics: " + path);
  out << metrics_header() << "\n";
  for (const auto& r : records) out << format_metrics_row(r) << "\n";
  if (!out) throw std::runtime_error("cannot write metrics: " + path);
}

std::vector<MetricsRecord> load_metrics_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open metrics: " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty metrics file: " + path);
  if (line != metrics_header())
    throw std::runtime_error("unexpected metrics header in " + path);
  std::vector<MetricsRecord> out;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> cell;
    std::string item;
    std::istringstream row(line);
    while (std::getline(row, item, ',')) cell.push_back(item);
    if (cell.size() != 9)
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": expected 9 columns");
    MetricsRecord r;
    r.scheme = cell[0];
    r.seed = std::strtoull(cell[1].c_str(), nullptr, 10);
    r.sim_time = std::strtod(cell[2].c_str(), nullptr);
    r.updates = std::strtol(cell[3].c_str(), nullptr, 10);
    r.test_loss = std::strtod(cell[4].c_str(), nullptr);
    r.test_accuracy = std::strtod(cell[5].c_str(), nullptr);
    r.train_loss = std::strtod(cell[6].c_str(), nullptr);
    r.comm_floats = std::strtoll(cell[7].c_str(), nullptr, 10);
    r.decode_mults = std::strtoll(cell[8].c_str(), nullptr, 10);
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace lwpd
