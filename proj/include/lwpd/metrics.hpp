// Trajectory records shared by the simulator, the report writer, and the CLI.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace lwpd {

struct MetricsRecord {
  std::string scheme;
  std::uint64_t seed = 0;
  double sim_time = 0.0;
  long updates = 0;
  double test_loss = 0.0;
  double test_accuracy = 0.0;
  double train_loss = 0.0;
  long long comm_floats = 0;
  long long decode_mults = 0;
};

std::string metrics_header();
std::string format_metrics_row(const MetricsRecord& r);

// Overwrites `path` with a header line plus one row per record.
void save_metrics_csv(const std::vector<MetricsRecord>& records, const std::string& path);
std::vector<MetricsRecord> load_metrics_csv(const std::string& path);

}  // namespace lwpd
