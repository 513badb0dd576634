// Experiment configuration: key=value files with a fixed key set.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace lwpd {

struct DelayModel {
  double base = 0.01;             // seconds per work unit
  double rate = 100.0;            // exponential jitter rate (inf disables jitter)
  double straggler_prob = 0.0;
  double straggler_factor = 1.0;  // multiplies the compute term when straggling
  double downlink = 0.0;          // parameter fetch latency
  double uplink = 0.0;            // result latency
};

struct ExperimentConfig {
  std::string scheme = "lwpd";  // lwpd | gc | kac | centralized
  int n = 8;
  int k = 4;
  int t = 2;
  std::string mode = "data-only";
  int K = 0;                     // kac arrivals per round, required for kac
  int s_gc = -1;                 // gc straggler budget, required for gc
  std::string gc_variant = "cyclic";  // cyclic | fractional
  std::uint64_t seed = 1;
  double lr = 0.1;
  double time_budget = 0.0;      // required
  double eval_interval = 0.0;    // default time_budget / 20
  long eval_every_updates = 0;   // 0 = time-based checkpoints
  std::string family = "logistic";
  std::vector<int> layers;       // hidden sizes for mlp
  std::string dataset = "synthetic";  // or a csv path
  int classes = 2;
  int components = 0;            // default: one per class
  int dim = 2;
  int records = 1000;
  double separation = 6.0;
  double sigma = 1.0;
  DelayModel delay;
  std::vector<int> dead_workers;
  double max_staleness = 0.0;    // 0 = no cutoff
  std::string output = "metrics.csv";
  std::string tape_in;
  std::string tape_out;
};

// Parses `key = value` lines ('#' comments). Unknown keys and malformed
// values raise std::invalid_argument with a one-line message.
ExperimentConfig load_config(const std::string& path);
ExperimentConfig parse_config_text(const std::string& text);
void save_config(const ExperimentConfig& cfg, const std::string& path);

// Scheme-dependent validation (missing K, bad ranges, ...).
void validate_config(const ExperimentConfig& cfg);

}  // namespace lwpd
