// Deterministic discrete-event simulation of asynchronous coded gradient
// descent plus the reference schemes it is compared against.
#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "lwpd/assignment.hpp"
#include "lwpd/codebook.hpp"
#include "lwpd/config.hpp"
#include "lwpd/learner.hpp"
#include "lwpd/metrics.hpp"

namespace lwpd {

struct DelayDraw {
  bool straggler = false;
  double jitter = 0.0;
};

// Compute-plus-jitter latency for a task of `work` units under `dm`.
double delay_seconds(const DelayModel& dm, double work, const DelayDraw& draw);

// Draws straggler flag then jitter from `rng` and applies delay_seconds.
double sample_delay(const DelayModel& dm, double work, std::mt19937_64& rng);

// Reproducible per-(worker, round) delay draws. Every scheme replays the
// same tape for a given seed, so schemes face identical straggler patterns.
// Imported entries override the generated stream.
class DelayTape {
 public:
  DelayTape() = default;
  DelayTape(std::uint64_t seed, double straggler_prob, double rate);

  DelayDraw draw(int worker, long round) const;

  // Text format: one "worker round straggler jitter" line per draw. Negative
  // bounds mean "whatever draw() has been asked for so far".
  void export_tape(const std::string& path, int workers = -1, long rounds = -1) const;
  void import_tape(const std::string& path);

 private:
  std::uint64_t seed_ = 0;
  double prob_ = 0.0;
  double rate_ = 100.0;
  std::map<std::pair<int, long>, DelayDraw> overrides_;
  mutable int seen_workers_ = 0;
  mutable long seen_rounds_ = 0;
};

struct MasterCounters {
  long long decode_mults = 0;   // scalar multiplications during decode
  long long decode_adds = 0;    // signed vector adds during decode
  long long lr_scalings = 0;    // learning-rate vector scalings
  long long comm_floats = 0;    // uplink + downlink floats
  long updates = 0;
};

struct SimContext {
  Codebook cb;                  // populated for the lwpd scheme only
  GradientBlockLayout layout;   // likewise
  Dataset data;
  Model model0;
  DelayTape tape;
};

// Builds dataset, initial model, delay tape, and (for lwpd) the code and
// block layout from `cfg`. Validates the config first.
SimContext prepare_context(const ExperimentConfig& cfg);

// Each run starts from ctx.model0, advances simulated time until
// cfg.time_budget, and returns checkpoint records. `counters` and `final`
// are optional outputs.
std::vector<MetricsRecord> run_lwpd(const ExperimentConfig& cfg, const SimContext& ctx,
                                    MasterCounters* counters = nullptr, Model* final = nullptr);
std::vector<MetricsRecord> run_kac(const ExperimentConfig& cfg, const SimContext& ctx,
                                   MasterCounters* counters = nullptr, Model* final = nullptr);
std::vector<MetricsRecord> run_gc(const ExperimentConfig& cfg, const SimContext& ctx,
                                  MasterCounters* counters = nullptr, Model* final = nullptr);
std::vector<MetricsRecord> run_centralized(const ExperimentConfig& cfg, const SimContext& ctx,
                                           MasterCounters* counters = nullptr,
                                           Model* final = nullptr);

// prepare_context + dispatch on cfg.scheme.
std::vector<MetricsRecord> run_scheme(const ExperimentConfig& cfg,
                                      MasterCounters* counters = nullptr);

// Gradient-coding encode matrix with cyclic supports {i, ..., i+s} mod n.
// Row i is the unique support-constrained combination orthogonal to a seeded
// s x n matrix H with H*1 = 0, so any n-s rows can reconstruct the all-ones
// row exactly.
std::vector<std::vector<double>> gc_encode_matrix(int n, int s, std::uint64_t seed);

// Least-squares coefficients a with a' * B[arrived] = 1'. Scalar
// multiplications performed while solving are added to *mults if given.
std::vector<double> gc_decode_coeffs(const std::vector<std::vector<double>>& code,
                                     const std::vector<int>& arrived,
                                     long long* mults = nullptr);

}  // namespace lwpd
