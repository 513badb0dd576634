// Lightweight projective derivative codes: sign matrices built from characters
// of the group F_2^p, with a toroidal round schedule for parameter counts that
// are not powers of two.
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace lwpd {

using SignMatrix = std::vector<std::vector<int>>;

struct CodeParams {
  int n = 0;  // worker count requested
  int k = 0;  // derivative block count requested
  int t = 0;  // blocks mixed per worker, power of two
  int s = 0;  // virtual_k / t
  int d = 0;  // schedule displacement, 0 when no schedule is needed
  int virtual_k = 0;  // next power of two >= k
  int virtual_n = 0;  // 2 * virtual_k

  bool scheduled() const { return d != 0; }
};

// Validates n, k, t and derives s, d and the virtual dimensions.
// Throws std::invalid_argument when t is not a power of two >= 2, when
// n is outside [k, 2k], or when the internal row budget would force s < 2.
CodeParams make_params(int n, int k, int t);

// Character chi_alpha(beta) = +1 iff popcount(alpha AND beta) is even.
// alpha and beta are bit strings of length p; values >= 2^p are a length
// mismatch and throw std::invalid_argument.
int char_sign(std::uint64_t alpha, std::uint64_t beta, int p);

// t x t sign matrix X with X[a][b] = chi_a(b). Satisfies X * X^T = t * I and
// the exact recursion X^(2t) = X^(2) (x) X^(t).
SignMatrix build_x(int t);

struct LrPair {
  SignMatrix l;  // left t/2 columns zero, right block X^(t/2) stacked twice
  SignMatrix r;  // right t/2 columns zero, left block X^(t/2) over -X^(t/2)
};

// Parity block pair for block size t (t >= 2, power of two).
LrPair build_lr(int t);

// Round schedule for general parameters: at round r, worker i evaluates row
// (i + displacement * r) mod virtual_n and every plan block id is rotated by
// r mod k. One full coverage period is virtual_n * k rounds.
struct Schedule {
  int displacement = 0;
  long period = 0;
};

struct Codebook {
  CodeParams params;
  SignMatrix signs;  // virtual_n x virtual_k, entries in {-1, 0, +1}
  std::optional<Schedule> schedule;

  double scale() const;  // common row scale 1/sqrt(t)
  int row_for(int worker, long round) const;
  int rotation(long round) const;
};

// Block construction: s systematic block rows of X^(t) on the diagonal, then
// parity rows [L R] wrapped cyclically with the final block row [R 0 ... L].
// (n, k) pairs that are not an exact power-of-two 2k layout get a schedule.
Codebook build_code(const CodeParams& params);
Codebook build_code(int n, int k, int t);

// arccos |<u, v>| in [0, pi/2]; inputs must be unit norm within 1e-9.
double projective_distance(const std::vector<double>& u,
                           const std::vector<double>& v);

struct DistanceReport {
  double min_distance = 0.0;
  std::map<double, long> pair_histogram;  // distance -> pair count
  double gap_ratio = 0.0;                 // (pi/2 - min) / (pi/2)
};

DistanceReport analyze_distance(const Codebook& cb);
std::string format_distance_report(const DistanceReport& rep);

// Row weight -> number of rows with that many non-zero entries.
std::map<int, int> weight_distribution(const Codebook& cb);

// Smallest odd prime that does not divide k.
int find_displacement(long long k);

// True iff the schedule anchor orbit {(d*r mod virtual_n, r mod k)} visits
// every residue pair within the given number of rounds.
bool check_coverage(int virtual_n, int k, int d, long rounds);
bool check_coverage(const CodeParams& params, long rounds);

void save_codebook(const Codebook& cb, const std::string& path);
Codebook load_codebook(const std::string& path);

}  // namespace lwpd
