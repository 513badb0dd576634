#include "lwpd/codebook.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace lwpd {

namespace {

bool is_pow2(long long v) { return v > 0 && (v & (v - 1)) == 0; }

int next_pow2(int v) {
  int p = 1;
  while (p < v) p *= 2;
  return p;
}

void place(SignMatrix& m, const SignMatrix& blk, int row0, int col0) {
  for (size_t i = 0; i < blk.size(); ++i)
    for (size_t j = 0; j < blk[i].size(); ++j)
      m[row0 + i][col0 + j] = blk[i][j];
}

}  // namespace

CodeParams make_params(int n, int k, int t) {
  if (k < 1 || n < 1) throw std::invalid_argument("n and k must be positive");
  if (t < 2 || !is_pow2(t)) throw std::invalid_argument("t must be a power of two >= 2");
  if (n < k || n > 2 * k) throw std::invalid_argument("n must satisfy k <= n <= 2k");
  CodeParams p;
  p.n = n;
  p.k = k;
  p.t = t;
  p.virtual_k = next_pow2(k);
  p.virtual_n = 2 * p.virtual_k;
  if (t > p.virtual_n / 4)
    throw std::invalid_argument("unsupported parameters: t exceeds n'/4 (need k'/t >= 2)");
  p.s = p.virtual_k / t;
  bool exact = is_pow2(k) && n == 2 * k;
  p.d = exact ? 0 : find_displacement(k);
  return p;
}

int char_sign(std::uint64_t alpha, std::uint64_t beta, int p) {
  if (p < 0 || p > 63) throw std::invalid_argument("bit length out of range");
  std::uint64_t lim = 1ull << p;
  if (alpha >= lim || beta >= lim)
    throw std::invalid_argument("bit-string length mismatch");
  return std::popcount(alpha & beta) % 2 == 0 ? 1 : -1;
}

SignMatrix build_x(int t) {
  if (!is_pow2(t)) throw std::invalid_argument("t must be a power of two");
  int p = 0;
  while ((1 << p) < t) ++p;
  SignMatrix x(t, std::vector<int>(t));
  for (int a = 0; a < t; ++a)
    for (int b = 0; b < t; ++b) x[a][b] = char_sign(a, b, p);
  return x;
}

LrPair build_lr(int t) {
  if (t < 2 || !is_pow2(t)) throw std::invalid_argument("t must be a power of two >= 2");
  int h = t / 2;
  SignMatrix xh = build_x(h);
  LrPair lr;
  lr.l.assign(t, std::vector<int>(t, 0));
  lr.r.assign(t, std::vector<int>(t, 0));
  for (int i = 0; i < t; ++i)
    for (int j = 0; j < h; ++j) {
      lr.l[i][h + j] = xh[i % h][j];
      lr.r[i][j] = (i < h ? 1 : -1) * xh[i % h][j];
    }
  return lr;
}

double Codebook::scale() const { return 1.0 / std::sqrt(static_cast<double>(params.t)); }

int Codebook::row_for(int worker, long round) const {
  if (worker < 0 || worker >= params.n) throw std::invalid_argument("worker out of range");
  if (!schedule) return worker;
  long nn = params.virtual_n;
  return static_cast<int>((worker + static_cast<long>(schedule->displacement) * (round % nn) % nn) % nn);
}

int Codebook::rotation(long round) const {
  if (!schedule) return 0;
  return static_cast<int>(round % params.k);
}

Codebook build_code(const CodeParams& params) {
  Codebook cb;
  cb.params = params;
  int t = params.t, s = params.s;
  int kk = params.virtual_k, nn = params.virtual_n;
  cb.signs.assign(nn, std::vector<int>(kk, 0));
  SignMatrix x = build_x(t);
  LrPair lr = build_lr(t);
  for (int c = 0; c < s; ++c) place(cb.signs, x, c * t, c * t);
  for (int i = 0; i < s; ++i) {
    int row0 = kk + i * t;
    if (i < s - 1) {
      place(cb.signs, lr.l, row0, i * t);
      place(cb.signs, lr.r, row0, (i + 1) * t);
    } else {
      place(cb.signs, lr.r, row0, 0);
      place(cb.signs, lr.l, row0, (s - 1) * t);
    }
  }
  if (params.scheduled())
    cb.schedule = Schedule{params.d, static_cast<long>(nn) * params.k};
  return cb;
}

Codebook build_code(int n, int k, int t) { return build_code(make_params(n, k, t)); }

double projective_distance(const std::vector<double>& u, const std::vector<double>& v) {
  if (u.size() != v.size()) throw std::invalid_argument("dimension mismatch");
  double nu = 0, nv = 0, dot = 0;
  for (size_t i = 0; i < u.size(); ++i) {
    nu += u[i] * u[i];
    nv += v[i] * v[i];
    dot += u[i] * v[i];
  }
  if (std::abs(std::sqrt(nu) - 1.0) > 1e-9 || std::abs(std::sqrt(nv) - 1.0) > 1e-9)
    throw std::invalid_argument("inputs must be unit norm");
  double a = std::min(1.0, std::abs(dot));
  return std::acos(a);
}

namespace {

// Distances of one codebook are grouped on a fixed grid so equal values from
// different float paths land in the same histogram bin.
double quantize(double v) { return std::round(v * 1e12) / 1e12; }

}  // namespace

DistanceReport analyze_distance(const Codebook& cb) {
  int rows = static_cast<int>(cb.signs.size());
  if (rows < 2) throw std::invalid_argument("need at least two rows");
  double sc = cb.scale();
  std::vector<std::vector<double>> v(rows);
  for (int i = 0; i < rows; ++i) {
    v[i].resize(cb.signs[i].size());
    for (size_t j = 0; j < cb.signs[i].size(); ++j) v[i][j] = sc * cb.signs[i][j];
  }
  DistanceReport rep;
  rep.min_distance = std::numbers::pi;
  for (int i = 0; i < rows; ++i)
    for (int j = i + 1; j < rows; ++j) {
      double d = projective_distance(v[i], v[j]);
      rep.min_distance = std::min(rep.min_distance, d);
      rep.pair_histogram[quantize(d)] += 1;
    }
  double half_pi = std::numbers::pi / 2;
  rep.gap_ratio = (half_pi - rep.min_distance) / half_pi;
  return rep;
}

std::string format_distance_report(const DistanceReport& rep) {
  std::ostringstream os;
  char buf[128];
  std::snprintf(buf, sizeof buf, "min_distance_rad: %.12f\n", rep.min_distance);
  os << buf;
  os << "pair_histogram:\n";
  long total = 0;
  for (const auto& [d, c] : rep.pair_histogram) {
    std::snprintf(buf, sizeof buf, "  %.12f %ld\n", d, c);
    os << buf;
    total += c;
  }
  os << "pairs: " << total << "\n";
  std::snprintf(buf, sizeof buf, "gap_ratio: %.12f ((pi/2 - min) / (pi/2))\n", rep.gap_ratio);
  os << buf;
  // The same gap normalized by pi instead of pi/2 is half as large; for the
  // minimum pi/3 that is 1/6 ~= 16%, a figure sometimes quoted for this family.
  std::snprintf(buf, sizeof buf, "gap_ratio_pi_normalized: %.12f (1/6 ~= 16%% at min pi/3)\n",
                rep.gap_ratio / 2);
  os << buf;
  return os.str();
}

std::map<int, int> weight_distribution(const Codebook& cb) {
  std::map<int, int> w;
  for (const auto& row : cb.signs) {
    int nz = 0;
    for (int v : row) nz += v != 0;
    w[nz] += 1;
  }
  return w;
}

int find_displacement(long long k) {
  if (k < 1) throw std::invalid_argument("k must be positive");
  auto is_prime = [](int v) {
    for (int q = 2; q * q <= v; ++q)
      if (v % q == 0) return false;
    return v > 1;
  };
  for (int p = 3;; p += 2)
    if (is_prime(p) && k % p != 0) return p;
}

bool check_coverage(int virtual_n, int k, int d, long rounds) {
  if (virtual_n < 1 || k < 1 || d < 1) throw std::invalid_argument("bad schedule parameters");
  std::vector<char> seen(static_cast<size_t>(virtual_n) * k, 0);
  long hit = 0;
  long row = 0, rot = 0;
  for (long r = 0; r < rounds && hit < virtual_n * static_cast<long>(k); ++r) {
    size_t idx = static_cast<size_t>(row) * k + rot;
    if (!seen[idx]) {
      seen[idx] = 1;
      ++hit;
    }
    row = (row + d) % virtual_n;
    rot = (rot + 1) % k;
  }
  return hit == virtual_n * static_cast<long>(k);
}

bool check_coverage(const CodeParams& params, long rounds) {
  if (!params.scheduled()) throw std::invalid_argument("codebook has no schedule");
  return check_coverage(params.virtual_n, params.k, params.d, rounds);
}

void save_codebook(const Codebook& cb, const std::string& path) {
  std::ostringstream os;
  const CodeParams& p = cb.params;
  os << p.n << " " << p.k << " " << p.t << " " << p.d << "\n";
  for (const auto& row : cb.signs) {
    for (size_t j = 0; j < row.size(); ++j) os << (j ? " " : "") << row[j];
    os << "\n";
  }
  if (cb.schedule) {
    os << "schedule\n";
    for (long r = 0; r < cb.schedule->period; ++r)
      for (int w = 0; w < p.n; ++w)
        os << r << " " << w << " " << cb.row_for(w, r) << " " << cb.rotation(r) << "\n";
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  f << os.str();
  if (!f) throw std::runtime_error("write failed: " + path);
}

Codebook load_codebook(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path);
  int n, k, t, d;
  if (!(f >> n >> k >> t >> d)) throw std::runtime_error("bad codebook header");
  CodeParams p = make_params(n, k, t);
  p.d = d;  // keep the stored displacement; `check` validates it
  Codebook cb;
  cb.params = p;
  cb.signs.assign(p.virtual_n, std::vector<int>(p.virtual_k));
  for (int i = 0; i < p.virtual_n; ++i)
    for (int j = 0; j < p.virtual_k; ++j)
      if (!(f >> cb.signs[i][j])) throw std::runtime_error("truncated codebook matrix");
  if (d != 0) {
    std::string tag;
    if (!(f >> tag) || tag != "schedule") throw std::runtime_error("missing schedule section");
    cb.schedule = Schedule{d, static_cast<long>(p.virtual_n) * p.k};
    long rr;
    int ww, row, rot;
    for (long r = 0; r < cb.schedule->period; ++r)
      for (int w = 0; w < p.n; ++w) {
        if (!(f >> rr >> ww >> row >> rot)) throw std::runtime_error("truncated schedule");
        if (rr != r || ww != w || row != cb.row_for(w, r) || rot != cb.rotation(r))
          throw std::runtime_error("schedule entries do not match displacement rule");
      }
  }
  return cb;
}

}  // namespace lwpd
