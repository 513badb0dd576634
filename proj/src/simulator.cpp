#include "lwpd/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <queue>
#include <set>
#include <sstream>
#include <stdexcept>

namespace lwpd {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

double bits_u01(std::uint64_t bits) { return static_cast<double>(bits >> 11) * 0x1.0p-53; }

double rng_u01(std::mt19937_64& rng) { return bits_u01(rng()); }

double exp_jitter(double u, double rate) {
  if (!(rate > 0) || std::isinf(rate)) return 0.0;
  return -std::log1p(-u) / rate;
}

// Gaussian elimination with partial pivoting. Multiplications and divisions
// performed are added to *mults when given.
std::vector<double> solve_linear(std::vector<std::vector<double>> a, std::vector<double> b,
                                 long long* mults) {
  const int m = static_cast<int>(b.size());
  long long count = 0;
  for (int col = 0; col < m; ++col) {
    int pivot = col;
    for (int r = col + 1; r < m; ++r)
      if (std::fabs(a[r][col]) > std::fabs(a[pivot][col])) pivot = r;
    if (a[pivot][col] == 0.0) throw std::runtime_error("singular decode system");
    std::swap(a[pivot], a[col]);
    std::swap(b[pivot], b[col]);
    for (int r = col + 1; r < m; ++r) {
      double f = a[r][col] / a[col][col];
      ++count;
      for (int c = col; c < m; ++c) {
        a[r][c] -= f * a[col][c];
        ++count;
      }
      b[r] -= f * b[col];
      ++count;
    }
  }
  std::vector<double> x(m, 0.0);
  for (int r = m - 1; r >= 0; --r) {
    double acc = b[r];
    for (int c = r + 1; c < m; ++c) {
      acc -= a[r][c] * x[c];
      ++count;
    }
    x[r] = acc / a[r][r];
    ++count;
  }
  if (mults) *mults += count;
  return x;
}

enum EventKind { kTaskComplete = 0, kEvalCheckpoint = 1, kBroadcastComplete = 2 };

struct Event {
  double time = 0.0;
  int kind = 0;
  int worker = 0;
  long tag = 0;  // round label for task events

  bool operator>(const Event& o) const {
    if (time != o.time) return time > o.time;
    if (kind != o.kind) return kind > o.kind;
    return worker > o.worker;
  }
};

using EventQueue = std::priority_queue<Event, std::vector<Event>, std::greater<Event>>;

double grid_interval(const ExperimentConfig& cfg) {
  return cfg.eval_interval > 0 ? cfg.eval_interval : cfg.time_budget / 20.0;
}

void push_eval_grid(const ExperimentConfig& cfg, EventQueue& q) {
  if (cfg.eval_every_updates > 0) return;
  const double step = grid_interval(cfg);
  const long count = static_cast<long>(std::floor(cfg.time_budget / step + 1e-9));
  for (long i = 0; i <= count; ++i)
    q.push({std::min(static_cast<double>(i) * step, cfg.time_budget), kEvalCheckpoint, -1, 0});
}

struct Checkpoints {
  const ExperimentConfig* cfg = nullptr;
  DataSlice train, test;
  std::vector<MetricsRecord> rows;

  Checkpoints(const ExperimentConfig& c, const Dataset& ds)
      : cfg(&c), train(train_slice(ds)), test(test_slice(ds)) {}

  void emit(const Model& m, double time, const MasterCounters& c) {
    MetricsRecord r;
    r.scheme = cfg->scheme;
    r.seed = cfg->seed;
    r.sim_time = time;
    r.updates = c.updates;
    r.test_loss = eval_loss(m, test);
    r.test_accuracy = eval_accuracy(m, test);
    r.train_loss = eval_loss(m, train);
    r.comm_floats = c.comm_floats;
    r.decode_mults = c.decode_mults;
    rows.push_back(std::move(r));
  }
};

std::vector<char> dead_mask(const ExperimentConfig& cfg) {
  std::vector<char> dead(cfg.n, 0);
  for (int w : cfg.dead_workers) dead[w] = 1;
  return dead;
}

std::vector<int> model_chain(const ExperimentConfig& cfg, const Dataset& ds) {
  ModelFamily fam = parse_family(cfg.family);
  std::vector<int> chain{ds.dim};
  if (fam == ModelFamily::Mlp)
    chain.insert(chain.end(), cfg.layers.begin(), cfg.layers.end());
  chain.push_back(fam == ModelFamily::LinearMse ? 1 : ds.classes);
  return chain;
}

}  // namespace

double delay_seconds(const DelayModel& dm, double work, const DelayDraw& draw) {
  double compute = dm.base * work * (draw.straggler ? dm.straggler_factor : 1.0);
  return compute + draw.jitter;
}

double sample_delay(const DelayModel& dm, double work, std::mt19937_64& rng) {
  DelayDraw d;
  d.straggler = rng_u01(rng) < dm.straggler_prob;
  d.jitter = exp_jitter(rng_u01(rng), dm.rate);
  return delay_seconds(dm, work, d);
}

DelayTape::DelayTape(std::uint64_t seed, double straggler_prob, double rate)
    : seed_(seed), prob_(straggler_prob), rate_(rate) {}

DelayDraw DelayTape::draw(int worker, long round) const {
  seen_workers_ = std::max(seen_workers_, worker + 1);
  seen_rounds_ = std::max(seen_rounds_, round + 1);
  auto it = overrides_.find({worker, round});
  if (it != overrides_.end()) return it->second;
  std::uint64_t h = splitmix64(seed_ ^ 0x6a09e667f3bcc908ull);
  h = splitmix64(h ^ (static_cast<std::uint64_t>(worker) + 1));
  h = splitmix64(h ^ (static_cast<std::uint64_t>(round) + 1));
  DelayDraw d;
  d.straggler = bits_u01(h) < prob_;
  d.jitter = exp_jitter(bits_u01(splitmix64(h)), rate_);
  return d;
}

void DelayTape::export_tape(const std::string& path, int workers, long rounds) const {
  if (workers < 0) workers = seen_workers_;
  if (rounds < 0) rounds = seen_rounds_;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write tape: " + path);
  char buf[64];
  for (int w = 0; w < workers; ++w)
    for (long r = 0; r < rounds; ++r) {
      DelayDraw d = draw(w, r);
      std::snprintf(buf, sizeof buf, "%.17g", d.jitter);
      out << w << " " << r << " " << (d.straggler ? 1 : 0) << " " << buf << "\n";
    }
  if (!out) throw std::runtime_error("cannot write tape: " + path);
}

void DelayTape::import_tape(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open tape: " + path);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream row(line);
    int w = 0, strag = 0;
    long r = 0;
    double jit = 0.0;
    if (!(row >> w >> r >> strag >> jit))
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": bad tape line");
    overrides_[{w, r}] = DelayDraw{strag != 0, jit};
  }
}

SimContext prepare_context(const ExperimentConfig& cfg) {
  validate_config(cfg);
  SimContext ctx;
  if (cfg.dataset == "synthetic") {
    int comps = cfg.components > 0 ? cfg.components : cfg.classes;
    ctx.data = gen_mixture(cfg.classes, comps, cfg.dim, cfg.records, cfg.separation,
                           cfg.sigma, cfg.seed);
  } else {
    ctx.data = load_dataset_csv(cfg.dataset);
  }
  std::vector<int> chain = model_chain(cfg, ctx.data);
  ctx.model0 = make_model(parse_family(cfg.family), chain, splitmix64(cfg.seed));
  if (cfg.scheme == "lwpd") {
    ctx.cb = build_code(cfg.n, cfg.k, cfg.t);
    ctx.layout = partition_gradient(chain, ctx.cb.params, parse_mode(cfg.mode));
  }
  ctx.tape = DelayTape(splitmix64(cfg.seed ^ 0xd1b54a32d192ed03ull),
                       cfg.delay.straggler_prob, cfg.delay.rate);
  if (!cfg.tape_in.empty()) ctx.tape.import_tape(cfg.tape_in);
  return ctx;
}

std::vector<MetricsRecord> run_lwpd(const ExperimentConfig& cfg, const SimContext& ctx,
                                    MasterCounters* counters, Model* final) {
  const Codebook& cb = ctx.cb;
  const GradientBlockLayout& layout = ctx.layout;
  const DelayModel& dm = cfg.delay;
  const double budget = cfg.time_budget;
  const long every = cfg.eval_every_updates;
  const double lr_scaled = cfg.lr * cb.scale();
  const int n = cfg.n;

  Model master = ctx.model0;
  MasterCounters c;
  Checkpoints cp(cfg, ctx.data);
  std::vector<char> dead = dead_mask(cfg);
  std::vector<long> round_of(n, 0);

  struct Pending {
    std::vector<double> v;
    long round = 0;
    double fetched = 0.0;
  };
  std::vector<Pending> pend(n);

  std::vector<std::vector<int>> coords(layout.k);
  for (int b = 0; b < layout.k; ++b) coords[b] = layout.block_coords(b);

  EventQueue q;
  push_eval_grid(cfg, q);
  if (every > 0) cp.emit(master, 0.0, c);
  for (int w = 0; w < n; ++w)
    if (!dead[w]) q.push({dm.downlink, kBroadcastComplete, w, 0});

  while (!q.empty()) {
    Event e = q.top();
    q.pop();
    if (e.time > budget) break;
    if (e.kind == kEvalCheckpoint) {
      cp.emit(master, e.time, c);
    } else if (e.kind == kBroadcastComplete) {
      const int w = e.worker;
      const long r = round_of[w];
      c.comm_floats += layout.param_count + 4;
      ScatterPlan plan = scatter_plan(cb, layout, w, r);
      std::vector<int> parts;
      for (auto& [block, sign] : plan.entries) parts.push_back(block);
      std::sort(parts.begin(), parts.end());
      parts.erase(std::unique(parts.begin(), parts.end()), parts.end());
      DataSlice local = partitions_slice(ctx.data, layout.k, parts);
      CodedTaskResult res = coded_task(master, cb, layout, w, r, local);
      pend[w] = Pending{std::move(res.v), r, e.time};
      double d = delay_seconds(dm, static_cast<double>(cb.params.t), ctx.tape.draw(w, r));
      q.push({e.time + d + dm.uplink, kTaskComplete, w, r});
    } else {
      const int w = e.worker;
      c.comm_floats += layout.block_dim + 4;
      bool stale = cfg.max_staleness > 0 && e.time - pend[w].fetched > cfg.max_staleness;
      if (!stale) {
        std::vector<double> tmp(pend[w].v.size());
        for (size_t i = 0; i < tmp.size(); ++i) tmp[i] = lr_scaled * pend[w].v[i];
        c.lr_scalings += 1;
        ScatterPlan plan = scatter_plan(cb, layout, w, pend[w].round);
        for (auto& [block, sign] : plan.entries) {
          const std::vector<int>& cc = coords[block];
          if (sign > 0) {
            for (size_t i = 0; i < cc.size(); ++i) master.w[cc[i]] -= tmp[i];
          } else {
            for (size_t i = 0; i < cc.size(); ++i) master.w[cc[i]] += tmp[i];
          }
          c.decode_adds += 1;
        }
        c.updates += 1;
        if (every > 0 && c.updates % every == 0) cp.emit(master, e.time, c);
      }
      round_of[w] += 1;
      q.push({e.time + dm.downlink, kBroadcastComplete, w, 0});
    }
  }
  if (counters) *counters = c;
  if (final) *final = master;
  return cp.rows;
}

namespace {

// Shared round-barrier loop for kac and gc: every live worker computes the
// current round at the params it fetched, the master waits for `wait_count`
// fresh arrivals, applies `apply`, then rebroadcasts to idle workers. Stale
// arrivals are discarded and the worker re-fetches immediately.
template <typename TaskFn, typename ApplyFn>
std::vector<MetricsRecord> run_rounds(const ExperimentConfig& cfg, const SimContext& ctx,
                                      const Model& model0, int wait_count, double work_units,
                                      TaskFn&& task, ApplyFn&& apply,
                                      MasterCounters& c, Model& master) {
  const DelayModel& dm = cfg.delay;
  const double budget = cfg.time_budget;
  const long every = cfg.eval_every_updates;
  const int n = cfg.n;

  master = model0;
  Checkpoints cp(cfg, ctx.data);
  std::vector<char> dead = dead_mask(cfg);
  std::vector<char> busy(n, 0);
  long round = 0;

  struct Pending {
    std::vector<double> v;
  };
  std::vector<Pending> pend(n);
  std::vector<std::pair<int, std::vector<double>>> got;  // arrival order

  const int pcount = static_cast<int>(model0.w.size());

  EventQueue q;
  push_eval_grid(cfg, q);
  if (every > 0) cp.emit(master, 0.0, c);
  for (int w = 0; w < n; ++w)
    if (!dead[w]) {
      busy[w] = 1;
      q.push({dm.downlink, kBroadcastComplete, w, 0});
    }

  while (!q.empty()) {
    Event e = q.top();
    q.pop();
    if (e.time > budget) break;
    if (e.kind == kEvalCheckpoint) {
      cp.emit(master, e.time, c);
    } else if (e.kind == kBroadcastComplete) {
      const int w = e.worker;
      c.comm_floats += pcount + 4;
      pend[w].v = task(master, w);
      double d = delay_seconds(dm, work_units, ctx.tape.draw(w, round));
      q.push({e.time + d + dm.uplink, kTaskComplete, w, round});
    } else {
      const int w = e.worker;
      c.comm_floats += pcount + 4;
      busy[w] = 0;
      if (e.tag == round) {
        got.emplace_back(w, std::move(pend[w].v));
        if (static_cast<int>(got.size()) == wait_count) {
          apply(master, got);
          c.updates += 1;
          round += 1;
          got.clear();
          if (every > 0 && c.updates % every == 0) cp.emit(master, e.time, c);
          for (int w2 = 0; w2 < n; ++w2)
            if (!dead[w2] && !busy[w2]) {
              busy[w2] = 1;
              q.push({e.time + dm.downlink, kBroadcastComplete, w2, 0});
            }
        }
      } else {
        busy[w] = 1;
        q.push({e.time + dm.downlink, kBroadcastComplete, w, 0});
      }
    }
  }
  return cp.rows;
}

}  // namespace

std::vector<MetricsRecord> run_kac(const ExperimentConfig& cfg, const SimContext& ctx,
                                   MasterCounters* counters, Model* final) {
  MasterCounters c;
  Model master;
  const int k = cfg.k;
  auto task = [&](const Model& m, int w) {
    return full_gradient(m, partition_slice(ctx.data, k, w % k));
  };
  auto apply = [&](Model& m, const std::vector<std::pair<int, std::vector<double>>>& got) {
    std::vector<double> acc = got[0].second;
    for (size_t i = 1; i < got.size(); ++i) {
      const std::vector<double>& v = got[i].second;
      for (size_t p = 0; p < acc.size(); ++p) acc[p] += v[p];
      c.decode_adds += 1;
    }
    const double step = cfg.lr / static_cast<double>(cfg.K);
    c.lr_scalings += 1;
    for (size_t p = 0; p < acc.size(); ++p) m.w[p] -= step * acc[p];
  };
  auto rows = run_rounds(cfg, ctx, ctx.model0, cfg.K, 1.0, task, apply, c, master);
  if (counters) *counters = c;
  if (final) *final = master;
  return rows;
}

std::vector<MetricsRecord> run_gc(const ExperimentConfig& cfg, const SimContext& ctx,
                                  MasterCounters* counters, Model* final) {
  MasterCounters c;
  Model master;
  const int n = cfg.n;
  const int s = cfg.s_gc;
  const bool fractional = cfg.gc_variant == "fractional";
  const double work_units = static_cast<double>(s + 1) * cfg.k / n;

  std::vector<std::vector<double>> code;
  if (!fractional && s > 0) code = gc_encode_matrix(n, s, splitmix64(cfg.seed ^ 0x9e6cull));

  auto task = [&](const Model& m, int w) {
    std::vector<double> v(m.w.size(), 0.0);
    if (fractional) {
      int group = w / (s + 1);
      for (int j = group * (s + 1); j < (group + 1) * (s + 1); ++j) {
        std::vector<double> g = full_gradient(m, partition_slice(ctx.data, n, j));
        for (size_t p = 0; p < v.size(); ++p) v[p] += g[p];
      }
    } else if (s == 0) {
      v = full_gradient(m, partition_slice(ctx.data, n, w));
    } else {
      for (int off = 0; off <= s; ++off) {
        int j = (w + off) % n;
        double coef = code[w][j];
        std::vector<double> g = full_gradient(m, partition_slice(ctx.data, n, j));
        for (size_t p = 0; p < v.size(); ++p) v[p] += coef * g[p];
      }
    }
    return v;
  };

  std::map<std::vector<int>, std::vector<double>> coeff_memo;

  auto apply = [&](Model& m, const std::vector<std::pair<int, std::vector<double>>>& got) {
    const size_t pcount = m.w.size();
    std::vector<double> full(pcount, 0.0);
    if (fractional) {
      // first arrival of each replica group; a group can lose at most s of
      // its s+1 members, so every group is represented
      std::set<int> covered;
      for (const auto& [w, v] : got) {
        int group = w / (s + 1);
        if (!covered.insert(group).second) continue;
        for (size_t p = 0; p < pcount; ++p) full[p] += v[p];
        c.decode_adds += 1;
      }
    } else if (s == 0) {
      for (const auto& [w, v] : got) {
        for (size_t p = 0; p < pcount; ++p) full[p] += v[p];
        c.decode_adds += 1;
      }
    } else {
      std::vector<int> arrived;
      for (const auto& [w, v] : got) arrived.push_back(w);
      std::sort(arrived.begin(), arrived.end());
      auto it = coeff_memo.find(arrived);
      if (it == coeff_memo.end())
        it = coeff_memo.emplace(arrived, gc_decode_coeffs(code, arrived, &c.decode_mults)).first;
      const std::vector<double>& a = it->second;
      for (const auto& [w, v] : got) {
        size_t slot = std::lower_bound(arrived.begin(), arrived.end(), w) - arrived.begin();
        double coef = a[slot];
        for (size_t p = 0; p < pcount; ++p) full[p] += coef * v[p];
        c.decode_mults += static_cast<long long>(pcount);
        c.decode_adds += 1;
      }
    }
    const double step = cfg.lr / n;
    c.lr_scalings += 1;
    for (size_t p = 0; p < pcount; ++p) m.w[p] -= step * full[p];
  };

  auto rows = run_rounds(cfg, ctx, ctx.model0, n - s, work_units, task, apply, c, master);
  if (counters) *counters = c;
  if (final) *final = master;
  return rows;
}

std::vector<MetricsRecord> run_centralized(const ExperimentConfig& cfg, const SimContext& ctx,
                                           MasterCounters* counters, Model* final) {
  MasterCounters c;
  Model master = ctx.model0;
  Checkpoints cp(cfg, ctx.data);
  const double dur = cfg.delay.base * cfg.k;
  const double budget = cfg.time_budget;
  const long every = cfg.eval_every_updates;
  DataSlice train = train_slice(ctx.data);

  auto step = [&](double /*done_at*/) {
    std::vector<double> g = full_gradient(master, train);
    c.lr_scalings += 1;
    for (size_t p = 0; p < master.w.size(); ++p) master.w[p] -= cfg.lr * g[p];
    c.updates += 1;
  };

  if (every > 0) {
    cp.emit(master, 0.0, c);
    long steps = 0;
    while ((steps + 1) * dur <= budget) {
      ++steps;
      step(steps * dur);
      if (c.updates % every == 0) cp.emit(master, steps * dur, c);
    }
  } else {
    const double interval = grid_interval(cfg);
    const long count = static_cast<long>(std::floor(budget / interval + 1e-9));
    long steps = 0;
    for (long i = 0; i <= count; ++i) {
      const double tau = std::min(static_cast<double>(i) * interval, budget);
      while ((steps + 1) * dur <= tau) {
        ++steps;
        step(steps * dur);
      }
      cp.emit(master, tau, c);
    }
    while ((steps + 1) * dur <= budget) {
      ++steps;
      step(steps * dur);
    }
  }
  if (counters) *counters = c;
  if (final) *final = master;
  return cp.rows;
}

std::vector<MetricsRecord> run_scheme(const ExperimentConfig& cfg, MasterCounters* counters) {
  SimContext ctx = prepare_context(cfg);
  std::vector<MetricsRecord> rows;
  if (cfg.scheme == "lwpd") rows = run_lwpd(cfg, ctx, counters);
  else if (cfg.scheme == "kac") rows = run_kac(cfg, ctx, counters);
  else if (cfg.scheme == "gc") rows = run_gc(cfg, ctx, counters);
  else rows = run_centralized(cfg, ctx, counters);
  if (!cfg.tape_out.empty()) ctx.tape.export_tape(cfg.tape_out);
  return rows;
}

std::vector<std::vector<double>> gc_encode_matrix(int n, int s, std::uint64_t seed) {
  if (s < 0 || s >= n) throw std::invalid_argument("gc support size out of range");
  std::vector<std::vector<double>> code(n, std::vector<double>(n, 0.0));
  if (s == 0) {
    for (int i = 0; i < n; ++i) code[i][i] = 1.0;
    return code;
  }
  // H has independent N(0,1) entries in its first n-1 columns and row sums
  // zero, so the all-ones vector lies in its null space.
  std::mt19937_64 rng(seed);
  auto normal = [&rng]() {
    double u1 = rng_u01(rng), u2 = rng_u01(rng);
    while (u1 <= 0.0) u1 = rng_u01(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
  };
  std::vector<std::vector<double>> h(s, std::vector<double>(n, 0.0));
  for (int r = 0; r < s; ++r) {
    double sum = 0.0;
    for (int j = 0; j + 1 < n; ++j) {
      h[r][j] = normal();
      sum += h[r][j];
    }
    h[r][n - 1] = -sum;
  }
  for (int i = 0; i < n; ++i) {
    code[i][i] = 1.0;
    std::vector<std::vector<double>> m(s, std::vector<double>(s, 0.0));
    std::vector<double> rhs(s, 0.0);
    for (int r = 0; r < s; ++r) {
      for (int j = 1; j <= s; ++j) m[r][j - 1] = h[r][(i + j) % n];
      rhs[r] = -h[r][i];
    }
    std::vector<double> x = solve_linear(std::move(m), std::move(rhs), nullptr);
    for (int j = 1; j <= s; ++j) code[i][(i + j) % n] = x[j - 1];
  }
  return code;
}

std::vector<double> gc_decode_coeffs(const std::vector<std::vector<double>>& code,
                                     const std::vector<int>& arrived, long long* mults) {
  const int n = static_cast<int>(code.size());
  const int m = static_cast<int>(arrived.size());
  if (m == 0) throw std::invalid_argument("decode needs at least one arrival");
  long long count = 0;
  // normal equations for min ||B_S' a - 1||: (B_S B_S') a = B_S 1
  std::vector<std::vector<double>> gram(m, std::vector<double>(m, 0.0));
  std::vector<double> rhs(m, 0.0);
  for (int a = 0; a < m; ++a) {
    const std::vector<double>& ra = code[arrived[a]];
    for (int b = a; b < m; ++b) {
      const std::vector<double>& rb = code[arrived[b]];
      double dot = 0.0;
      for (int p = 0; p < n; ++p) {
        dot += ra[p] * rb[p];
        ++count;
      }
      gram[a][b] = dot;
      gram[b][a] = dot;
    }
    double sum = 0.0;
    for (int p = 0; p < n; ++p) sum += ra[p];
    rhs[a] = sum;
  }
  std::vector<double> coeffs = solve_linear(std::move(gram), std::move(rhs), &count);
  if (mults) *mults += count;
  return coeffs;
}

}  // namespace lwpd
