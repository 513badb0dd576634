#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <random>

#include "lwpd/simulator.hpp"

using namespace lwpd;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Deterministic small problem: no jitter, no stragglers unless a test says so.
ExperimentConfig base_cfg() {
  ExperimentConfig cfg;
  cfg.scheme = "lwpd";
  cfg.n = 8;
  cfg.k = 4;
  cfg.t = 2;
  cfg.seed = 7;
  cfg.lr = 0.05;
  cfg.time_budget = 0.105;
  cfg.eval_interval = 0.021;
  cfg.family = "logistic";
  cfg.classes = 3;
  cfg.dim = 4;
  cfg.records = 400;  // train 320, divisible by k and n
  cfg.separation = 4.0;
  cfg.sigma = 1.0;
  cfg.delay.base = 0.01;
  cfg.delay.rate = kInf;
  cfg.delay.straggler_prob = 0.0;
  cfg.delay.straggler_factor = 1.0;
  return cfg;
}

std::vector<double> sum_partition_gradients(const Model& m, const Dataset& ds, int parts) {
  std::vector<double> acc(m.w.size(), 0.0);
  for (int j = 0; j < parts; ++j) {
    std::vector<double> g = full_gradient(m, partition_slice(ds, parts, j));
    for (size_t p = 0; p < acc.size(); ++p) acc[p] += g[p];
  }
  return acc;
}

}  // namespace

TEST_CASE("delay formula matches worked examples") {
  DelayModel dm;
  dm.base = 0.1;
  dm.rate = 100.0;
  dm.straggler_prob = 0.2;
  dm.straggler_factor = 5.0;
  CHECK(delay_seconds(dm, 2.0, DelayDraw{false, 0.05}) == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(delay_seconds(dm, 2.0, DelayDraw{true, 0.05}) == doctest::Approx(1.05).epsilon(1e-12));
  CHECK(delay_seconds(dm, 1.0, DelayDraw{false, 0.0}) == doctest::Approx(0.1).epsilon(1e-12));

  // infinite rate kills the jitter term entirely
  dm.rate = kInf;
  dm.straggler_prob = 0.0;
  std::mt19937_64 rng(1);
  for (int i = 0; i < 16; ++i) CHECK(sample_delay(dm, 3.0, rng) == 0.1 * 3.0);
}

TEST_CASE("sampled delays match the analytic mean") {
  DelayModel dm;
  dm.base = 0.01;
  dm.rate = 50.0;
  dm.straggler_prob = 0.2;
  dm.straggler_factor = 5.0;
  const double work = 2.0;
  const double expect =
      dm.base * work * (1.0 + dm.straggler_prob * (dm.straggler_factor - 1.0)) + 1.0 / dm.rate;
  std::mt19937_64 rng(123);
  const int trials = 200000;
  double total = 0.0;
  for (int i = 0; i < trials; ++i) total += sample_delay(dm, work, rng);
  double mean = total / trials;
  CHECK(std::fabs(mean - expect) / expect < 0.02);
}

TEST_CASE("delay tape is reproducible and seed sensitive") {
  DelayTape a(42, 0.3, 10.0);
  DelayTape b(42, 0.3, 10.0);
  DelayTape c(43, 0.3, 10.0);
  int differing = 0;
  int stragglers = 0;
  for (int w = 0; w < 6; ++w)
    for (long r = 0; r < 40; ++r) {
      DelayDraw da = a.draw(w, r);
      DelayDraw db = b.draw(w, r);
      DelayDraw dc = c.draw(w, r);
      CHECK(da.straggler == db.straggler);
      CHECK(da.jitter == db.jitter);
      CHECK(da.jitter >= 0.0);
      if (da.straggler != dc.straggler || da.jitter != dc.jitter) ++differing;
      if (da.straggler) ++stragglers;
    }
  CHECK(differing > 100);
  CHECK(stragglers > 30);  // 240 draws at p = 0.3
  CHECK(stragglers < 140);

  DelayTape quiet(42, 0.0, kInf);
  for (int w = 0; w < 4; ++w)
    for (long r = 0; r < 10; ++r) {
      DelayDraw d = quiet.draw(w, r);
      CHECK_FALSE(d.straggler);
      CHECK(d.jitter == 0.0);
    }
}

TEST_CASE("tape export and import round trip as overrides") {
  const char* path = "tape_roundtrip.txt";
  DelayTape a(42, 0.3, 10.0);
  a.export_tape(path, 5, 9);

  DelayTape e(999, 0.3, 10.0);
  e.import_tape(path);
  for (int w = 0; w < 5; ++w)
    for (long r = 0; r < 9; ++r) {
      DelayDraw da = a.draw(w, r);
      DelayDraw de = e.draw(w, r);
      CHECK(da.straggler == de.straggler);
      CHECK(da.jitter == doctest::Approx(de.jitter).epsilon(1e-15));
    }
  // outside the imported window the tapes diverge
  int differing = 0;
  for (long r = 20; r < 40; ++r)
    if (a.draw(7, r).jitter != e.draw(7, r).jitter) ++differing;
  CHECK(differing > 10);
  std::remove(path);
}

TEST_CASE("runs are deterministic and bit identical") {
  ExperimentConfig cfg = base_cfg();
  cfg.delay.rate = 40.0;  // jitter on, still deterministic via the tape
  cfg.delay.straggler_prob = 0.2;
  cfg.delay.straggler_factor = 4.0;
  SimContext ctx = prepare_context(cfg);
  MasterCounters c1, c2;
  auto r1 = run_lwpd(cfg, ctx, &c1);
  auto r2 = run_lwpd(cfg, ctx, &c2);
  REQUIRE(r1.size() == r2.size());
  for (size_t i = 0; i < r1.size(); ++i)
    CHECK(format_metrics_row(r1[i]) == format_metrics_row(r2[i]));
  CHECK(c1.updates == c2.updates);
  CHECK(c1.comm_floats == c2.comm_floats);
  CHECK(c1.decode_adds == c2.decode_adds);

  // run_scheme rebuilds the context from scratch and must agree
  auto r3 = run_scheme(cfg);
  REQUIRE(r3.size() == r1.size());
  for (size_t i = 0; i < r1.size(); ++i)
    CHECK(format_metrics_row(r3[i]) == format_metrics_row(r1[i]));
}

TEST_CASE("checkpoint grid and counters are well formed") {
  ExperimentConfig cfg = base_cfg();
  SimContext ctx = prepare_context(cfg);
  MasterCounters c;
  auto rows = run_lwpd(cfg, ctx, &c);
  REQUIRE(rows.size() == 6);  // 0, 0.021, ..., 0.105
  for (size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i].scheme == "lwpd");
    CHECK(rows[i].seed == 7);
    CHECK(rows[i].sim_time == doctest::Approx(0.021 * i).epsilon(1e-12));
    if (i) {
      CHECK(rows[i].updates >= rows[i - 1].updates);
      CHECK(rows[i].comm_floats >= rows[i - 1].comm_floats);
    }
  }
  CHECK(rows.front().updates == 0);
  CHECK(rows.back().updates == c.updates);
  CHECK(rows.back().comm_floats == c.comm_floats);
  CHECK(c.decode_mults == 0);
  CHECK(c.updates > 0);
}

TEST_CASE("kac with K = n and no randomness equals centralized descent") {
  ExperimentConfig ck = base_cfg();
  ck.scheme = "kac";
  ck.K = 8;
  ck.eval_every_updates = 1;
  ck.time_budget = 0.05;  // rounds of base * 1 work unit: 5 updates

  ExperimentConfig cc = base_cfg();
  cc.scheme = "centralized";
  cc.eval_every_updates = 1;
  cc.time_budget = 0.2;  // steps of base * k: 5 updates

  SimContext ctx_k = prepare_context(ck);
  SimContext ctx_c = prepare_context(cc);
  REQUIRE(ctx_k.data.x == ctx_c.data.x);  // same seed, same task
  REQUIRE(ctx_k.model0.w == ctx_c.model0.w);

  MasterCounters mk, mc;
  Model fk, fc;
  auto rk = run_kac(ck, ctx_k, &mk, &fk);
  auto rc = run_centralized(cc, ctx_c, &mc, &fc);
  REQUIRE(mk.updates == 5);
  REQUIRE(mc.updates == 5);
  REQUIRE(rk.size() == rc.size());
  for (size_t i = 0; i < rk.size(); ++i) {
    CHECK(rk[i].updates == rc[i].updates);
    CHECK(rk[i].test_loss == doctest::Approx(rc[i].test_loss).epsilon(1e-10));
    CHECK(rk[i].train_loss == doctest::Approx(rc[i].train_loss).epsilon(1e-10));
    CHECK(rk[i].test_accuracy == doctest::Approx(rc[i].test_accuracy).epsilon(1e-10));
  }
  for (size_t p = 0; p < fk.w.size(); ++p)
    CHECK(fk.w[p] == doctest::Approx(fc.w[p]).epsilon(1e-10));

  // and both match plain full-batch gradient descent
  Model hand = ctx_c.model0;
  DataSlice train = train_slice(ctx_c.data);
  for (int it = 0; it < 5; ++it) {
    std::vector<double> g = full_gradient(hand, train);
    for (size_t p = 0; p < hand.w.size(); ++p) hand.w[p] -= cc.lr * g[p];
  }
  for (size_t p = 0; p < hand.w.size(); ++p) {
    CHECK(fc.w[p] == hand.w[p]);  // identical computation path
    CHECK(fk.w[p] == doctest::Approx(hand.w[p]).epsilon(1e-10));
  }
  CHECK(mk.decode_mults == 0);
  CHECK(mc.decode_mults == 0);
  CHECK(mc.comm_floats == 0);
}

TEST_CASE("gc encode matrix has cyclic supports and exact one-straggler decode") {
  const int n = 8;
  auto code = gc_encode_matrix(n, 1, 99);
  REQUIRE(code.size() == 8);
  for (int i = 0; i < n; ++i) {
    CHECK(code[i][i] == 1.0);
    for (int j = 0; j < n; ++j) {
      bool in_support = j == i || j == (i + 1) % n;
      if (!in_support) CHECK(code[i][j] == 0.0);
    }
    CHECK(code[i][(i + 1) % n] != 0.0);
  }
  for (int missing = 0; missing < n; ++missing) {
    std::vector<int> arrived;
    for (int w = 0; w < n; ++w)
      if (w != missing) arrived.push_back(w);
    auto a = gc_decode_coeffs(code, arrived);
    for (int p = 0; p < n; ++p) {
      double r = 0.0;
      for (size_t i = 0; i < arrived.size(); ++i) r += a[i] * code[arrived[i]][p];
      CHECK(r == doctest::Approx(1.0).epsilon(1e-8));
    }
  }
  // two stragglers exceed the budget of s = 1 and cannot decode exactly
  std::vector<int> arrived{2, 3, 4, 5, 6, 7};
  auto a = gc_decode_coeffs(code, arrived);
  double worst = 0.0;
  for (int p = 0; p < n; ++p) {
    double r = 0.0;
    for (size_t i = 0; i < arrived.size(); ++i) r += a[i] * code[arrived[i]][p];
    worst = std::max(worst, std::fabs(r - 1.0));
  }
  CHECK(worst > 1e-6);

  // s = 2 handles any pair of stragglers
  auto code2 = gc_encode_matrix(n, 2, 99);
  for (int m1 = 0; m1 < n; ++m1)
    for (int m2 = m1 + 1; m2 < n; ++m2) {
      std::vector<int> got;
      for (int w = 0; w < n; ++w)
        if (w != m1 && w != m2) got.push_back(w);
      auto coeffs = gc_decode_coeffs(code2, got);
      for (int p = 0; p < n; ++p) {
        double r = 0.0;
        for (size_t i = 0; i < got.size(); ++i) r += coeffs[i] * code2[got[i]][p];
        CHECK(r == doctest::Approx(1.0).epsilon(1e-8));
      }
    }
}

TEST_CASE("gc decode cost grows superlinearly in k") {
  long long prev = 0;
  for (int k : {4, 8, 16}) {
    const int n = 2 * k;
    auto code = gc_encode_matrix(n, 1, 31);
    std::vector<int> arrived;
    for (int w = 1; w < n; ++w) arrived.push_back(w);
    long long mults = 0;
    gc_decode_coeffs(code, arrived, &mults);
    CHECK(mults > 0);
    if (prev) CHECK(mults > 4 * prev);  // doubling k more than quadruples the cost
    prev = mults;
  }
}

TEST_CASE("gc cyclic round matches the uncoded sum of partition gradients") {
  ExperimentConfig cfg = base_cfg();
  cfg.scheme = "gc";
  cfg.s_gc = 1;
  cfg.eval_every_updates = 1;
  cfg.time_budget = 0.0105;  // one round: work (s+1)k/n = 1 unit

  SimContext ctx = prepare_context(cfg);
  MasterCounters c;
  Model fin;
  run_gc(cfg, ctx, &c, &fin);
  REQUIRE(c.updates == 1);
  CHECK(c.decode_mults > 0);

  std::vector<double> gsum = sum_partition_gradients(ctx.model0, ctx.data, cfg.n);
  for (size_t p = 0; p < fin.w.size(); ++p) {
    double expect = ctx.model0.w[p] - cfg.lr / cfg.n * gsum[p];
    CHECK(fin.w[p] == doctest::Approx(expect).epsilon(1e-8));
  }

  // exact decode accounting: one coefficient solve plus one combine of
  // (n - s) vectors of param_count entries each
  long long solve_mults = 0;
  auto code = gc_encode_matrix(cfg.n, cfg.s_gc, 0);  // same shape, any seed
  std::vector<int> arrived;
  for (int w = 0; w + 1 < cfg.n; ++w) arrived.push_back(w);
  gc_decode_coeffs(code, arrived, &solve_mults);
  long long pcount = static_cast<long long>(fin.w.size());
  CHECK(c.decode_mults == solve_mults + (cfg.n - cfg.s_gc) * pcount);
}

TEST_CASE("gc fractional round sums one replica per group without multiplies") {
  ExperimentConfig cfg = base_cfg();
  cfg.scheme = "gc";
  cfg.s_gc = 1;
  cfg.gc_variant = "fractional";
  cfg.eval_every_updates = 1;
  cfg.time_budget = 0.0105;

  SimContext ctx = prepare_context(cfg);
  MasterCounters c;
  Model fin;
  run_gc(cfg, ctx, &c, &fin);
  REQUIRE(c.updates == 1);
  CHECK(c.decode_mults == 0);

  std::vector<double> gsum = sum_partition_gradients(ctx.model0, ctx.data, cfg.n);
  for (size_t p = 0; p < fin.w.size(); ++p) {
    double expect = ctx.model0.w[p] - cfg.lr / cfg.n * gsum[p];
    CHECK(fin.w[p] == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("gc with s = 0 waits for everyone and never multiplies") {
  ExperimentConfig cfg = base_cfg();
  cfg.scheme = "gc";
  cfg.s_gc = 0;
  cfg.eval_every_updates = 1;
  cfg.time_budget = 0.0105;  // work k/n = 0.5 units: round takes 0.005

  SimContext ctx = prepare_context(cfg);
  MasterCounters c;
  Model fin;
  run_gc(cfg, ctx, &c, &fin);
  CHECK(c.updates == 2);
  CHECK(c.decode_mults == 0);
}

TEST_CASE("lwpd single worker applies its plan by signed block adds") {
  // worker 0 carries row [1 1 0 0]: the update lands twice with sign +1
  ExperimentConfig cfg = base_cfg();
  cfg.dead_workers = {1, 2, 3, 4, 5, 6, 7};
  cfg.time_budget = 0.0205;  // one task of t = 2 work units

  SimContext ctx = prepare_context(cfg);
  MasterCounters c;
  Model fin;
  run_lwpd(cfg, ctx, &c, &fin);
  REQUIRE(c.updates == 1);
  CHECK(c.lr_scalings == 1);
  CHECK(c.decode_adds == 2);
  CHECK(c.decode_mults == 0);

  std::vector<double> g0 =
      block_gradient(ctx.model0, ctx.layout, 0, partition_slice(ctx.data, 4, 0));
  std::vector<double> g1 =
      block_gradient(ctx.model0, ctx.layout, 1, partition_slice(ctx.data, 4, 1));
  const double step = cfg.lr * ctx.cb.scale();
  for (size_t p = 0; p < fin.w.size(); ++p) {
    double expect = ctx.model0.w[p] - 2.0 * step * (g0[p] + g1[p]);
    CHECK(fin.w[p] == doctest::Approx(expect).epsilon(1e-12));
  }

  const int pcount = ctx.layout.param_count;
  const int bdim = ctx.layout.block_dim;
  CHECK(c.comm_floats == 2 * (pcount + 4) + (bdim + 4));

  // worker 1 carries row [1 -1 0 0]: its two adds cancel coordinatewise
  ExperimentConfig cfg1 = base_cfg();
  cfg1.dead_workers = {0, 2, 3, 4, 5, 6, 7};
  cfg1.time_budget = 0.0205;
  SimContext ctx1 = prepare_context(cfg1);
  MasterCounters c1;
  Model fin1;
  run_lwpd(cfg1, ctx1, &c1, &fin1);
  REQUIRE(c1.updates == 1);
  for (size_t p = 0; p < fin1.w.size(); ++p)
    CHECK(fin1.w[p] == doctest::Approx(ctx1.model0.w[p]).epsilon(1e-15));
}

TEST_CASE("dead workers never produce arrivals") {
  ExperimentConfig cfg = base_cfg();
  cfg.dead_workers = {1, 2, 3, 4, 5, 6, 7};
  SimContext ctx = prepare_context(cfg);
  MasterCounters c;
  run_lwpd(cfg, ctx, &c);
  CHECK(c.updates == 5);  // floor(0.105 / 0.02) arrivals from the lone worker

  ExperimentConfig all = base_cfg();
  SimContext ctx_all = prepare_context(all);
  MasterCounters c_all;
  run_lwpd(all, ctx_all, &c_all);
  CHECK(c_all.updates == 8 * 5);
}

TEST_CASE("staleness cutoff drops late results but keeps the schedule") {
  const char* tape = "tape_straggle.txt";
  {
    std::ofstream out(tape);
    out << "0 0 1 0\n";  // worker 0 straggles in round 0, no jitter
  }
  ExperimentConfig cfg = base_cfg();
  cfg.delay.straggler_factor = 3.0;  // round 0 of worker 0 takes 0.06
  cfg.tape_in = tape;

  SimContext ctx = prepare_context(cfg);
  MasterCounters keep, drop;
  run_lwpd(cfg, ctx, &keep);

  ExperimentConfig cut = cfg;
  cut.max_staleness = 0.05;
  SimContext ctx2 = prepare_context(cut);
  run_lwpd(cut, ctx2, &drop);

  CHECK(keep.updates == 38);  // 7 workers * 5 rounds + 3 late rounds
  CHECK(drop.updates == 37);  // the late round-0 result is discarded
  CHECK(keep.comm_floats == drop.comm_floats);  // the bytes still moved
  std::remove(tape);
}

TEST_CASE("same seed gives every scheme the same task and tape") {
  ExperimentConfig cl = base_cfg();
  ExperimentConfig ck = base_cfg();
  ck.scheme = "kac";
  ck.K = 4;
  ExperimentConfig cg = base_cfg();
  cg.scheme = "gc";
  cg.s_gc = 1;

  SimContext a = prepare_context(cl);
  SimContext b = prepare_context(ck);
  SimContext g = prepare_context(cg);
  CHECK(a.data.x == b.data.x);
  CHECK(a.data.y == b.data.y);
  CHECK(a.data.x == g.data.x);
  CHECK(a.model0.w == b.model0.w);
  CHECK(a.model0.w == g.model0.w);
  for (int w = 0; w < 8; ++w)
    for (long r = 0; r < 16; ++r) {
      DelayDraw da = a.tape.draw(w, r);
      DelayDraw db = b.tape.draw(w, r);
      DelayDraw dg = g.tape.draw(w, r);
      CHECK(da.straggler == db.straggler);
      CHECK(da.jitter == db.jitter);
      CHECK(da.straggler == dg.straggler);
      CHECK(da.jitter == dg.jitter);
    }
}

TEST_CASE("run_scheme writes the consumed tape when asked") {
  const char* path = "tape_out.txt";
  ExperimentConfig cfg = base_cfg();
  cfg.tape_out = path;
  run_scheme(cfg);
  DelayTape loaded;
  loaded.import_tape(path);  // parses or throws
  std::ifstream in(path);
  int lines = 0;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) ++lines;
  CHECK(lines >= cfg.n);
  std::remove(path);
}
