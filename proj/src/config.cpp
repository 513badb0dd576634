#include "lwpd/config.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "lwpd/assignment.hpp"
#include "lwpd/codebook.hpp"
#include "lwpd/learner.hpp"

namespace lwpd {

namespace {

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& val) {
  throw std::invalid_argument("bad value for " + key + ": '" + val + "'");
}

double to_double(const std::string& key, const std::string& val) {
  const char* p = val.c_str();
  char* end = nullptr;
  double v = std::strtod(p, &end);
  if (end == p || *end != '\0') bad_value(key, val);
  return v;
}

long to_long(const std::string& key, const std::string& val) {
  const char* p = val.c_str();
  char* end = nullptr;
  long v = std::strtol(p, &end, 10);
  if (end == p || *end != '\0') bad_value(key, val);
  return v;
}

int to_int(const std::string& key, const std::string& val) {
  long v = to_long(key, val);
  if (v < -2147483647L || v > 2147483647L) bad_value(key, val);
  return static_cast<int>(v);
}

std::uint64_t to_u64(const std::string& key, const std::string& val) {
  const char* p = val.c_str();
  char* end = nullptr;
  unsigned long long v = std::strtoull(p, &end, 10);
  if (end == p || *end != '\0') bad_value(key, val);
  return v;
}

std::vector<int> to_int_list(const std::string& key, const std::string& val) {
  std::vector<int> out;
  std::string item;
  std::istringstream in(val);
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    out.push_back(to_int(key, item));
  }
  return out;
}

std::string list_text(const std::vector<int>& v) {
  std::string s;
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(v[i]);
  }
  return s;
}

std::string double_text(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void apply_key(ExperimentConfig& cfg, const std::string& key, const std::string& val) {
  if (key == "scheme") cfg.scheme = val;
  else if (key == "n") cfg.n = to_int(key, val);
  else if (key == "k") cfg.k = to_int(key, val);
  else if (key == "t") cfg.t = to_int(key, val);
  else if (key == "mode") cfg.mode = val;
  else if (key == "K") cfg.K = to_int(key, val);
  else if (key == "s_gc") cfg.s_gc = to_int(key, val);
  else if (key == "gc_variant") cfg.gc_variant = val;
  else if (key == "seed") cfg.seed = to_u64(key, val);
  else if (key == "lr") cfg.lr = to_double(key, val);
  else if (key == "time_budget") cfg.time_budget = to_double(key, val);
  else if (key == "eval_interval") cfg.eval_interval = to_double(key, val);
  else if (key == "eval_every_updates") cfg.eval_every_updates = to_long(key, val);
  else if (key == "family") cfg.family = val;
  else if (key == "layers") cfg.layers = to_int_list(key, val);
  else if (key == "dataset") cfg.dataset = val;
  else if (key == "classes") cfg.classes = to_int(key, val);
  else if (key == "components") cfg.components = to_int(key, val);
  else if (key == "dim") cfg.dim = to_int(key, val);
  else if (key == "records") cfg.records = to_int(key, val);
  else if (key == "separation") cfg.separation = to_double(key, val);
  else if (key == "sigma") cfg.sigma = to_double(key, val);
  else if (key == "base") cfg.delay.base = to_double(key, val);
  else if (key == "rate") cfg.delay.rate = to_double(key, val);
  else if (key == "straggler_prob") cfg.delay.straggler_prob = to_double(key, val);
  else if (key == "straggler_factor") cfg.delay.straggler_factor = to_double(key, val);
  else if (key == "downlink") cfg.delay.downlink = to_double(key, val);
  else if (key == "uplink") cfg.delay.uplink = to_double(key, val);
  else if (key == "dead_workers") cfg.dead_workers = to_int_list(key, val);
  else if (key == "max_staleness") cfg.max_staleness = to_double(key, val);
  else if (key == "output") cfg.output = val;
  else if (key == "tape_in") cfg.tape_in = val;
  else if (key == "tape_out") cfg.tape_out = val;
  else throw std::invalid_argument("unknown config key: " + key);
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text) {
  ExperimentConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    size_t hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(lineno) + " has no '='");
    std::string key = trim(line.substr(0, eq));
    std::string val = trim(line.substr(eq + 1));
    if (key.empty())
      throw std::invalid_argument("config line " + std::to_string(lineno) + " has no key");
    apply_key(cfg, key, val);
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

void save_config(const ExperimentConfig& cfg, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write config: " + path);
  out << "scheme = " << cfg.scheme << "\n";
  out << "n = " << cfg.n << "\n";
  out << "k = " << cfg.k << "\n";
  out << "t = " << cfg.t << "\n";
  out << "mode = " << cfg.mode << "\n";
  out << "K = " << cfg.K << "\n";
  out << "s_gc = " << cfg.s_gc << "\n";
  out << "gc_variant = " << cfg.gc_variant << "\n";
  out << "seed = " << cfg.seed << "\n";
  out << "lr = " << double_text(cfg.lr) << "\n";
  out << "time_budget = " << double_text(cfg.time_budget) << "\n";
  out << "eval_interval = " << double_text(cfg.eval_interval) << "\n";
  out << "eval_every_updates = " << cfg.eval_every_updates << "\n";
  out << "family = " << cfg.family << "\n";
  out << "layers = " << list_text(cfg.layers) << "\n";
  out << "dataset = " << cfg.dataset << "\n";
  out << "classes = " << cfg.classes << "\n";
  out << "components = " << cfg.components << "\n";
  out << "dim = " << cfg.dim << "\n";
  out << "records = " << cfg.records << "\n";
  out << "separation = " << double_text(cfg.separation) << "\n";
  out << "sigma = " << double_text(cfg.sigma) << "\n";
  out << "base = " << double_text(cfg.delay.base) << "\n";
  out << "rate = " << double_text(cfg.delay.rate) << "\n";
  out << "straggler_prob = " << double_text(cfg.delay.straggler_prob) << "\n";
  out << "straggler_factor = " << double_text(cfg.delay.straggler_factor) << "\n";
  out << "downlink = " << double_text(cfg.delay.downlink) << "\n";
  out << "uplink = " << double_text(cfg.delay.uplink) << "\n";
  out << "dead_workers = " << list_text(cfg.dead_workers) << "\n";
  out << "max_staleness = " << double_text(cfg.max_staleness) << "\n";
  out << "output = " << cfg.output << "\n";
  out << "tape_in = " << cfg.tape_in << "\n";
  out << "tape_out = " << cfg.tape_out << "\n";
  if (!out) throw std::runtime_error("cannot write config: " + path);
}

void validate_config(const ExperimentConfig& cfg) {
  auto fail = [](const std::string& msg) { throw std::invalid_argument(msg); };
  if (cfg.scheme != "lwpd" && cfg.scheme != "gc" && cfg.scheme != "kac" &&
      cfg.scheme != "centralized")
    fail("unknown scheme: " + cfg.scheme);
  if (cfg.n < 1) fail("n must be positive");
  if (cfg.k < 1) fail("k must be positive");
  if (cfg.lr <= 0) fail("lr must be positive");
  if (!(cfg.time_budget > 0)) fail("time_budget must be positive");
  if (cfg.eval_interval < 0) fail("eval_interval must be nonnegative");
  if (cfg.eval_every_updates < 0) fail("eval_every_updates must be nonnegative");
  if (cfg.records < cfg.k) fail("records must be at least k");
  if (cfg.dim < 1) fail("dim must be positive");
  if (cfg.classes < 2) fail("classes must be at least 2");
  if (cfg.components < 0) fail("components must be nonnegative");
  if (cfg.sigma <= 0) fail("sigma must be positive");
  if (cfg.delay.base <= 0) fail("base must be positive");
  if (!(cfg.delay.rate > 0)) fail("rate must be positive (inf disables jitter)");
  if (cfg.delay.straggler_prob < 0 || cfg.delay.straggler_prob > 1)
    fail("straggler_prob must lie in [0, 1]");
  if (cfg.delay.straggler_factor < 1) fail("straggler_factor must be at least 1");
  if (cfg.delay.downlink < 0 || cfg.delay.uplink < 0) fail("link delays must be nonnegative");
  if (cfg.max_staleness < 0) fail("max_staleness must be nonnegative");
  for (int w : cfg.dead_workers)
    if (w < 0 || w >= cfg.n) fail("dead worker id out of range: " + std::to_string(w));
  parse_family(cfg.family);  // throws on unknown names

  if (cfg.scheme == "lwpd") {
    make_params(cfg.n, cfg.k, cfg.t);  // throws on unsupported geometry
    parse_mode(cfg.mode);
  }
  if (cfg.scheme == "kac") {
    if (cfg.K < 1 || cfg.K > cfg.n) fail("kac requires K in [1, n]");
  }
  if (cfg.scheme == "gc") {
    if (cfg.s_gc < 0 || cfg.s_gc >= cfg.n) fail("gc requires s_gc in [0, n-1]");
    if (cfg.gc_variant != "cyclic" && cfg.gc_variant != "fractional")
      fail("unknown gc_variant: " + cfg.gc_variant);
    if (cfg.gc_variant == "fractional" && cfg.n % (cfg.s_gc + 1) != 0)
      fail("fractional repetition needs (s_gc + 1) to divide n");
    if (cfg.records < cfg.n) fail("gc needs records >= n");
  }
}

}  // namespace lwpd
