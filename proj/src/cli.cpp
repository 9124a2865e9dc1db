#include "asw/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "asw/bench.hpp"
#include "asw/eval.hpp"
#include "asw/gradcheck.hpp"
#include "asw/slicers.hpp"
#include "asw/suites.hpp"

namespace asw::cli {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// key = value config

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace

KeyValueConfig KeyValueConfig::parse(std::istream& in, const std::string& source) {
  KeyValueConfig kv;
  kv.source_ = source;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ParseError(source + ":" + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ParseError(source + ":" + std::to_string(lineno) + ": empty key");
    if (kv.values_.count(key) != 0) {
      throw ParseError(source + ":" + std::to_string(lineno) + ": duplicate key \"" + key + "\"");
    }
    kv.values_[key] = value;
    kv.lines_[key] = lineno;
  }
  return kv;
}

KeyValueConfig KeyValueConfig::load(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open config " + path.string());
  return parse(in, path.string());
}

std::string KeyValueConfig::raw(const std::string& key) {
  used_.insert(key);
  return values_.at(key);
}

std::string KeyValueConfig::get_string(const std::string& key, const std::string& fallback) {
  return has(key) ? raw(key) : fallback;
}

std::int64_t KeyValueConfig::get_int(const std::string& key, std::int64_t fallback) {
  if (!has(key)) return fallback;
  const std::string v = raw(key);
  std::size_t pos = 0;
  try {
    const long long out = std::stoll(v, &pos);
    if (pos == v.size()) return out;
  } catch (const std::exception&) {
  }
  throw ParseError(source_ + ": key \"" + key + "\" expects an integer, got \"" + v + "\"");
}

double KeyValueConfig::get_double(const std::string& key, double fallback) {
  if (!has(key)) return fallback;
  const std::string v = raw(key);
  std::size_t pos = 0;
  try {
    const double out = std::stod(v, &pos);
    if (pos == v.size()) return out;
  } catch (const std::exception&) {
  }
  throw ParseError(source_ + ": key \"" + key + "\" expects a number, got \"" + v + "\"");
}

bool KeyValueConfig::get_bool(const std::string& key, bool fallback) {
  if (!has(key)) return fallback;
  const std::string v = raw(key);
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ParseError(source_ + ": key \"" + key + "\" expects true/false, got \"" + v + "\"");
}

std::vector<std::int64_t> KeyValueConfig::get_int_list(const std::string& key,
                                                       std::vector<std::int64_t> fallback) {
  if (!has(key)) return fallback;
  std::vector<std::int64_t> out;
  for (const auto& item : split_list(raw(key))) {
    std::size_t pos = 0;
    try {
      out.push_back(std::stoll(item, &pos));
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != item.size()) {
      throw ParseError(source_ + ": key \"" + key + "\" expects integers, got \"" + item + "\"");
    }
  }
  return out;
}

std::vector<std::string> KeyValueConfig::get_string_list(const std::string& key,
                                                         std::vector<std::string> fallback) {
  return has(key) ? split_list(raw(key)) : fallback;
}

void KeyValueConfig::forbid(const std::string& key, const std::string& reason) {
  if (has(key)) throw ParseError(source_ + ": key \"" + key + "\" " + reason);
}

void KeyValueConfig::finish() const {
  for (const auto& [key, value] : values_) {
    if (used_.count(key) == 0) {
      const auto line = lines_.find(key);
      throw ParseError(source_ + (line != lines_.end() ? ":" + std::to_string(line->second) : "") +
                       ": unknown key \"" + key + "\"");
    }
  }
}

// ---------------------------------------------------------------------------
// helpers

void write_file_atomic(const fs::path& path, const std::string& contents) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ParseError("cannot write " + tmp.string());
    out << contents;
    if (!out.flush()) throw ParseError("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

namespace {

KeyValueConfig load_config(const GlobalOptions& opts) {
  return opts.config ? KeyValueConfig::load(*opts.config) : KeyValueConfig{};
}

Order read_order(KeyValueConfig& kv) { return order_from_int(static_cast<int>(kv.get_int("p", 2))); }

SyntheticSpec read_synthetic(KeyValueConfig& kv, const std::string& prefix, SyntheticSpec spec,
                             const std::string& kind_key = "kind") {
  spec.kind = synthetic_kind_from_string(kv.get_string(prefix + kind_key, to_string(spec.kind)));
  spec.n_samples = kv.get_int(prefix + "n_samples", spec.n_samples);
  const std::string applies_to = "does not apply to dataset " + to_string(spec.kind);
  if (spec.kind == SyntheticKind::kGaussianRing) {
    spec.n_modes = kv.get_int(prefix + "n_modes", spec.n_modes);
    spec.radius = kv.get_double(prefix + "radius", spec.radius);
    spec.sigma = kv.get_double(prefix + "sigma", spec.sigma);
  } else {
    for (const char* k : {"n_modes", "radius", "sigma"}) kv.forbid(prefix + k, applies_to);
  }
  if (spec.kind == SyntheticKind::kTwoMoons || spec.kind == SyntheticKind::kSwissRoll2d) {
    spec.noise = kv.get_double(prefix + "noise", spec.noise);
  } else {
    kv.forbid(prefix + "noise", applies_to);
  }
  if (spec.kind == SyntheticKind::kCheckerboard) {
    spec.cells = kv.get_int(prefix + "cells", spec.cells);
  } else {
    kv.forbid(prefix + "cells", applies_to);
  }
  spec.validate();
  return spec;
}

std::string dump_line(const json& j) { return j.dump() + "\n"; }

void say(const GlobalOptions& opts, const std::string& msg) {
  if (!opts.quiet) std::cerr << msg << '\n';
}

}  // namespace

// ---------------------------------------------------------------------------
// distance

int cmd_distance(const GlobalOptions& opts) {
  KeyValueConfig kv = load_config(opts);
  const std::string method = opts.method ? *opts.method : kv.get_string("method", "sw");
  if (opts.method) kv.forbid("method", "given both in the config and by --method");
  const Order p = read_order(kv);

  auto read_input = [&](const std::optional<fs::path>& path, const std::string& prefix,
                        std::uint64_t stream) {
    if (path) {
      for (const auto& [key, value] : kv.values()) {
        if (key.rfind(prefix, 0) == 0) kv.forbid(key, "conflicts with an input file");
      }
      return load_measure(*path);
    }
    SyntheticSpec spec;
    spec.n_samples = 256;
    spec = read_synthetic(kv, prefix, spec);
    spec.seed = child_seed(opts.seed, stream);
    return generate(spec);
  };
  const EmpiricalMeasure mu = read_input(opts.mu, "mu.", 200);
  const EmpiricalMeasure nu = read_input(opts.nu, "nu.", 201);
  if (mu.d() != nu.d()) throw ContractViolation("distance: input dimensions differ");

  json out{{"method", method}, {"p", as_int(p)}, {"m_mu", mu.m()}, {"m_nu", nu.m()},
           {"d", mu.d()}, {"seed", opts.seed}};
  if (method == "sw") {
    const Eigen::Index L = kv.get_int("L", 100);
    for (const char* k : {"T", "lr", "k_sub", "stop_tol"}) kv.forbid(k, "does not apply to sw");
    kv.finish();
    Rng rng = child_rng(opts.seed, 4);
    out["L"] = L;
    out["value"] = sw_estimate(mu, nu, L, p, rng);
  } else if (method == "max_sw" || method == "prw") {
    kv.forbid("L", "does not apply to " + method);
    SliceOptConfig sc;
    sc.max_iters = kv.get_int("T", 100);
    sc.learning_rate = kv.get_double("lr", 0.01);
    sc.stop_tol = kv.get_double("stop_tol", sc.stop_tol);
    sc.seed = child_seed(opts.seed, 4);
    out["T"] = sc.max_iters;
    out["lr"] = sc.learning_rate;
    if (method == "max_sw") {
      kv.forbid("k_sub", "does not apply to max_sw");
      kv.finish();
      const MaxSwResult r = max_sw(mu, nu, sc, p);
      out["value"] = r.value;
      out["iterations"] = r.iterations;
      out["theta"] = std::vector<double>(r.theta.vec().data(), r.theta.vec().data() + r.theta.d());
    } else {
      const Eigen::Index k = kv.get_int("k_sub", 1);
      kv.finish();
      const PrwResult r = prw(mu, nu, k, sc, p);
      out["k_sub"] = k;
      out["value"] = r.value;
      out["iterations"] = r.iterations;
    }
  } else if (method == "exact") {
    for (const char* k : {"L", "T", "lr", "k_sub", "stop_tol"}) kv.forbid(k, "does not apply to exact");
    kv.finish();
    out["value"] = exact_wasserstein(mu, nu, p);
  } else {
    throw ParseError("unknown distance method \"" + method + "\" (sw, max_sw, prw, exact)");
  }
  std::cout << out.dump() << std::endl;
  return kOk;
}

// ---------------------------------------------------------------------------
// train

TrainSetup parse_train_config(KeyValueConfig& kv, std::uint64_t seed) {
  TrainSetup s;
  TrainConfig& c = s.train;
  if (!kv.has("loss_kind")) throw ParseError("train config: loss_kind is required");
  c.loss_kind = loss_kind_from_string(kv.get_string("loss_kind", ""));
  const LossKind kind = c.loss_kind;
  const std::string name = to_string(kind);
  const std::string na = "does not apply to loss_kind " + name;
  c.seed = seed;
  c.m = kv.get_int("m", c.m);
  c.k_batches = kv.get_int("k_batches", c.k_batches);
  c.T1 = kv.get_int("T1", c.T1);
  c.eta1 = kv.get_double("eta1", c.eta1);
  c.p = read_order(kv);
  c.beta1 = kv.get_double("beta1", c.beta1);
  c.beta2 = kv.get_double("beta2", c.beta2);
  c.noise_dim = kv.get_int("noise_dim", c.noise_dim);
  c.hidden_width = kv.get_int("hidden_width", c.hidden_width);
  c.hidden_layers = kv.get_int("hidden_layers", c.hidden_layers);
  c.eval_every = kv.get_int("eval_every", c.eval_every);
  c.eval_samples = kv.get_int("eval_samples", c.eval_samples);
  c.divergence_threshold = kv.get_double("divergence_threshold", c.divergence_threshold);

  const bool inner = kind == LossKind::kMaxSw || kind == LossKind::kPrw;
  const bool frames = kind == LossKind::kPrw || kind == LossKind::kAPrw;
  const bool amortized = is_amortized(kind) || kind == LossKind::kAPrw;
  if (kind == LossKind::kSw) {
    c.L = kv.get_int("L", c.L);
  } else {
    kv.forbid("L", na);
  }
  if (inner) {
    c.T2 = kv.get_int("T2", c.T2);
    c.warm_start = kv.get_bool("warm_start", c.warm_start);
  } else {
    kv.forbid("T2", na);
    kv.forbid("warm_start", na);
  }
  if (kind != LossKind::kSw) {
    c.eta2 = kv.get_double("eta2", c.eta2);
  } else {
    kv.forbid("eta2", na);
  }
  if (frames) {
    c.k_sub = kv.get_int("k_sub", c.k_sub);
  } else {
    kv.forbid("k_sub", na);
  }
  if (kind == LossKind::kAPrw) {
    c.frame_model = model_kind_from_string(kv.get_string("frame_model", to_string(c.frame_model)));
  } else {
    kv.forbid("frame_model", na);
  }
  if (amortized) {
    c.detach_slice = kv.get_bool("detach_slice", c.detach_slice);
  } else {
    kv.forbid("detach_slice", na);
  }

  if (kv.has("dataset") && kv.get_string("dataset", "") == "idx") {
    if (!kv.has("idx_path")) throw ParseError("train config: dataset idx needs idx_path");
    s.idx_path = kv.get_string("idx_path", "");
    for (const char* k : {"n_samples", "n_modes", "radius", "sigma", "noise", "cells"}) {
      kv.forbid(k, "does not apply to dataset idx");
    }
  } else {
    kv.forbid("idx_path", "only applies to dataset idx");
    s.data.n_samples = 10000;
    s.data = read_synthetic(kv, "", s.data, "dataset");
    s.data.seed = child_seed(seed, 100);
  }
  s.heldout_samples = c.eval_samples;
  s.checkpoint_every = kv.get_int("checkpoint_every", 0);
  if (s.checkpoint_every < 0) throw ParseError("train config: checkpoint_every must be >= 0");
  kv.finish();
  c.validate();
  return s;
}

std::pair<EmpiricalMeasure, EmpiricalMeasure> make_train_data(const TrainSetup& setup) {
  if (setup.idx_path) {
    const EmpiricalMeasure all = load_idx(*setup.idx_path);
    if (all.m() <= setup.heldout_samples) {
      throw ContractViolation("idx dataset has too few images for the held-out split");
    }
    // Held-out: the first heldout_samples images; training: the rest.
    return {EmpiricalMeasure(all.points().bottomRows(all.m() - setup.heldout_samples)),
            EmpiricalMeasure(all.points().topRows(setup.heldout_samples))};
  }
  SyntheticSpec heldout = setup.data;
  heldout.n_samples = setup.heldout_samples;
  heldout.seed = child_seed(setup.train.seed, 101);
  return {generate(setup.data), generate(heldout)};
}

namespace {

std::string checkpoint_bytes(const GeneratorParams& phi) {
  std::ostringstream out(std::ios::binary);
  write_checkpoint(out, phi);
  return out.str();
}

template <typename Params>
std::string psi_bytes(const Params& psi) {
  std::ostringstream out(std::ios::binary);
  write_checkpoint(out, psi);
  return out.str();
}

json counters_json(const TrainCounters& c) {
  return json{{"phi_updates", c.phi_updates},
              {"psi_updates", c.psi_updates},
              {"slice_updates", c.slice_updates},
              {"degenerate_events", c.degenerate_events}};
}

}  // namespace

int cmd_train(const GlobalOptions& opts) {
  if (!opts.config) throw ParseError("train: --config is required");
  KeyValueConfig kv = load_config(opts);
  const std::map<std::string, std::string> raw_config = kv.values();
  const TrainSetup setup = parse_train_config(kv, opts.seed);
  const auto [data, heldout] = make_train_data(setup);
  if (heldout.d() != data.d()) throw ContractViolation("held-out dimension mismatch");

  const fs::path ckpt_dir = opts.out / "checkpoints";
  json files = json::array();
  auto save_checkpoint = [&](const TrainResult& state, const std::string& tag) {
    const std::string gen = "generator_" + tag + ".gnsw";
    write_file_atomic(ckpt_dir / gen, checkpoint_bytes(state.generator));
    files.push_back("checkpoints/" + gen);
    if (state.psi) {
      const std::string f = "psi_" + tag + ".amsw";
      write_file_atomic(ckpt_dir / f, psi_bytes(*state.psi));
      files.push_back("checkpoints/" + f);
    }
    if (state.frame_psi) {
      const std::string f = "psi_" + tag + ".aprw";
      write_file_atomic(ckpt_dir / f, psi_bytes(*state.frame_psi));
      files.push_back("checkpoints/" + f);
    }
  };

  TrainHooks hooks;
  if (setup.checkpoint_every > 0) {
    hooks.on_iteration = [&](Eigen::Index it, const TrainResult& state) {
      if ((it + 1) % setup.checkpoint_every == 0) save_checkpoint(state, std::to_string(it + 1));
    };
  }

  say(opts, "train: " + to_string(setup.train.loss_kind) + ", T1=" + std::to_string(setup.train.T1));
  const auto t0 = std::chrono::steady_clock::now();
  const TrainResult result = train(data, setup.train, &heldout, {}, hooks);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  std::string log;
  for (const auto& rec : result.log) {
    std::ostringstream line;
    write_jsonl(line, rec);
    log += line.str();
  }
  write_file_atomic(opts.out / "run_log.jsonl", log);
  save_checkpoint(result, "final");

  json summary{{"loss_kind", to_string(setup.train.loss_kind)},
               {"seed", opts.seed},
               {"iterations", result.iterations},
               {"failed", result.failed},
               {"untrained_exact_w2", result.untrained_w2.value_or(0.0)},
               {"final_exact_w2", result.final_w2.value_or(0.0)},
               {"final_loss", result.log.empty() ? 0.0 : result.log.back().loss},
               {"counters", counters_json(result.counters)}};
  if (result.failed) summary["failure_reason"] = result.failure_reason;
  write_file_atomic(opts.out / "summary.json", summary.dump(2) + "\n");

  double iter_ms = 0.0;
  for (const auto& rec : result.log) iter_ms += rec.wall_ms;
  json timing{{"seconds", seconds},
              {"mean_iteration_ms", result.log.empty() ? 0.0 : iter_ms / result.log.size()}};
  write_file_atomic(opts.out / "timing.json", timing.dump(2) + "\n");

  json manifest{{"config", raw_config},
                {"seed", opts.seed},
                {"iteration", result.iterations},
                {"files", files}};
  write_file_atomic(opts.out / "manifest.json", manifest.dump(2) + "\n");

  std::cout << summary.dump() << std::endl;
  return result.failed ? kNumericalFailure : kOk;
}

// ---------------------------------------------------------------------------
// gradcheck

int cmd_gradcheck(const GlobalOptions& opts) {
  KeyValueConfig kv = load_config(opts);
  GradSuiteConfig cfg;
  cfg.seed = opts.seed;
  cfg.instances = static_cast<int>(kv.get_int("instances", cfg.instances));
  cfg.fd.h = kv.get_double("h", cfg.fd.h);
  cfg.fd.tol = kv.get_double("tol", cfg.fd.tol);
  cfg.fd.max_coords = static_cast<std::size_t>(kv.get_int("max_coords", 200));
  cfg.ops = kv.get_string_list("ops", {});
  if (opts.method) cfg.ops = {*opts.method};
  kv.finish();
  if (cfg.instances < 1) throw ParseError("gradcheck: instances must be >= 1");

  const std::vector<FdReport> reports = gradcheck_suite(cfg);
  std::string lines;
  json per_op = json::object();
  int failed = 0;
  for (const auto& r : reports) {
    std::ostringstream line;
    write_jsonl(line, r);
    lines += line.str();
    auto& entry = per_op[r.op];
    if (entry.is_null()) entry = json{{"instances", 0}, {"failed", 0}, {"max_rel_err", 0.0}};
    entry["instances"] = entry["instances"].get<int>() + 1;
    entry["max_rel_err"] = std::max(entry["max_rel_err"].get<double>(), r.max_rel_err);
    if (!r.pass) {
      entry["failed"] = entry["failed"].get<int>() + 1;
      ++failed;
    }
  }
  write_file_atomic(opts.out / "gradcheck.jsonl", lines);
  std::cout << json{{"checks", reports.size()}, {"failed", failed}, {"tol", cfg.fd.tol}, {"ops", per_op}}.dump()
            << std::endl;
  return failed == 0 ? kOk : kCheckFailed;
}

// ---------------------------------------------------------------------------
// bench

int cmd_bench(const GlobalOptions& opts) {
  KeyValueConfig kv = load_config(opts);
  BenchGrid grid;
  grid.seed = opts.seed;
  grid.m = kv.get_int("m", grid.m);
  grid.d = kv.get_int("d", grid.d);
  grid.warmup = static_cast<int>(kv.get_int("warmup", grid.warmup));
  grid.repetitions = static_cast<int>(kv.get_int("repetitions", grid.repetitions));
  grid.iters_per_rep = static_cast<int>(kv.get_int("iters_per_rep", grid.iters_per_rep));
  std::vector<std::string> methods =
      kv.get_string_list("methods", {"sw", "max_sw", "la_sw", "ga_sw", "na_sw"});
  if (opts.method) methods = {*opts.method};
  const auto l_grid = kv.get_int_list("L_grid", {1, 100, 1000});
  const auto t2_grid = kv.get_int_list("T2_grid", {1, 10, 100});
  const Eigen::Index k_sub = kv.get_int("k_sub", 2);
  kv.finish();

  for (const auto& name : methods) {
    const LossKind kind = loss_kind_from_string(name);
    if (kind == LossKind::kSw) {
      for (auto L : l_grid) grid.points.push_back({kind, L, 10, 1});
    } else if (kind == LossKind::kMaxSw) {
      for (auto t : t2_grid) grid.points.push_back({kind, 100, t, 1});
    } else if (kind == LossKind::kPrw) {
      for (auto t : t2_grid) grid.points.push_back({kind, 100, t, k_sub});
    } else {
      grid.points.push_back({kind, 100, 10, kind == LossKind::kAPrw ? k_sub : 1});
    }
  }
  say(opts, "bench: " + std::to_string(grid.points.size()) + " grid points");
  const std::vector<BenchRecord> records = bench_sweep(grid);

  std::ostringstream csv;
  write_csv_header(csv);
  for (const auto& r : records) write_csv(csv, r);
  write_file_atomic(opts.out / "bench.csv", csv.str());

  // Orderings along each sweep: time must grow with L and with T2.
  json checks = json::object();
  bool ok = true;
  for (const char* method : {"sw", "max_sw", "prw"}) {
    std::vector<double> times;
    for (const auto& r : records) {
      if (r.method == method) times.push_back(r.median_seconds);
    }
    if (times.size() < 2) continue;
    const bool ordered = std::is_sorted(times.begin(), times.end(), std::less_equal<>());
    checks[std::string(method) + "_time_increasing"] = ordered;
    ok = ok && ordered;
  }
  std::cout << json{{"records", records.size()}, {"checks", checks}}.dump() << std::endl;
  return ok ? kOk : kCheckFailed;
}

// ---------------------------------------------------------------------------
// oracle

int cmd_oracle(const GlobalOptions& opts) {
  KeyValueConfig kv = load_config(opts);
  const std::string suite = opts.method ? *opts.method : kv.get_string("suite", "prop2");
  std::string lines;
  int failed = 0;
  std::size_t rows = 0;
  if (suite == "prop2") {
    LowerBoundConfig cfg;
    cfg.seed = opts.seed;
    cfg.instances = static_cast<int>(kv.get_int("instances", cfg.instances));
    cfg.n_pairs = kv.get_int("n_pairs", cfg.n_pairs);
    cfg.n_angles = kv.get_int("n_angles", cfg.n_angles);
    cfg.fit_iters = kv.get_int("fit_iters", cfg.fit_iters);
    cfg.max_batch = kv.get_int("max_batch", cfg.max_batch);
    cfg.p = read_order(kv);
    std::vector<ModelKind> kinds;
    for (const auto& k : kv.get_string_list("kinds", {"linear", "generalized_linear", "nonlinear"})) {
      kinds.push_back(model_kind_from_string(k));
    }
    cfg.kinds = kinds;
    kv.finish();
    for (const auto& row : lower_bound_suite(cfg)) {
      ++rows;
      if (!row.pass) ++failed;
      lines += dump_line(json{{"instance", row.instance},
                              {"kind", to_string(row.kind)},
                              {"m", row.m},
                              {"a_sw", row.a_sw},
                              {"a_sw_se", row.a_sw_se},
                              {"m_max_sw", row.m_max_sw},
                              {"m_max_sw_se", row.m_max_sw_se},
                              {"slack", row.slack},
                              {"pass", row.pass}});
    }
  } else if (suite == "contraction") {
    ContractionConfig cfg;
    cfg.seed = opts.seed;
    cfg.instances = static_cast<int>(kv.get_int("instances", cfg.instances));
    kv.finish();
    for (const auto& row : contraction_suite(cfg)) {
      ++rows;
      if (!row.pass) ++failed;
      lines += dump_line(json{{"instance", row.instance},
                              {"exact", row.exact},
                              {"max_projected", row.max_projected},
                              {"max_sw", row.max_sw},
                              {"prw", row.prw},
                              {"pass", row.pass}});
    }
  } else {
    throw ParseError("unknown oracle suite \"" + suite + "\" (prop2, contraction)");
  }
  write_file_atomic(opts.out / ("oracle_" + suite + ".jsonl"), lines);
  std::cout << json{{"suite", suite}, {"rows", rows}, {"failed", failed}}.dump() << std::endl;
  return failed == 0 ? kOk : kCheckFailed;
}

// ---------------------------------------------------------------------------

int run(int argc, char** argv) {
  CLI::App app{"Sliced and amortized sliced Wasserstein tools"};
  app.require_subcommand(1);
  GlobalOptions opts;
  std::string config;
  std::string out = ".";
  std::string method;
  std::string mu;
  std::string nu;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config, "key = value config file");
    sub->add_option("--seed", opts.seed, "root seed");
    sub->add_option("--out", out, "output directory");
    sub->add_option("--method", method, "method / suite name");
    sub->add_flag("--quiet", opts.quiet, "suppress progress on stderr");
  };
  CLI::App* distance = app.add_subcommand("distance", "distance between two measures");
  add_common(distance);
  distance->add_option("--mu", mu, "first measure (.csv or binary)");
  distance->add_option("--nu", nu, "second measure (.csv or binary)");
  CLI::App* train_cmd = app.add_subcommand("train", "train a generator");
  add_common(train_cmd);
  CLI::App* gradcheck = app.add_subcommand("gradcheck", "finite-difference gradient suite");
  add_common(gradcheck);
  CLI::App* bench = app.add_subcommand("bench", "per-iteration timing sweep");
  add_common(bench);
  CLI::App* oracle = app.add_subcommand("oracle", "oracle-backed property suites");
  add_common(oracle);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }
  if (!config.empty()) opts.config = config;
  if (!method.empty()) opts.method = method;
  if (!mu.empty()) opts.mu = mu;
  if (!nu.empty()) opts.nu = nu;
  opts.out = out;

  try {
    if (*distance) return cmd_distance(opts);
    if (*train_cmd) return cmd_train(opts);
    if (*gradcheck) return cmd_gradcheck(opts);
    if (*bench) return cmd_bench(opts);
    if (*oracle) return cmd_oracle(opts);
  } catch (const NumericalFailure& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumericalFailure;
  } catch (const DegenerateDirection& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumericalFailure;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfigError;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfigError;
  }
  return kConfigError;
}

}  // namespace asw::cli
