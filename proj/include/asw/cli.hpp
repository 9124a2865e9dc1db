#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "asw/datasets.hpp"
#include "asw/trainer.hpp"

namespace asw::cli {

enum ExitCode : int { kOk = 0, kCheckFailed = 1, kConfigError = 2, kNumericalFailure = 3 };

/// `key = value` per line, `#` starts a comment. Keys are looked up through the
/// typed getters; finish() rejects anything that was never read.
class KeyValueConfig {
 public:
  KeyValueConfig() = default;
  static KeyValueConfig parse(std::istream& in, const std::string& source = "<config>");
  static KeyValueConfig load(const std::filesystem::path& path);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  std::string get_string(const std::string& key, const std::string& fallback);
  std::int64_t get_int(const std::string& key, std::int64_t fallback);
  double get_double(const std::string& key, double fallback);
  bool get_bool(const std::string& key, bool fallback);
  std::vector<std::int64_t> get_int_list(const std::string& key, std::vector<std::int64_t> fallback);
  std::vector<std::string> get_string_list(const std::string& key, std::vector<std::string> fallback);
  /// Throws ParseError naming `key` unless the condition holds.
  void forbid(const std::string& key, const std::string& reason);
  void finish() const;

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::string raw(const std::string& key);
  std::map<std::string, std::string> values_;
  std::map<std::string, int> lines_;
  std::set<std::string> used_;
  std::string source_;
};

struct GlobalOptions {
  std::optional<std::filesystem::path> config;
  std::uint64_t seed = 0;
  std::filesystem::path out = ".";
  std::optional<std::string> method;
  bool quiet = false;
  // distance inputs
  std::optional<std::filesystem::path> mu;
  std::optional<std::filesystem::path> nu;
};

struct TrainSetup {
  TrainConfig train;
  SyntheticSpec data;
  std::optional<std::filesystem::path> idx_path;
  Eigen::Index heldout_samples = 512;
  Eigen::Index checkpoint_every = 0;
};

/// Reads train keys; rejects keys that do not apply to the chosen loss kind.
TrainSetup parse_train_config(KeyValueConfig& kv, std::uint64_t seed);

/// Training data and held-out set, drawn from seed streams 100 and 101.
std::pair<EmpiricalMeasure, EmpiricalMeasure> make_train_data(const TrainSetup& setup);

void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

int cmd_distance(const GlobalOptions& opts);
int cmd_train(const GlobalOptions& opts);
int cmd_gradcheck(const GlobalOptions& opts);
int cmd_bench(const GlobalOptions& opts);
int cmd_oracle(const GlobalOptions& opts);

/// Entry point: parses argv, dispatches, maps exceptions to exit codes.
int run(int argc, char** argv);

}  // namespace asw::cli
