#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "bpp/estimators.hpp"

namespace bpp {

inline constexpr const char* kToolkitVersion = "0.1.0";
inline constexpr int kFormatVersion = 1;

/// Versioned CSV schema for estimate rows. Changing the header requires
/// bumping kFormatVersion.
inline constexpr const char* kEstimateCsvHeader =
    "experiment_id,d,lambda,t,r,N,Delta,tol,margin,replicas,p_hat,ci_lo,ci_hi,"
    "level,seed";

/// Doubles rendered with max_digits10 so rows rebuild bit-identically.
std::string format_double(double x);

/// Writes content atomically (temp file in the same directory + rename).
void atomic_write(const std::string& path, const std::string& content);

/// Key-value config file: one `key = value` per line, '#' comments.
/// Values read through get_* are marked consumed; finish() rejects unknown
/// keys so typos cannot silently change an experiment.
class ConfigView {
 public:
  ConfigView() = default;
  static ConfigView from_file(const std::string& path);
  static ConfigView from_entries(std::map<std::string, std::string> entries);

  void override_value(const std::string& key, const std::string& value);

  bool has(const std::string& key) const { return entries_.count(key) != 0; }
  std::string get_string(const std::string& key, const std::string& fallback);
  double get_double(const std::string& key, double fallback);
  std::int64_t get_int(const std::string& key, std::int64_t fallback);
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback);
  std::vector<double> get_list(const std::string& key,
                               const std::vector<double>& fallback);

  /// Throws invalid_parameter when any key was never consumed.
  void finish() const;

  /// Fully resolved key-value map (consumed keys with their values).
  const std::map<std::string, std::string>& resolved() const { return resolved_; }

 private:
  std::map<std::string, std::string> entries_;
  std::set<std::string> consumed_;
  std::map<std::string, std::string> resolved_;
};

/// FNV-1a over the canonical "key=value\n" rendering of a config.
std::string config_hash(const std::map<std::string, std::string>& resolved);

/// One run's persisted summary: resolved config, rng identity, result rows,
/// wall time. Serializes to the versioned JSON schema.
struct RunRecord {
  std::string experiment_id;
  std::string command;
  std::map<std::string, std::string> config;
  std::uint64_t master_seed = 0;
  nlohmann::json results = nlohmann::json::array();
  double wall_seconds = 0.0;

  nlohmann::json to_json() const;
  static RunRecord from_json(const nlohmann::json& j);
};

nlohmann::json estimate_to_json(const EstimateCI& e);

/// CSV estimate row in the pinned column order.
std::string estimate_csv_row(const std::string& experiment_id,
                             const ModelConfig& config, double margin,
                             const EstimateCI& est, std::uint64_t seed);

}  // namespace bpp
