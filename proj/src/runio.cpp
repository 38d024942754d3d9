#include "bpp/runio.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "bpp/rng.hpp"

namespace bpp {

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void atomic_write(const std::string& path, const std::string& content) {
  std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw numeric_failure("atomic_write: cannot open " + tmp);
    out << content;
    if (!out.good()) throw numeric_failure("atomic_write: write failed for " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw numeric_failure("atomic_write: rename failed for " + path);
}

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

ConfigView ConfigView::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw invalid_parameter("config: cannot open " + path);
  std::map<std::string, std::string> entries;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string s = trim(line);
    if (s.empty() || s[0] == '#') continue;
    std::size_t eq = s.find('=');
    if (eq == std::string::npos)
      throw invalid_parameter("config: missing '=' at line " + std::to_string(lineno));
    std::string key = trim(s.substr(0, eq));
    std::string value = trim(s.substr(eq + 1));
    if (key.empty()) throw invalid_parameter("config: empty key at line " + std::to_string(lineno));
    if (!entries.emplace(key, value).second)
      throw invalid_parameter("config: duplicate key '" + key + "'");
  }
  ConfigView v;
  v.entries_ = std::move(entries);
  return v;
}

ConfigView ConfigView::from_entries(std::map<std::string, std::string> entries) {
  ConfigView v;
  v.entries_ = std::move(entries);
  return v;
}

void ConfigView::override_value(const std::string& key, const std::string& value) {
  entries_[key] = value;
}

std::string ConfigView::get_string(const std::string& key, const std::string& fallback) {
  consumed_.insert(key);
  auto it = entries_.find(key);
  std::string v = it == entries_.end() ? fallback : it->second;
  resolved_[key] = v;
  return v;
}

double ConfigView::get_double(const std::string& key, double fallback) {
  consumed_.insert(key);
  auto it = entries_.find(key);
  double v = fallback;
  if (it != entries_.end()) {
    try {
      std::size_t pos = 0;
      v = std::stod(it->second, &pos);
      if (pos != it->second.size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw invalid_parameter("config: key '" + key + "' is not a number");
    }
  }
  resolved_[key] = format_double(v);
  return v;
}

std::int64_t ConfigView::get_int(const std::string& key, std::int64_t fallback) {
  consumed_.insert(key);
  auto it = entries_.find(key);
  std::int64_t v = fallback;
  if (it != entries_.end()) {
    try {
      std::size_t pos = 0;
      v = std::stoll(it->second, &pos);
      if (pos != it->second.size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw invalid_parameter("config: key '" + key + "' is not an integer");
    }
  }
  resolved_[key] = std::to_string(v);
  return v;
}

std::uint64_t ConfigView::get_u64(const std::string& key, std::uint64_t fallback) {
  consumed_.insert(key);
  auto it = entries_.find(key);
  std::uint64_t v = fallback;
  if (it != entries_.end()) {
    try {
      std::size_t pos = 0;
      v = std::stoull(it->second, &pos);
      if (pos != it->second.size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw invalid_parameter("config: key '" + key + "' is not an unsigned integer");
    }
  }
  resolved_[key] = std::to_string(v);
  return v;
}

std::vector<double> ConfigView::get_list(const std::string& key,
                                         const std::vector<double>& fallback) {
  consumed_.insert(key);
  auto it = entries_.find(key);
  std::vector<double> v;
  if (it == entries_.end()) {
    v = fallback;
  } else {
    std::stringstream ss(it->second);
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = trim(item);
      if (item.empty()) continue;
      try {
        v.push_back(std::stod(item));
      } catch (const std::exception&) {
        throw invalid_parameter("config: key '" + key + "' has a non-numeric entry");
      }
    }
    if (v.empty()) throw invalid_parameter("config: key '" + key + "' is an empty list");
  }
  std::string repr;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) repr += ",";
    repr += format_double(v[i]);
  }
  resolved_[key] = repr;
  return v;
}

void ConfigView::finish() const {
  for (const auto& [key, value] : entries_)
    if (!consumed_.count(key))
      throw invalid_parameter("config: unknown key '" + key + "'");
}

std::string config_hash(const std::map<std::string, std::string>& resolved) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto fold = [&h](const std::string& s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
  };
  for (const auto& [k, v] : resolved) {
    fold(k);
    fold("=");
    fold(v);
    fold("\n");
  }
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

nlohmann::json RunRecord::to_json() const {
  nlohmann::json j;
  j["version"] = {{"toolkit", kToolkitVersion}, {"format", kFormatVersion}};
  j["experiment_id"] = experiment_id;
  j["command"] = command;
  j["config"] = config;
  j["config_hash"] = config_hash(config);
  j["rng"] = {{"algorithm", kRngAlgorithm}, {"master_seed", master_seed}};
  j["results"] = results;
  j["timing"] = {{"wall_seconds", wall_seconds}};
  return j;
}

RunRecord RunRecord::from_json(const nlohmann::json& j) {
  RunRecord r;
  r.experiment_id = j.at("experiment_id").get<std::string>();
  r.command = j.at("command").get<std::string>();
  r.config = j.at("config").get<std::map<std::string, std::string>>();
  r.master_seed = j.at("rng").at("master_seed").get<std::uint64_t>();
  r.results = j.at("results");
  r.wall_seconds = j.at("timing").at("wall_seconds").get<double>();
  return r;
}

nlohmann::json estimate_to_json(const EstimateCI& e) {
  return {{"successes", e.successes}, {"replicas", e.replicas},
          {"p_hat", e.p_hat},         {"ci_lo", e.ci_lo},
          {"ci_hi", e.ci_hi},         {"level", e.level}};
}

std::string estimate_csv_row(const std::string& experiment_id,
                             const ModelConfig& config, double margin,
                             const EstimateCI& est, std::uint64_t seed) {
  std::ostringstream os;
  os << experiment_id << ',' << config.d << ',' << format_double(config.lambda)
     << ',' << format_double(config.t) << ',' << format_double(config.r) << ','
     << format_double(config.extents.empty() ? 0.0 : config.extents[0]) << ','
     << format_double(config.step) << ',' << format_double(config.resolved_tol())
     << ',' << format_double(margin) << ',' << est.replicas << ','
     << format_double(est.p_hat) << ',' << format_double(est.ci_lo) << ','
     << format_double(est.ci_hi) << ',' << format_double(est.level) << ','
     << seed;
  return os.str();
}

}  // namespace bpp
