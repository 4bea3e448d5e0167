#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "packdim/envelope.hpp"
#include "packdim/estimators.hpp"
#include "packdim/measure.hpp"

namespace packdim {

inline constexpr const char* kToolVersion = "1.0.0";

/// Flat key-value run configuration. Every key has a default; unknown keys
/// are rejected. Later assignments override earlier ones.
class RunConfig {
 public:
  explicit RunConfig(std::string command);

  const std::string& command() const { return command_; }
  const std::map<std::string, std::string>& values() const { return values_; }

  void set(const std::string& key, const std::string& value);
  /// Parses "key=value".
  void assign(const std::string& assignment);
  /// Lines "key = value"; '#' starts a comment; blank lines ignored.
  void load_file(const std::filesystem::path& path);

  std::string text(const std::string& key) const;
  double real(const std::string& key) const;
  std::uint64_t integer(const std::string& key) const;
  bool flag(const std::string& key) const;
  std::vector<double> reals(const std::string& key) const;  // comma separated

  std::uint64_t seed() const { return integer("seed"); }
  /// FNV-1a over the sorted "key=value" lines and the command name.
  std::string digest() const;

  EstimatorConfig estimator(const std::string& prefix = "est") const;
  LevelPairs assouad_pairs(const PointMeasure& mu) const;

 private:
  std::string command_;
  std::map<std::string, std::string> values_;
};

struct KeyInfo {
  const char* key;
  const char* fallback;
  const char* help;
};

/// Every recognised configuration key with its default.
const std::vector<KeyInfo>& config_keys();

/// Generator spec such as "cantor:ratio=1/3,depth=11", "grid:n=2,k=64",
/// "sparse:h=0.3,p=0.6,depth=12,seed=1", "atom:x=0.5,x=0.5",
/// "product:<spec>|<spec>".
PointMeasure generate_measure(const std::string& spec);

/// A path to an existing measure file, otherwise a generator spec.
PointMeasure resolve_measure(const std::string& source);

struct CommandOutput {
  nlohmann::ordered_json report;
  /// Extra files (name relative to the output directory, content).
  std::vector<std::pair<std::string, std::string>> files;
  std::optional<PointMeasure> measure;  // written by generate
  std::optional<DyadicTree> tree;       // written by envelope
};

CommandOutput run_command(const RunConfig& cfg);

/// Report text as written to disk: the JSON report with a trailing newline.
std::string render_report(const CommandOutput& out);

/// Writes <command>.json, the extra files, and any measure or tree into the
/// output directory; returns the report path.
std::filesystem::path write_outputs(const RunConfig& cfg, const CommandOutput& out);

/// Process exit code for an exception escaping a command.
int exit_code_for(const std::exception& e);

}  // namespace packdim
