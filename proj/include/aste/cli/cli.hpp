#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "aste/model/model.hpp"
#include "aste/train/train.hpp"

namespace aste::cli {

// Everything a command can be told. Defaults follow the model and training
// defaults; paths default to empty (unset).
struct RunConfig {
  std::string train_path;
  std::string dev_path;
  std::string test_path;
  std::string embeddings_path;
  std::string checkpoint_in;
  std::string checkpoint_out;
  std::string log_path;     // train; empty means <checkpoint_out>.log
  std::string report_path;  // eval
  std::string input_path;   // predict
  std::string output_path;  // predict
  std::string sentence;     // inspect
  model::ModelConfig model;
  train::TrainConfig train;
  std::string precision = "f32";  // f32 | f64
  bool eval_oracle = false;       // eval: decode gold-derived logits instead of a model
};

enum class KeyKind { kPath, kModel, kTrain, kRun };

struct ConfigKey {
  std::string name;
  KeyKind kind;
  std::string help;
  std::function<void(RunConfig&, const std::string&)> set;  // UsageError on a bad value
  std::function<std::string(const RunConfig&)> get;
};

const std::vector<ConfigKey>& config_keys();

// UsageError for unknown keys or unparsable values; the message names the key.
void set_key(RunConfig& rc, std::string_view key, const std::string& value);

// key=value lines; '#' starts a comment, blank lines are ignored. Relative
// path values resolve against the file's directory.
void load_config_file(RunConfig& rc, const std::filesystem::path& path);

// Fully resolved config, one key=value line per key, prefixed by "# ".
std::string format_config(const RunConfig& rc);

// Checks cross-field constraints (UsageError).
void validate(const RunConfig& rc);

int cmd_train(const RunConfig& rc, std::ostream& out, std::ostream& err);
int cmd_eval(const RunConfig& rc, std::ostream& out, std::ostream& err);
int cmd_predict(const RunConfig& rc, std::ostream& out, std::ostream& err);
int cmd_inspect(const RunConfig& rc, std::ostream& out, std::ostream& err);

// argv: program, subcommand, options. Returns the process exit status:
// 0 success, 1 runtime failure, 2 usage error.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace aste::cli
