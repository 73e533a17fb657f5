#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "aste/cli/cli.hpp"
#include "aste/errors.hpp"

namespace aste::cli {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const char* want) {
  throw UsageError("config key '" + key + "': expected " + want + ", got '" + value + "'");
}

template <class UInt>
UInt parse_uint(const std::string& key, const std::string& v) {
  UInt out{};
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || ec != std::errc() || p != v.data() + v.size()) {
    bad_value(key, v, "a non-negative integer");
  }
  return out;
}

double parse_real(const std::string& key, const std::string& v) {
  char* end = nullptr;
  const double out = std::strtod(v.c_str(), &end);
  if (v.empty() || end != v.c_str() + v.size() || !std::isfinite(out)) {
    bad_value(key, v, "a finite real number");
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  bad_value(key, v, "true or false");
}

// Shortest text that reads back to the same double.
std::string real_text(double v) {
  char buf[40];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

ConfigKey path_key(std::string name, std::string help, std::string RunConfig::*field) {
  return {name, KeyKind::kPath, std::move(help),
          [field](RunConfig& rc, const std::string& v) { rc.*field = v; },
          [field](const RunConfig& rc) { return rc.*field; }};
}

template <class Field>
ConfigKey size_key(std::string name, KeyKind kind, std::string help, Field field) {
  return {name, kind, std::move(help),
          [name, field](RunConfig& rc, const std::string& v) {
            field(rc) = parse_uint<std::size_t>(name, v);
          },
          [field](const RunConfig& rc) { return std::to_string(field(rc)); }};
}

template <class Field>
ConfigKey real_key(std::string name, KeyKind kind, std::string help, Field field) {
  return {name, kind, std::move(help),
          [name, field](RunConfig& rc, const std::string& v) { field(rc) = parse_real(name, v); },
          [field](const RunConfig& rc) { return real_text(field(rc)); }};
}

template <class Field>
ConfigKey bool_key(std::string name, KeyKind kind, std::string help, Field field) {
  return {name, kind, std::move(help),
          [name, field](RunConfig& rc, const std::string& v) { field(rc) = parse_bool(name, v); },
          [field](const RunConfig& rc) {
            return std::string(field(rc) ? "true" : "false");
          }};
}

std::vector<ConfigKey> make_keys() {
  using K = KeyKind;
  std::vector<ConfigKey> k;
  k.push_back(path_key("train_path", "training split (dataset line format)", &RunConfig::train_path));
  k.push_back(path_key("dev_path", "dev split used for checkpoint selection", &RunConfig::dev_path));
  k.push_back(path_key("test_path", "split scored by eval", &RunConfig::test_path));
  k.push_back(path_key("embeddings_path", "word vectors, one 'token v1 .. vd' per line",
                       &RunConfig::embeddings_path));
  k.push_back(path_key("checkpoint_in", "checkpoint to load (resume, eval, predict, inspect)",
                       &RunConfig::checkpoint_in));
  k.push_back(path_key("checkpoint_out", "best checkpoint written by train; latest goes to <path>.last",
                       &RunConfig::checkpoint_out));
  k.push_back(path_key("log_path", "training log (default <checkpoint_out>.log)", &RunConfig::log_path));
  k.push_back(path_key("report_path", "eval report file", &RunConfig::report_path));
  k.push_back(path_key("input_path", "raw sentences for predict, one per line", &RunConfig::input_path));
  k.push_back(path_key("output_path", "predictions written by predict", &RunConfig::output_path));
  k.push_back({"sentence", K::kRun, "space-tokenized sentence for inspect",
               [](RunConfig& rc, const std::string& v) { rc.sentence = v; },
               [](const RunConfig& rc) { return rc.sentence; }});

  k.push_back(size_key("d_w", K::kModel, "word embedding size",
                       [](auto& rc) -> auto& { return rc.model.d_w; }));
  k.push_back(size_key("d_h", K::kModel, "hidden size",
                       [](auto& rc) -> auto& { return rc.model.d_h; }));
  k.push_back(size_key("layers", K::kModel, "number of table/sequence layers",
                       [](auto& rc) -> auto& { return rc.model.layers; }));
  k.push_back(size_key("heads", K::kModel, "attention heads (must divide d_h)",
                       [](auto& rc) -> auto& { return rc.model.heads; }));
  k.push_back(real_key("dropout", K::kModel, "dropout rate",
                       [](auto& rc) -> auto& { return rc.model.dropout; }));
  k.push_back(size_key("max_len", K::kModel, "longest accepted sentence",
                       [](auto& rc) -> auto& { return rc.model.max_len; }));
  k.push_back(bool_key("use_tga", K::kModel, "table-guided attention in the sequence layer",
                       [](auto& rc) -> auto& { return rc.model.use_tga; }));
  k.push_back(bool_key("use_sfi", K::kModel, "sequence features as table-layer input",
                       [](auto& rc) -> auto& { return rc.model.use_sfi; }));

  k.push_back(real_key("lr", K::kTrain, "initial learning rate",
                       [](auto& rc) -> auto& { return rc.train.lr; }));
  k.push_back(real_key("decay_rate", K::kTrain, "inverse-time decay rate",
                       [](auto& rc) -> auto& { return rc.train.decay_rate; }));
  k.push_back(size_key("decay_step", K::kTrain, "steps per decay stair",
                       [](auto& rc) -> auto& { return rc.train.decay_step; }));
  k.push_back(size_key("batch_size", K::kTrain, "sentences per update",
                       [](auto& rc) -> auto& { return rc.train.batch_size; }));
  k.push_back(size_key("max_steps", K::kTrain, "total updates",
                       [](auto& rc) -> auto& { return rc.train.max_steps; }));
  k.push_back(size_key("eval_interval", K::kTrain, "updates between dev evaluations",
                       [](auto& rc) -> auto& { return rc.train.eval_interval; }));
  k.push_back({"seed", K::kTrain, "seed for init, data order and dropout",
               [](RunConfig& rc, const std::string& v) {
                 rc.train.seed = parse_uint<std::uint64_t>("seed", v);
               },
               [](const RunConfig& rc) { return std::to_string(rc.train.seed); }});
  k.push_back(real_key("beta1", K::kTrain, "Adam beta1",
                       [](auto& rc) -> auto& { return rc.train.beta1; }));
  k.push_back(real_key("beta2", K::kTrain, "Adam beta2",
                       [](auto& rc) -> auto& { return rc.train.beta2; }));
  k.push_back(real_key("adam_eps", K::kTrain, "Adam epsilon",
                       [](auto& rc) -> auto& { return rc.train.adam_eps; }));

  k.push_back({"precision", K::kRun, "arithmetic precision, f32 or f64",
               [](RunConfig& rc, const std::string& v) {
                 if (v != "f32" && v != "f64") bad_value("precision", v, "f32 or f64");
                 rc.precision = v;
               },
               [](const RunConfig& rc) { return rc.precision; }});
  k.push_back(bool_key("eval_oracle", K::kRun, "eval: score gold-derived logits (test hook)",
                       [](auto& rc) -> auto& { return rc.eval_oracle; }));
  return k;
}

}  // namespace

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = make_keys();
  return keys;
}

void set_key(RunConfig& rc, std::string_view key, const std::string& value) {
  for (const ConfigKey& k : config_keys()) {
    if (k.name == key) {
      k.set(rc, value);
      return;
    }
  }
  throw UsageError("unknown config key '" + std::string(key) + "'");
}

void load_config_file(RunConfig& rc, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read config file " + path.string());
  const std::filesystem::path base = path.parent_path();
  std::string line;
  for (std::size_t no = 1; std::getline(in, line); ++no) {
    const std::string where = path.string() + ":" + std::to_string(no);
    const std::string body = trim(line.substr(0, line.find('#')));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw ParseError(where + ": expected key=value");
    const std::string key = trim(std::string_view(body).substr(0, eq));
    std::string value = trim(std::string_view(body).substr(eq + 1));
    const ConfigKey* found = nullptr;
    for (const ConfigKey& k : config_keys()) {
      if (k.name == key) found = &k;
    }
    if (!found) throw UsageError(where + ": unknown config key '" + key + "'");
    if (found->kind == KeyKind::kPath && !value.empty() &&
        std::filesystem::path(value).is_relative()) {
      value = (base / value).lexically_normal().string();
    }
    try {
      found->set(rc, value);
    } catch (const UsageError& e) {
      throw UsageError(where + ": " + e.what());
    }
  }
}

std::string format_config(const RunConfig& rc) {
  std::ostringstream os;
  for (const ConfigKey& k : config_keys()) os << "# " << k.name << "=" << k.get(rc) << "\n";
  return os.str();
}

void validate(const RunConfig& rc) {
  rc.model.validate();
  rc.train.validate();
}

}  // namespace aste::cli
