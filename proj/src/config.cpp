#include "fedsim/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

namespace fedsim {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

[[noreturn]] void fail(const std::string& key, const std::string& what) {
  throw std::invalid_argument("config: key '" + key + "': " + what);
}

class KeyMap {
 public:
  explicit KeyMap(std::map<std::string, std::string> kv) : kv_(std::move(kv)) {}

  bool has(const std::string& key) {
    const bool present = kv_.count(key) > 0;
    if (present) used_.insert(key);
    return present;
  }

  std::string str(const std::string& key, const std::string& def) {
    if (!has(key)) return def;
    return kv_.at(key);
  }

  long long integer(const std::string& key, long long def) {
    if (!has(key)) return def;
    const std::string v = kv_.at(key);
    try {
      std::size_t pos = 0;
      const long long x = std::stoll(v, &pos);
      if (pos != v.size()) throw std::invalid_argument("");
      return x;
    } catch (const std::exception&) {
      fail(key, "expected an integer, got '" + v + "'");
    }
  }

  double real(const std::string& key, double def) {
    if (!has(key)) return def;
    const std::string v = kv_.at(key);
    try {
      std::size_t pos = 0;
      const double x = std::stod(v, &pos);
      if (pos != v.size()) throw std::invalid_argument("");
      return x;
    } catch (const std::exception&) {
      fail(key, "expected a number, got '" + v + "'");
    }
  }

  void reject_unknown() const {
    for (const auto& [key, value] : kv_)
      if (!used_.count(key))
        throw std::invalid_argument("config: unknown key '" + key + "'");
  }

 private:
  std::map<std::string, std::string> kv_;
  std::set<std::string> used_;
};

std::vector<std::size_t> parse_size_list(const std::string& key, const std::string& v) {
  std::vector<std::size_t> out;
  std::stringstream ss(v);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    tok = trim(tok);
    try {
      std::size_t pos = 0;
      const long long x = std::stoll(tok, &pos);
      if (pos != tok.size() || x < 1) throw std::invalid_argument("");
      out.push_back(static_cast<std::size_t>(x));
    } catch (const std::exception&) {
      fail(key, "expected a comma list of positive integers, got '" + v + "'");
    }
  }
  if (out.empty()) fail(key, "expected a non-empty comma list");
  return out;
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config: line " + std::to_string(lineno) +
                                  ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty())
      throw std::invalid_argument("config: line " + std::to_string(lineno) +
                                  ": empty key or value");
    if (kv.count(key))
      throw std::invalid_argument("config: duplicate key '" + key + "'");
    kv[key] = value;
  }

  KeyMap map(std::move(kv));
  ExperimentConfig cfg;

  cfg.n = static_cast<std::size_t>(map.integer("n", 10));
  cfg.f = static_cast<std::size_t>(map.integer("f", 4));
  cfg.rounds = static_cast<std::size_t>(map.integer("rounds", 1));
  cfg.seed = static_cast<std::uint64_t>(map.integer("seed", 1));
  cfg.local_epochs = static_cast<std::size_t>(map.integer("local_epochs", 1));
  cfg.batch_size = static_cast<std::size_t>(map.integer("batch_size", 16));
  cfg.lr_local = map.real("lr_local", 0.01);
  cfg.lr_server = map.real("lr_server", 1.0);

  const std::string mode = map.str("mode", "parameters");
  if (mode == "parameters") cfg.mode = UpdateKind::kParameters;
  else if (mode == "gradients") cfg.mode = UpdateKind::kGradients;
  else fail("mode", "must be parameters|gradients, got '" + mode + "'");

  const std::string opt = map.str("optimizer", "sgd");
  if (opt == "sgd") cfg.optimizer = OptimizerKind::kSgd;
  else if (opt == "adam") cfg.optimizer = OptimizerKind::kAdam;
  else fail("optimizer", "must be sgd|adam, got '" + opt + "'");

  const std::string defense = map.str("defense.kind", "dos");
  if (defense == "fedavg") cfg.defense.kind = DefenseKind::kFedAvg;
  else if (defense == "krum") cfg.defense.kind = DefenseKind::kKrum;
  else if (defense == "trimmed_mean") cfg.defense.kind = DefenseKind::kTrimmedMean;
  else if (defense == "dos") cfg.defense.kind = DefenseKind::kDos;
  else fail("defense.kind", "must be fedavg|krum|trimmed_mean|dos, got '" + defense + "'");
  if (map.has("defense.krum_f"))
    cfg.defense.krum_f = static_cast<std::size_t>(map.integer("defense.krum_f", 0));
  if (map.has("defense.trim_k"))
    cfg.defense.trim_k = static_cast<std::size_t>(map.integer("defense.trim_k", 0));

  const std::string attack = map.str("attack.kind", "none");
  if (attack == "none") cfg.attack.kind = AttackKind::kNone;
  else if (attack == "disbelieve") cfg.attack.kind = AttackKind::kDisbelieve;
  else if (attack == "lie") cfg.attack.kind = AttackKind::kLie;
  else if (attack == "min_max") cfg.attack.kind = AttackKind::kMinMax;
  else if (attack == "noise") cfg.attack.kind = AttackKind::kNoise;
  else if (attack == "scale") cfg.attack.kind = AttackKind::kScale;
  else if (attack == "label_flip") cfg.attack.kind = AttackKind::kLabelFlip;
  else fail("attack.kind",
            "must be none|disbelieve|lie|min_max|noise|scale|label_flip, got '" + attack + "'");

  cfg.attack.z = map.real("attack.z", 1.5);
  cfg.attack.sigma = map.real("attack.sigma", 1.0);
  cfg.attack.lambda = map.real("attack.lambda", -10.0);
  cfg.attack.max_epochs = static_cast<std::size_t>(map.integer("attack.max_epochs", 5));
  cfg.attack.epochs = static_cast<std::size_t>(map.integer("attack.epochs", 1));
  if (map.has("attack.lr")) cfg.attack.lr = map.real("attack.lr", 0.0);
  const std::string dir = map.str("attack.direction", "inverse_unit");
  if (dir == "inverse_unit") cfg.attack.direction = MinMaxDirection::kInverseUnit;
  else if (dir == "negative_std") cfg.attack.direction = MinMaxDirection::kNegativeStd;
  else fail("attack.direction", "must be inverse_unit|negative_std, got '" + dir + "'");

  if (map.has("model.hidden"))
    cfg.hidden_sizes = parse_size_list("model.hidden", map.str("model.hidden", ""));

  const std::string data = map.str("data.kind", "blobs");
  if (data == "blobs") cfg.data.kind = DataConfig::Kind::kBlobs;
  else if (data == "csv") cfg.data.kind = DataConfig::Kind::kCsv;
  else fail("data.kind", "must be blobs|csv, got '" + data + "'");
  cfg.data.blobs.classes = static_cast<int>(map.integer("data.classes", 2));
  cfg.data.blobs.per_class = static_cast<int>(map.integer("data.per_class", 500));
  cfg.data.blobs.input_dim = static_cast<int>(map.integer("data.input_dim", 20));
  cfg.data.blobs.spread = map.real("data.spread", 1.0);
  cfg.data.csv_path = map.str("data.csv_path", "");
  const std::string part = map.str("data.partition", "iid");
  if (part == "iid") cfg.data.partition = DataConfig::PartitionKind::kIid;
  else if (part == "dirichlet") cfg.data.partition = DataConfig::PartitionKind::kDirichlet;
  else fail("data.partition", "must be iid|dirichlet, got '" + part + "'");
  cfg.data.alpha = map.real("data.alpha", 0.5);

  map.reject_unknown();
  cfg.validate();
  return cfg;
}

ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("config: cannot open " + path);
  std::stringstream buf;
  buf << is.rdbuf();
  return parse_config_text(buf.str());
}

std::string canonical_config(const ExperimentConfig& cfg) {
  char num[64];
  const auto fmt = [&](double x) {
    std::snprintf(num, sizeof(num), "%.17g", x);
    return std::string(num);
  };
  std::map<std::string, std::string> kv;
  kv["n"] = std::to_string(cfg.n);
  kv["f"] = std::to_string(cfg.f);
  kv["rounds"] = std::to_string(cfg.rounds);
  kv["seed"] = std::to_string(cfg.seed);
  kv["mode"] = to_string(cfg.mode);
  kv["local_epochs"] = std::to_string(cfg.local_epochs);
  kv["batch_size"] = std::to_string(cfg.batch_size);
  kv["lr_local"] = fmt(cfg.lr_local);
  kv["lr_server"] = fmt(cfg.lr_server);
  kv["optimizer"] = cfg.optimizer == OptimizerKind::kSgd ? "sgd" : "adam";
  kv["defense.kind"] = to_string(cfg.defense.kind);
  kv["defense.krum_f"] = std::to_string(cfg.defense.krum_f.value_or(cfg.f));
  kv["defense.trim_k"] = std::to_string(cfg.defense.trim_k.value_or(cfg.f));
  kv["attack.kind"] = to_string(cfg.attack.kind);
  kv["attack.z"] = fmt(cfg.attack.z);
  kv["attack.sigma"] = fmt(cfg.attack.sigma);
  kv["attack.lambda"] = fmt(cfg.attack.lambda);
  kv["attack.max_epochs"] = std::to_string(cfg.attack.max_epochs);
  kv["attack.epochs"] = std::to_string(cfg.attack.epochs);
  kv["attack.lr"] = fmt(cfg.attack.lr.value_or(cfg.lr_local));
  kv["attack.direction"] =
      cfg.attack.direction == MinMaxDirection::kInverseUnit ? "inverse_unit" : "negative_std";
  {
    std::string h;
    for (std::size_t i = 0; i < cfg.hidden_sizes.size(); ++i)
      h += (i ? "," : "") + std::to_string(cfg.hidden_sizes[i]);
    kv["model.hidden"] = h;
  }
  kv["data.kind"] = cfg.data.kind == DataConfig::Kind::kBlobs ? "blobs" : "csv";
  kv["data.classes"] = std::to_string(cfg.data.blobs.classes);
  kv["data.per_class"] = std::to_string(cfg.data.blobs.per_class);
  kv["data.input_dim"] = std::to_string(cfg.data.blobs.input_dim);
  kv["data.spread"] = fmt(cfg.data.blobs.spread);
  kv["data.csv_path"] = cfg.data.csv_path;
  kv["data.partition"] =
      cfg.data.partition == DataConfig::PartitionKind::kIid ? "iid" : "dirichlet";
  kv["data.alpha"] = fmt(cfg.data.alpha);

  std::string out;
  for (const auto& [k, v] : kv) out += k + " = " + v + "\n";
  return out;
}

std::string config_hash(const ExperimentConfig& cfg) {
  const std::string text = canonical_config(cfg);
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

}  // namespace fedsim
