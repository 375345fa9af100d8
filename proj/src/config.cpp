#include "swarmlearn/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "swarmlearn/io.hpp"

namespace swarmlearn {

ExperimentConfig ExperimentConfig::defaults(Space space) {
  ExperimentConfig c;
  c.space = space;
  if (space == Space::spatial) {
    c.d_cr = 2.0;
    c.tau = 1;
    c.noise_var = 0.01;
    c.steps = 1700;
    c.discard = 10;
    c.traj_count = 22;
    c.train_count = 2;
    c.dt = 0.02;
    c.gain_form = GainForm::square;
  }
  return c;
}

void ExperimentConfig::validate() const {
  if (n < 2) throw ValidationError("config: n must be >= 2");
  if (k < 1) throw ValidationError("config: k must be >= 1");
  if (hidden < 1) throw ValidationError("config: hidden must be >= 1");
  if (!(d_cr > 0.0)) throw ValidationError("config: d_cr must be positive");
  if (steps < 1 || traj_count < 1) throw ValidationError("config: counts must be positive");
  dataset_spec().validate();
  controller_meta().validate();
  train_config().validate();
}

DatasetSpec ExperimentConfig::dataset_spec() const {
  DatasetSpec s;
  s.space = space;
  s.n = n;
  s.traj_count = traj_count;
  s.train_count = train_count;
  s.steps = steps;
  s.discard = discard;
  s.dt = dt;
  s.noise_var = noise_var;
  s.seed = seed;
  s.boids.dt = dt;
  return s;
}

ControllerMeta ExperimentConfig::controller_meta() const {
  ControllerMeta m;
  m.space = space;
  m.k = k;
  m.d_cr = d_cr;
  m.tau = tau;
  m.neighbor = {d0_neighbor, gain_form, a};
  m.wall = {d0_wall, GainForm::square, a};
  m.half_side = BoidsParams{}.cube_half_side;
  return m;
}

TrainConfig ExperimentConfig::train_config() const {
  TrainConfig t;
  t.lr = lr;
  t.epochs = epochs;
  t.batch_size = batch_size;
  t.seed = train_seed;
  t.gradient_clip = gradient_clip;
  return t;
}

namespace {

[[noreturn]] void fail(const std::string& origin, const YAML::Mark& mark, const std::string& msg) {
  throw ValidationError(origin + ":" + std::to_string(mark.line + 1) + ": " + msg);
}

template <class T>
T scalar(const std::string& origin, const std::string& key, const YAML::Node& node) {
  if (!node.IsScalar()) fail(origin, node.Mark(), "key '" + key + "' expects a scalar value");
  const std::string& text = node.Scalar();
  T value{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size())
    fail(origin, node.Mark(), "key '" + key + "' has malformed value '" + text + "'");
  return value;
}

using Setter = std::function<void(ExperimentConfig&, const std::string&, const YAML::Node&)>;

const std::map<std::string, Setter>& top_level() {
  static const std::map<std::string, Setter> table = {
      {"n", [](auto& c, auto& o, auto& v) { c.n = scalar<Index>(o, "n", v); }},
      {"d_cr", [](auto& c, auto& o, auto& v) { c.d_cr = scalar<double>(o, "d_cr", v); }},
      {"k", [](auto& c, auto& o, auto& v) { c.k = scalar<Index>(o, "k", v); }},
      {"tau", [](auto& c, auto& o, auto& v) { c.tau = scalar<std::size_t>(o, "tau", v); }},
      {"hidden", [](auto& c, auto& o, auto& v) { c.hidden = scalar<Index>(o, "hidden", v); }},
      {"noise_var", [](auto& c, auto& o, auto& v) { c.noise_var = scalar<double>(o, "noise_var", v); }},
      {"steps", [](auto& c, auto& o, auto& v) { c.steps = scalar<std::size_t>(o, "steps", v); }},
      {"discard", [](auto& c, auto& o, auto& v) { c.discard = scalar<std::size_t>(o, "discard", v); }},
      {"traj_count", [](auto& c, auto& o, auto& v) { c.traj_count = scalar<std::size_t>(o, "traj_count", v); }},
      {"train_count", [](auto& c, auto& o, auto& v) { c.train_count = scalar<std::size_t>(o, "train_count", v); }},
      {"dt", [](auto& c, auto& o, auto& v) { c.dt = scalar<double>(o, "dt", v); }},
      {"d0_neighbor", [](auto& c, auto& o, auto& v) { c.d0_neighbor = scalar<double>(o, "d0_neighbor", v); }},
      {"d0_wall", [](auto& c, auto& o, auto& v) { c.d0_wall = scalar<double>(o, "d0_wall", v); }},
      {"a", [](auto& c, auto& o, auto& v) { c.a = scalar<double>(o, "a", v); }},
      {"seed", [](auto& c, auto& o, auto& v) { c.seed = scalar<std::uint64_t>(o, "seed", v); }},
      {"gain_form",
       [](auto& c, auto& o, auto& v) {
         if (!v.IsScalar()) fail(o, v.Mark(), "key 'gain_form' expects a scalar value");
         try {
           c.gain_form = parse_gain_form(v.Scalar());
         } catch (const ValidationError& e) {
           fail(o, v.Mark(), e.what());
         }
       }},
  };
  return table;
}

const std::map<std::string, Setter>& train_block() {
  static const std::map<std::string, Setter> table = {
      {"lr", [](auto& c, auto& o, auto& v) { c.lr = scalar<double>(o, "train.lr", v); }},
      {"epochs", [](auto& c, auto& o, auto& v) { c.epochs = scalar<std::size_t>(o, "train.epochs", v); }},
      {"batch_size", [](auto& c, auto& o, auto& v) { c.batch_size = scalar<std::size_t>(o, "train.batch_size", v); }},
      {"seed", [](auto& c, auto& o, auto& v) { c.train_seed = scalar<std::uint64_t>(o, "train.seed", v); }},
      {"gradient_clip", [](auto& c, auto& o, auto& v) { c.gradient_clip = scalar<double>(o, "train.gradient_clip", v); }},
  };
  return table;
}

void apply_block(ExperimentConfig& cfg, const std::string& origin, const YAML::Node& block,
                 const std::map<std::string, Setter>& table, const std::string& prefix) {
  for (const auto& kv : block) {
    const std::string key = kv.first.Scalar();
    if (prefix.empty() && (key == "space" || key == "train")) continue;
    const auto it = table.find(key);
    if (it == table.end()) fail(origin, kv.first.Mark(), "unknown key '" + prefix + key + "'");
    it->second(cfg, origin, kv.second);
  }
}

}  // namespace

ExperimentConfig parse_config(const std::string& text, const std::string& origin) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    fail(origin, e.mark, e.msg);
  }
  if (!root.IsMap()) throw ValidationError(origin + ":1: config must be a mapping");
  const YAML::Node space_node = root["space"];
  if (!space_node) throw ValidationError(origin + ":1: missing required key 'space'");
  Space space;
  try {
    space = parse_space(space_node.Scalar());
  } catch (const ValidationError& e) {
    fail(origin, space_node.Mark(), e.what());
  }
  ExperimentConfig cfg = ExperimentConfig::defaults(space);
  apply_block(cfg, origin, root, top_level(), "");
  if (const YAML::Node train = root["train"]) {
    if (!train.IsMap()) fail(origin, train.Mark(), "key 'train' expects a mapping");
    apply_block(cfg, origin, train, train_block(), "train.");
  }
  try {
    cfg.validate();
  } catch (const ValidationError& e) {
    throw ValidationError(origin + ": " + e.what());
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path);
}

std::string emit_config(const ExperimentConfig& c) {
  std::ostringstream out;
  out << "space: " << to_string(c.space) << '\n'
      << "n: " << c.n << '\n'
      << "d_cr: " << format_double(c.d_cr) << '\n'
      << "k: " << c.k << '\n'
      << "tau: " << c.tau << '\n'
      << "hidden: " << c.hidden << '\n'
      << "noise_var: " << format_double(c.noise_var) << '\n'
      << "steps: " << c.steps << '\n'
      << "discard: " << c.discard << '\n'
      << "traj_count: " << c.traj_count << '\n'
      << "train_count: " << c.train_count << '\n'
      << "dt: " << format_double(c.dt) << '\n'
      << "d0_neighbor: " << format_double(c.d0_neighbor) << '\n'
      << "d0_wall: " << format_double(c.d0_wall) << '\n'
      << "gain_form: " << to_string(c.gain_form) << '\n'
      << "a: " << format_double(c.a) << '\n'
      << "seed: " << c.seed << '\n'
      << "train:\n"
      << "  lr: " << format_double(c.lr) << '\n'
      << "  epochs: " << c.epochs << '\n'
      << "  batch_size: " << c.batch_size << '\n'
      << "  seed: " << c.train_seed << '\n';
  if (c.gradient_clip) out << "  gradient_clip: " << format_double(*c.gradient_clip) << '\n';
  return out.str();
}

}  // namespace swarmlearn
