#include "swarmlearn/io.hpp"

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include <json.hpp>

namespace swarmlearn {

using nlohmann::json;

std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view text) {
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size())
    throw ValidationError("malformed number '" + std::string(text) + "'");
  return value;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write '" + path + "'");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
}

// ---- trajectories -----------------------------------------------------------

void write_trajectory(std::ostream& out, const Trajectory& traj) {
  traj.validate();
  out << "# swarmlearn-traj v1\n";
  out << "# n=" << traj.robots() << " d=" << traj.dim() << " dt=" << format_double(traj.dt)
      << " space=" << to_string(traj.space) << '\n';
  out << "step,robot";
  for (Index c = 0; c < traj.dim(); ++c) out << ",c" << c;
  out << '\n';
  std::string line;
  for (std::size_t s = 0; s < traj.length(); ++s) {
    const SwarmState& z = traj.snapshots[s];
    for (Index i = 0; i < z.rows(); ++i) {
      line = std::to_string(s) + ',' + std::to_string(i);
      for (Index c = 0; c < z.cols(); ++c) {
        line += ',';
        line += format_double(z(i, c));
      }
      line += '\n';
      out << line;
    }
  }
}

namespace {

[[noreturn]] void bad_line(const std::string& origin, std::size_t line, const std::string& msg) {
  throw ValidationError(origin + ":" + std::to_string(line) + ": " + msg);
}

std::string_view next_field(std::string_view& rest) {
  const auto comma = rest.find(',');
  std::string_view field = rest.substr(0, comma);
  rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
  return field;
}

template <class T>
T parse_int(std::string_view text, const std::string& origin, std::size_t line) {
  T v{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size()) bad_line(origin, line, "malformed integer '" + std::string(text) + "'");
  return v;
}

}  // namespace

Trajectory read_trajectory(std::istream& in, const std::string& origin) {
  std::string line;
  std::size_t lineno = 0;
  auto next = [&]() -> bool {
    if (!std::getline(in, line)) return false;
    ++lineno;
    return true;
  };
  if (!next() || line != "# swarmlearn-traj v1") bad_line(origin, 1, "missing '# swarmlearn-traj v1' header");
  if (!next() || line.rfind("# ", 0) != 0) bad_line(origin, 2, "missing metadata header");

  Trajectory traj;
  Index n = -1, d = -1;
  bool have_dt = false, have_space = false;
  {
    std::istringstream meta(line.substr(2));
    std::string tok;
    while (meta >> tok) {
      const auto eq = tok.find('=');
      if (eq == std::string::npos) bad_line(origin, 2, "malformed metadata token '" + tok + "'");
      const std::string key = tok.substr(0, eq);
      const std::string_view val = std::string_view(tok).substr(eq + 1);
      try {
        if (key == "n") n = parse_int<Index>(val, origin, 2);
        else if (key == "d") d = parse_int<Index>(val, origin, 2);
        else if (key == "dt") traj.dt = parse_double(val), have_dt = true;
        else if (key == "space") traj.space = parse_space(val), have_space = true;
        else bad_line(origin, 2, "unknown metadata key '" + key + "'");
      } catch (const ValidationError& e) {
        if (std::string_view(e.what()).rfind(origin, 0) == 0) throw;
        bad_line(origin, 2, e.what());
      }
    }
  }
  if (n < 1 || d < 1 || !have_dt || !have_space) bad_line(origin, 2, "metadata must define n, d, dt and space");
  if (!next()) bad_line(origin, 3, "missing column header");

  std::size_t expected_step = 0;
  Index expected_robot = 0;
  SwarmState current(n, d);
  while (next()) {
    if (line.empty()) continue;
    const auto fields = static_cast<Index>(std::count(line.begin(), line.end(), ',')) + 1;
    if (fields != d + 2)
      bad_line(origin, lineno, "expected " + std::to_string(d + 2) + " columns, found " + std::to_string(fields));
    std::string_view rest = line;
    const auto step = parse_int<std::size_t>(next_field(rest), origin, lineno);
    const auto robot = parse_int<Index>(next_field(rest), origin, lineno);
    if (step != expected_step || robot != expected_robot)
      bad_line(origin, lineno, "rows out of order (expected step " + std::to_string(expected_step) + " robot " +
                                   std::to_string(expected_robot) + ")");
    for (Index c = 0; c < d; ++c) {
      if (rest.data() == nullptr || (rest.empty() && c < d)) bad_line(origin, lineno, "too few columns");
      try {
        current(robot, c) = parse_double(next_field(rest));
      } catch (const ValidationError& e) {
        bad_line(origin, lineno, e.what());
      }
    }
    if (!rest.empty()) bad_line(origin, lineno, "too many columns");
    if (++expected_robot == n) {
      traj.snapshots.push_back(current);
      expected_robot = 0;
      ++expected_step;
    }
  }
  if (expected_robot != 0) bad_line(origin, lineno, "last snapshot is incomplete");
  try {
    traj.validate();
  } catch (const ValidationError& e) {
    throw ValidationError(origin + ": " + e.what());
  }
  return traj;
}

void save_trajectory(const std::string& path, const Trajectory& traj) {
  std::ostringstream out;
  write_trajectory(out, traj);
  write_file(path, out.str());
}

Trajectory load_trajectory(const std::string& path) {
  std::istringstream in(read_file(path));
  return read_trajectory(in, path);
}

// ---- checkpoints --------------------------------------------------------------

namespace {

json flat_array(const double* data, Index size) { return json(std::vector<double>(data, data + size)); }

std::vector<double> doubles(const json& j, const std::string& what, std::size_t expected) {
  if (!j.is_array()) throw ValidationError("checkpoint: '" + what + "' must be an array");
  auto v = j.get<std::vector<double>>();
  if (v.size() != expected)
    throw ValidationError("checkpoint: '" + what + "' has " + std::to_string(v.size()) + " entries, expected " +
                          std::to_string(expected));
  return v;
}

json potential_json(const PotentialSpec& s) {
  return {{"d0", s.d0}, {"gain_form", std::string(to_string(s.form))}, {"a", s.offset}};
}

PotentialSpec potential_from(const json& j) {
  return {j.at("d0").get<double>(), parse_gain_form(j.at("gain_form").get<std::string>()), j.at("a").get<double>()};
}

json params_json(const ControllerParams& p) {
  return {{"w1", flat_array(p.w1.data(), p.w1.size())},
          {"b1", flat_array(p.b1.data(), p.b1.size())},
          {"w2", flat_array(p.w2.data(), p.w2.size())},
          {"b2", flat_array(p.b2.data(), p.b2.size())},
          {"phi_neighbor", p.phi_neighbor},
          {"phi_wall", p.phi_wall}};
}

ControllerParams params_from(const ControllerMeta& meta, Index hidden, const json& j) {
  ControllerParams p = ControllerParams::zeros(meta, hidden);
  auto fill = [&](double* dst, Index size, const char* key) {
    const auto v = doubles(j.at(key), key, static_cast<std::size_t>(size));
    std::copy(v.begin(), v.end(), dst);
  };
  fill(p.w1.data(), p.w1.size(), "w1");
  fill(p.b1.data(), p.b1.size(), "b1");
  fill(p.w2.data(), p.w2.size(), "w2");
  fill(p.b2.data(), p.b2.size(), "b2");
  p.phi_neighbor = j.at("phi_neighbor").get<double>();
  p.phi_wall = j.at("phi_wall").get<double>();
  p.validate();
  return p;
}

json vector_json(const std::vector<double>& v) { return json(v); }

}  // namespace

std::string emit_checkpoint(const ControllerParams& best, const TrainState* state) {
  best.validate();
  const ControllerMeta& m = best.meta;
  json j;
  j["format"] = "swarmlearn-checkpoint";
  j["version"] = 1;
  j["meta"] = {{"space", std::string(to_string(m.space))},
               {"k", m.k},
               {"d", m.d()},
               {"d_cr", m.d_cr},
               {"tau", m.tau},
               {"hidden", best.hidden()},
               {"neighbor", potential_json(m.neighbor)},
               {"wall", potential_json(m.wall)},
               {"half_side", m.half_side}};
  j["params"] = params_json(best);
  if (state) {
    const TrainHistory& h = state->history;
    json t;
    t["epochs_completed"] = h.epochs();
    if (std::isfinite(state->best_loss)) t["best_loss"] = state->best_loss;
    t["current"] = params_json(state->current);
    t["adam"] = {{"m", flat_array(state->adam.m.data(), state->adam.m.size())},
                 {"v", flat_array(state->adam.v.data(), state->adam.v.size())},
                 {"t", state->adam.t}};
    t["history"] = {{"train_loss", vector_json(h.train_loss)},
                    {"heldout_loss", vector_json(h.heldout_loss)},
                    {"phi_neighbor", vector_json(h.phi_neighbor)},
                    {"phi_wall", vector_json(h.phi_wall)}};
    j["training"] = std::move(t);
  }
  return j.dump(1) + "\n";
}

Checkpoint parse_checkpoint(const std::string& text, const std::string& origin) {
  try {
    const json j = json::parse(text);
    if (j.value("format", "") != "swarmlearn-checkpoint") throw ValidationError("not a swarmlearn checkpoint");
    if (j.value("version", 0) != 1) throw ValidationError("unsupported checkpoint version");
    const json& mj = j.at("meta");
    ControllerMeta meta;
    meta.space = parse_space(mj.at("space").get<std::string>());
    meta.k = mj.at("k").get<Index>();
    meta.d_cr = mj.at("d_cr").get<double>();
    meta.tau = mj.at("tau").get<std::size_t>();
    meta.neighbor = potential_from(mj.at("neighbor"));
    meta.wall = potential_from(mj.at("wall"));
    meta.half_side = mj.at("half_side").get<double>();
    if (mj.at("d").get<Index>() != meta.d()) throw ValidationError("state dimension does not match space");
    const auto hidden = mj.at("hidden").get<Index>();
    Checkpoint ck{params_from(meta, hidden, j.at("params")), std::nullopt};
    if (j.contains("training")) {
      const json& t = j.at("training");
      TrainState st;
      st.best = ck.params;
      st.current = params_from(meta, hidden, t.at("current"));
      st.best_loss = t.contains("best_loss") ? t.at("best_loss").get<double>() : std::numeric_limits<double>::infinity();
      const auto np = static_cast<std::size_t>(ck.params.parameter_count());
      const auto m = doubles(t.at("adam").at("m"), "adam.m", np);
      const auto v = doubles(t.at("adam").at("v"), "adam.v", np);
      st.adam.m = Eigen::Map<const Vector>(m.data(), static_cast<Index>(np));
      st.adam.v = Eigen::Map<const Vector>(v.data(), static_cast<Index>(np));
      st.adam.t = t.at("adam").at("t").get<std::uint64_t>();
      const json& h = t.at("history");
      const auto epochs = t.at("epochs_completed").get<std::size_t>();
      st.history.train_loss = doubles(h.at("train_loss"), "train_loss", epochs);
      st.history.heldout_loss = doubles(h.at("heldout_loss"), "heldout_loss", epochs);
      st.history.phi_neighbor = doubles(h.at("phi_neighbor"), "phi_neighbor", epochs);
      st.history.phi_wall = doubles(h.at("phi_wall"), "phi_wall", epochs);
      st.history.seconds.assign(epochs, 0.0);
      ck.state = std::move(st);
    }
    return ck;
  } catch (const json::exception& e) {
    throw ValidationError(origin + ": " + e.what());
  } catch (const ValidationError& e) {
    throw ValidationError(origin + ": " + e.what());
  }
}

void save_checkpoint(const std::string& path, const ControllerParams& best, const TrainState* state) {
  write_file(path, emit_checkpoint(best, state));
}

Checkpoint load_checkpoint(const std::string& path) { return parse_checkpoint(read_file(path), path); }

// ---- datasets -------------------------------------------------------------------

std::string emit_manifest(const Dataset& ds) {
  const DatasetSpec& s = ds.spec;
  json j;
  j["format"] = "swarmlearn-manifest";
  j["version"] = 1;
  j["spec"] = {{"space", std::string(to_string(s.space))},
               {"n", s.n},
               {"traj_count", s.traj_count},
               {"train_count", s.train_count},
               {"steps", s.steps},
               {"discard", s.discard},
               {"dt", s.dt},
               {"noise_var", s.noise_var},
               {"seed", s.seed}};
  json list = json::array();
  for (const DatasetEntry& e : ds.entries)
    list.push_back({{"file", e.name},
                    {"split", e.train ? "train" : "test"},
                    {"init_stream", e.init_stream},
                    {"noise_stream", e.noise_stream},
                    {"noise_var", e.noise_var}});
  j["trajectories"] = std::move(list);
  return j.dump(1) + "\n";
}

Manifest parse_manifest(const std::string& text, const std::string& origin) {
  try {
    const json j = json::parse(text);
    if (j.value("format", "") != "swarmlearn-manifest") throw ValidationError("not a swarmlearn manifest");
    const json& s = j.at("spec");
    Manifest m;
    m.spec.space = parse_space(s.at("space").get<std::string>());
    m.spec.n = s.at("n").get<Index>();
    m.spec.traj_count = s.at("traj_count").get<std::size_t>();
    m.spec.train_count = s.at("train_count").get<std::size_t>();
    m.spec.steps = s.at("steps").get<std::size_t>();
    m.spec.discard = s.at("discard").get<std::size_t>();
    m.spec.dt = s.at("dt").get<double>();
    m.spec.noise_var = s.at("noise_var").get<double>();
    m.spec.seed = s.at("seed").get<std::uint64_t>();
    m.spec.boids.dt = m.spec.dt;
    for (const json& e : j.at("trajectories")) {
      DatasetEntry d;
      d.name = e.at("file").get<std::string>();
      const auto split = e.at("split").get<std::string>();
      if (split != "train" && split != "test") throw ValidationError("bad split '" + split + "'");
      d.train = split == "train";
      d.init_stream = e.at("init_stream").get<std::uint64_t>();
      d.noise_stream = e.at("noise_stream").get<std::uint64_t>();
      d.noise_var = e.at("noise_var").get<double>();
      m.entries.push_back(std::move(d));
    }
    return m;
  } catch (const json::exception& e) {
    throw ValidationError(origin + ": " + e.what());
  } catch (const ValidationError& e) {
    throw ValidationError(origin + ": " + e.what());
  }
}

void save_dataset(const std::string& dir, const Dataset& ds) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  for (std::size_t k = 0; k < ds.trajectories.size(); ++k)
    save_trajectory((fs::path(dir) / ds.entries[k].name).string(), ds.trajectories[k]);
  write_file((fs::path(dir) / kManifestName).string(), emit_manifest(ds));
}

Dataset load_dataset(const std::string& dir) {
  namespace fs = std::filesystem;
  const fs::path manifest = fs::path(dir) / kManifestName;
  if (!fs::exists(manifest)) throw ValidationError("no " + std::string(kManifestName) + " in '" + dir + "'");
  Manifest m = parse_manifest(read_file(manifest.string()), manifest.string());
  Dataset ds;
  ds.spec = m.spec;
  ds.entries = std::move(m.entries);
  for (const DatasetEntry& e : ds.entries) {
    Trajectory t = load_trajectory((fs::path(dir) / e.name).string());
    if (t.space != ds.spec.space || t.robots() != ds.spec.n)
      throw ValidationError(e.name + ": trajectory does not match the manifest");
    ds.trajectories.push_back(std::move(t));
  }
  return ds;
}

void write_history_csv(std::ostream& out, const TrainHistory& h) {
  out << "epoch,train_loss,heldout_loss,best_heldout_loss,phi_neighbor,phi_wall\n";
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t e = 0; e < h.epochs(); ++e) {
    best = std::min(best, h.heldout_loss[e]);
    out << e << ',' << format_double(h.train_loss[e]) << ',' << format_double(h.heldout_loss[e]) << ','
        << format_double(best) << ',' << format_double(h.phi_neighbor[e]) << ',' << format_double(h.phi_wall[e])
        << '\n';
  }
}

}  // namespace swarmlearn
