// swarmlearn command line: dataset generation, training, evaluation,
// grid search, scaling studies and plotting.
//
// Exit codes: 0 success, 2 invalid input, 3 numerical failure.

#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <omp.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <CLI11.hpp>
#include <json.hpp>

#include "swarmlearn/config.hpp"
#include "swarmlearn/io.hpp"
#include "swarmlearn/metrics.hpp"
#include "swarmlearn/plot.hpp"
#include "swarmlearn/trainer.hpp"

namespace fs = std::filesystem;
using namespace swarmlearn;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitNumerical = 3;

// Network initialization stream; training shuffles use their own streams.
constexpr std::uint64_t kInitStream = 0x1417;

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("swarmlearn");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  spdlog::set_level(spdlog::level::info);
  if (const char* env = std::getenv("SWARMLEARN_LOG")) {
    const auto level = spdlog::level::from_str(env);
    // from_str maps unknown names to off; only accept the explicit spelling.
    if (level != spdlog::level::off || std::string(env) == "off")
      spdlog::set_level(level);
    else
      spdlog::warn("ignoring unknown SWARMLEARN_LOG level '{}'", env);
  }
}

void set_jobs(std::optional<int> jobs) {
  if (!jobs) return;
  if (*jobs < 1) throw ValidationError("--jobs must be >= 1");
  omp_set_num_threads(*jobs);
}

std::string csv_join(const std::vector<std::string>& cells) {
  std::string out;
  for (std::size_t i = 0; i < cells.size(); ++i) out += (i ? "," : "") + cells[i];
  return out + "\n";
}

std::string fmt(double v) { return format_double(v); }

std::vector<double> index_axis(std::size_t m, double dt) {
  std::vector<double> t(m);
  for (std::size_t j = 0; j < m; ++j) t[j] = static_cast<double>(j) * dt;
  return t;
}

ExperimentConfig config_for_data(const std::string& config_path, const std::string& data_dir) {
  if (!config_path.empty()) return load_config(config_path);
  const fs::path fallback = fs::path(data_dir) / "config.yaml";
  if (!fs::exists(fallback)) throw ValidationError("no --config given and no config.yaml in '" + data_dir + "'");
  return load_config(fallback.string());
}

void check_compatible(const ControllerParams& p, const Dataset& ds) {
  if (p.meta.space != ds.spec.space)
    throw ValidationError("model is " + std::string(to_string(p.meta.space)) + " but dataset is " +
                          std::string(to_string(ds.spec.space)));
  for (const Trajectory& t : ds.trajectories)
    if (t.dim() != p.meta.d()) throw ValidationError("trajectory state dimension does not match the model");
}

// Runs f(i) for i in [0, count) in parallel and rethrows the first failure.
template <class F>
void parallel_for(std::size_t count, F&& f) {
  std::vector<std::exception_ptr> errors(count);
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < count; ++i) {
    try {
      f(i);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

struct RolloutMetrics {
  std::vector<double> truth_avd, pred_avd, truth_amd, pred_amd;
  std::optional<double> kld;
  Vector truth_pod, pred_pod;
  Trajectory pred;
};

constexpr Index kPodModes = 10;

RolloutMetrics evaluate_rollout(const ControllerParams& p, const Trajectory& truth) {
  RolloutMetrics r;
  r.pred = predict_rollout(p, truth.snapshots.front(), truth.length() - 1, truth.dt);
  if (truth.space == Space::planar) {
    r.truth_avd = avd(truth);
    r.pred_avd = avd(r.pred);
  }
  r.truth_amd = amd(truth);
  r.pred_amd = amd(r.pred);
  if (truth.space == Space::spatial) {
    const Index modes = std::min<Index>(kPodModes, static_cast<Index>(truth.length()));
    r.truth_pod = pod_energies(truth, modes);
    r.pred_pod = pod_energies(r.pred, modes);
    r.kld = pod_kld(r.pred, truth, modes);
  }
  return r;
}

ControllerParams initial_params(const ExperimentConfig& cfg) {
  return ControllerParams::initialize(cfg.controller_meta(), cfg.hidden, {cfg.train_seed, kInitStream});
}

// ---- generate ---------------------------------------------------------------

struct GenerateArgs {
  std::string config, out;
  std::optional<std::uint64_t> seed;
};

int run_generate(const GenerateArgs& a) {
  ExperimentConfig cfg = load_config(a.config);
  if (a.seed) cfg.seed = *a.seed;
  spdlog::info("generating {} {} trajectories of {} robots", cfg.traj_count, to_string(cfg.space), cfg.n);
  const Dataset ds = generate_dataset(cfg.dataset_spec());
  save_dataset(a.out, ds);
  write_file((fs::path(a.out) / "config.yaml").string(), emit_config(cfg));
  spdlog::info("wrote {} files to {}", ds.trajectories.size(), a.out);
  return kExitOk;
}

// ---- train ------------------------------------------------------------------

struct TrainArgs {
  std::string data, config, out, resume;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> epochs;
};

fs::path sibling(const fs::path& model, const std::string& suffix) {
  fs::path p = model;
  p.replace_extension(suffix);
  return p;
}

int run_train(const TrainArgs& a) {
  ExperimentConfig cfg = config_for_data(a.config, a.data);
  if (a.seed) cfg.train_seed = *a.seed;
  if (a.epochs) cfg.epochs = *a.epochs;
  cfg.validate();
  const Dataset ds = load_dataset(a.data);
  if (ds.spec.space != cfg.space) throw ValidationError("config space does not match the dataset");

  ControllerParams init = initial_params(cfg);
  std::optional<TrainState> resume;
  if (!a.resume.empty()) {
    Checkpoint ck = load_checkpoint(a.resume);
    if (!ck.state) throw ValidationError(a.resume + ": checkpoint holds no training state to resume");
    if (ck.params.parameter_count() != init.parameter_count() || ck.params.meta.space != cfg.space)
      throw ValidationError(a.resume + ": checkpoint does not match the configured model");
    resume = std::move(ck.state);
    init = resume->current;
  }
  check_compatible(init, ds);

  TrainConfig tc = cfg.train_config();
  // Epoch counts are totals; a resumed run only adds the missing ones.
  const std::size_t done = resume ? resume->history.epochs() : 0;
  tc.epochs = cfg.epochs > done ? cfg.epochs - done : 0;

  const std::vector<Trajectory> train_set = ds.train(), test_set = ds.test();
  spdlog::info("training on {} trajectories, {} held out, epochs {}..{}", train_set.size(), test_set.size(), done,
               done + tc.epochs);
  TrainResult result;
  if (tc.epochs == 0) {
    result = {resume->best, resume->history, *resume};
  } else {
    result = train(tc, init, train_set, test_set, resume ? &*resume : nullptr,
                   [](std::size_t e, const TrainHistory& h) {
                     spdlog::info("epoch {:4d}  train {:.6g}  heldout {:.6g}", e, h.train_loss.back(),
                                  h.heldout_loss.back());
                   });
  }

  const fs::path model(a.out);
  if (model.has_parent_path()) fs::create_directories(model.parent_path());
  save_checkpoint(model.string(), result.params, &result.state);
  std::ostringstream hist;
  write_history_csv(hist, result.history);
  write_file(sibling(model, ".history.csv").string(), hist.str());

  std::ostringstream timing;
  timing << "epoch,seconds\n";
  for (std::size_t e = 0; e < result.history.seconds.size(); ++e)
    timing << e << ',' << fmt(result.history.seconds[e]) << '\n';
  write_file(sibling(model, ".timing.csv").string(), timing.str());
  spdlog::info("best held-out loss {:.6g}; wrote {}", result.state.best_loss, model.string());
  return kExitOk;
}

// ---- eval -------------------------------------------------------------------

struct EvalArgs {
  std::string model, data, out;
  std::size_t window = 10;
  bool plots = true;
  std::optional<std::uint64_t> seed;
};

int run_eval(const EvalArgs& a) {
  const ControllerParams p = load_checkpoint(a.model).params;
  const Dataset ds = load_dataset(a.data);
  check_compatible(p, ds);
  std::vector<Trajectory> test = ds.test();
  std::vector<std::string> names;
  for (const DatasetEntry& e : ds.entries)
    if (!e.train) names.push_back(e.name);
  if (test.empty()) throw ValidationError(a.data + ": dataset has no test trajectories");
  const std::size_t m = test.front().length();
  for (const Trajectory& t : test)
    if (t.length() != m) throw ValidationError("test trajectories differ in length");

  std::vector<RolloutMetrics> runs(test.size());
  parallel_for(test.size(), [&](std::size_t r) { runs[r] = evaluate_rollout(p, test[r]); });

  fs::create_directories(a.out);
  const bool planar = p.meta.space == Space::planar;
  auto band = [&](auto member) {
    std::vector<std::vector<double>> s;
    for (const RolloutMetrics& r : runs) s.push_back(r.*member);
    return confidence_band(s);
  };
  std::optional<SeriesBand> ta, pa;
  if (planar) ta = band(&RolloutMetrics::truth_avd), pa = band(&RolloutMetrics::pred_avd);
  const SeriesBand tm = band(&RolloutMetrics::truth_amd), pm = band(&RolloutMetrics::pred_amd);

  std::ostringstream series;
  std::vector<std::string> head = {"step", "time"};
  if (planar)
    for (const char* c : {"truth_avd_mean", "truth_avd_lo", "truth_avd_hi", "pred_avd_mean", "pred_avd_lo", "pred_avd_hi"})
      head.push_back(c);
  for (const char* c : {"truth_amd_mean", "truth_amd_lo", "truth_amd_hi", "pred_amd_mean", "pred_amd_lo", "pred_amd_hi"})
    head.push_back(c);
  series << csv_join(head);
  const std::vector<double> time = index_axis(m, test.front().dt);
  for (std::size_t j = 0; j < m; ++j) {
    std::vector<std::string> row = {std::to_string(j), fmt(time[j])};
    auto push = [&](const SeriesBand& b) {
      row.push_back(fmt(b.mean[j]));
      row.push_back(fmt(b.lower[j]));
      row.push_back(fmt(b.upper[j]));
    };
    if (planar) push(*ta), push(*pa);
    push(tm), push(pm);
    series << csv_join(row);
  }
  write_file((fs::path(a.out) / "series.csv").string(), series.str());

  std::ostringstream per_run;
  per_run << (planar ? "run,file,truth_avd_tail,pred_avd_tail,truth_amd_tail,pred_amd_tail\n"
                     : "run,file,truth_amd_tail,pred_amd_tail,pod_kld\n");
  std::vector<double> pred_avd_tail, pred_amd_tail, klds;
  for (std::size_t r = 0; r < runs.size(); ++r) {
    const RolloutMetrics& x = runs[r];
    std::vector<std::string> row = {std::to_string(r), names[r]};
    if (planar) {
      row.push_back(fmt(tail_mean(x.truth_avd, a.window)));
      row.push_back(fmt(tail_mean(x.pred_avd, a.window)));
      pred_avd_tail.push_back(tail_mean(x.pred_avd, a.window));
    }
    row.push_back(fmt(tail_mean(x.truth_amd, a.window)));
    row.push_back(fmt(tail_mean(x.pred_amd, a.window)));
    pred_amd_tail.push_back(tail_mean(x.pred_amd, a.window));
    if (x.kld) row.push_back(fmt(*x.kld)), klds.push_back(*x.kld);
    per_run << csv_join(row);
  }
  write_file((fs::path(a.out) / "runs.csv").string(), per_run.str());

  if (!planar) {
    std::ostringstream pod;
    pod << "run,mode,truth_energy,pred_energy\n";
    for (std::size_t r = 0; r < runs.size(); ++r)
      for (Index q = 0; q < runs[r].truth_pod.size(); ++q)
        pod << r << ',' << q << ',' << fmt(runs[r].truth_pod[q]) << ',' << fmt(runs[r].pred_pod[q]) << '\n';
    write_file((fs::path(a.out) / "pod.csv").string(), pod.str());
  }

  std::ostringstream summary;
  summary << "key,value\n"
          << "space," << to_string(p.meta.space) << '\n'
          << "runs," << runs.size() << '\n'
          << "tail_window," << a.window << '\n'
          << "seed," << (a.seed ? *a.seed : ds.spec.seed) << '\n';
  auto stat = [&](const char* key, const std::vector<double>& v) {
    if (v.empty()) return;
    const BoxStats b = box_stats(v);
    double mean = 0.0;
    for (double x : v) mean += x;
    summary << key << "_mean," << fmt(mean / static_cast<double>(v.size())) << '\n'
            << key << "_median," << fmt(b.median) << '\n';
  };
  stat("pred_avd_tail", pred_avd_tail);
  stat("pred_amd_tail", pred_amd_tail);
  stat("pod_kld", klds);
  write_file((fs::path(a.out) / "summary.csv").string(), summary.str());

  if (a.plots) {
    auto series_of = [&](const std::string& label, const SeriesBand& b) {
      return LineSeries{label, time, b.mean, b.lower, b.upper};
    };
    if (planar)
      write_file((fs::path(a.out) / "avd.svg").string(),
                 svg_line_plot({series_of("ground truth", *ta), series_of("learnt", *pa)},
                               {"average velocity difference", "time", "avd", true}));
    write_file((fs::path(a.out) / "amd.svg").string(),
               svg_line_plot({series_of("ground truth", tm), series_of("learnt", pm)},
                             {"average minimum distance", "time", "amd", false}));
    write_file((fs::path(a.out) / "rollout_000.svg").string(),
               svg_trajectory(runs.front().pred, {"learnt rollout from " + names.front(), "x", "y", false}));
  }
  spdlog::info("evaluated {} rollouts into {}", runs.size(), a.out);
  return kExitOk;
}

// ---- gridsearch ---------------------------------------------------------------

struct GridArgs {
  std::string config, data, out;
  std::vector<double> dcr;
  std::vector<Index> k;
  std::size_t seeds_per_cell = 20;
  std::size_t window = 10;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> epochs;
};

fs::path cell_file(const fs::path& dir, double d_cr, Index k) {
  return dir / ("cell_k" + std::to_string(k) + "_dcr" + fmt(d_cr) + ".json");
}

int run_gridsearch(const GridArgs& a) {
  ExperimentConfig base = config_for_data(a.config, a.data);
  if (a.seed) base.train_seed = *a.seed;
  if (a.epochs) base.epochs = *a.epochs;
  const Dataset ds = load_dataset(a.data);
  if (ds.spec.space != base.space) throw ValidationError("config space does not match the dataset");
  const std::vector<Trajectory> train_set = ds.train(), test_set = ds.test();
  if (test_set.empty()) throw ValidationError(a.data + ": dataset has no test trajectories");

  GridSpec gs;
  gs.d_cr = a.dcr.empty() ? std::vector<double>{base.d_cr} : a.dcr;
  gs.k = a.k.empty() ? std::vector<Index>{base.k} : a.k;
  gs.seeds_per_cell = std::min(a.seeds_per_cell, test_set.size());
  gs.steps = test_set.front().length() - 1;
  gs.tail_window = a.window;
  gs.validate();

  const fs::path cells = fs::path(a.out) / "cells";
  fs::create_directories(cells);

  const CellPipeline pipeline = [&](double d_cr, Index k) {
    const fs::path file = cell_file(cells, d_cr, k);
    if (fs::exists(file)) {
      const auto j = nlohmann::json::parse(read_file(file.string()));
      spdlog::info("cell k={} d_cr={} restored from {}", k, d_cr, file.string());
      return CellRuns{j.at("avd").get<std::vector<double>>(), j.at("amd").get<std::vector<double>>()};
    }
    ExperimentConfig cfg = base;
    cfg.d_cr = d_cr;
    cfg.k = k;
    cfg.validate();
    const TrainResult res = train(cfg.train_config(), initial_params(cfg), train_set, test_set);
    CellRuns runs;
    for (std::size_t r = 0; r < gs.seeds_per_cell; ++r) {
      const RolloutMetrics x = evaluate_rollout(res.params, test_set[r]);
      if (!x.pred_avd.empty()) runs.avd.push_back(tail_mean(x.pred_avd, gs.tail_window));
      runs.amd.push_back(tail_mean(x.pred_amd, gs.tail_window));
    }
    const nlohmann::json j = {{"d_cr", d_cr}, {"k", k}, {"avd", runs.avd}, {"amd", runs.amd}};
    // Write then rename so an interrupted run never leaves a partial cell.
    const fs::path tmp = file.string() + ".tmp";
    write_file(tmp.string(), j.dump(1) + "\n");
    fs::rename(tmp, file);
    spdlog::info("cell k={} d_cr={} done", k, d_cr);
    return runs;
  };
  const std::vector<CellResult> results = grid_search(gs, pipeline);

  std::ostringstream table;
  table << "k,d_cr,ok,runs,avd_mean,avd_median,amd_mean,amd_median,amd_flagged,error\n";
  for (const CellResult& c : results) {
    table << c.k << ',' << fmt(c.d_cr) << ',' << (c.ok ? 1 : 0) << ',' << c.runs << ',';
    if (c.ok)
      table << fmt(c.avd_mean) << ',' << fmt(c.avd_median) << ',' << fmt(c.amd_mean) << ',' << fmt(c.amd_median)
            << ',' << (c.amd_flagged() ? 1 : 0) << ",\n";
    else
      table << ",,,,,\"" << c.error << "\"\n";
  }
  write_file((fs::path(a.out) / "grid.csv").string(), table.str());

  // Matrices: rows k, columns d_cr.
  std::vector<std::string> rows, cols;
  for (Index k : gs.k) rows.push_back(std::to_string(k));
  for (double d : gs.d_cr) cols.push_back(fmt(d));
  auto matrix = [&](const char* name, auto value, std::optional<double> flag) {
    std::ostringstream out;
    out << "k\\d_cr," << csv_join(cols);
    Heatmap hm{rows, cols, {}, flag};
    for (std::size_t r = 0; r < gs.k.size(); ++r) {
      out << rows[r];
      for (std::size_t c = 0; c < gs.d_cr.size(); ++c) {
        const CellResult& cell = results[r * gs.d_cr.size() + c];
        const std::optional<double> v = cell.ok ? std::optional<double>(value(cell)) : std::nullopt;
        out << ',' << (v ? fmt(*v) : "");
        hm.values.push_back(v);
      }
      out << '\n';
    }
    write_file((fs::path(a.out) / (std::string("grid_") + name + ".csv")).string(), out.str());
    write_file((fs::path(a.out) / (std::string("grid_") + name + ".svg")).string(),
               svg_heatmap(hm, {std::string("grid search: ") + name, "d_cr", "k", false}));
  };
  if (base.space == Space::planar) matrix("avd_mean", [](const CellResult& c) { return c.avd_mean; }, std::nullopt);
  matrix("amd_mean", [](const CellResult& c) { return c.amd_mean; }, CellResult::kAmdFlag);
  matrix("amd_median", [](const CellResult& c) { return c.amd_median; }, CellResult::kAmdFlag);

  std::size_t failed = 0;
  for (const CellResult& c : results) failed += !c.ok;
  if (failed) spdlog::warn("{} of {} cells failed; see grid.csv", failed, results.size());
  return kExitOk;
}

// ---- scale --------------------------------------------------------------------

struct ScaleArgs {
  std::string model, out;
  std::vector<Index> sizes = {10, 30, 50, 70, 90};
  std::size_t runs = 15;
  std::size_t steps = 2000;
  std::optional<double> dt;
  std::size_t window = 10;
  std::uint64_t seed = 0;
  std::vector<Index> export_sizes;
};

int run_scale(const ScaleArgs& a) {
  const ControllerParams p = load_checkpoint(a.model).params;
  const bool planar = p.meta.space == Space::planar;
  const double dt = a.dt.value_or(planar ? 0.01 : 0.02);
  if (a.runs < 1 || a.steps < 1) throw ValidationError("--runs and --steps must be positive");
  const std::vector<ScalingRow> rows = scaling_eval(p, a.sizes, a.runs, a.steps, dt, a.window, a.seed);
  fs::create_directories(a.out);

  std::ostringstream box, raw;
  box << "size,metric,count,min,q1,median,q3,max\n";
  raw << "size,run" << (planar ? ",avd_tail" : "") << ",amd_tail\n";
  std::vector<BoxGroup> avd_groups, amd_groups;
  for (const ScalingRow& r : rows) {
    auto line = [&](const char* metric, const BoxStats& b) {
      box << r.size << ',' << metric << ',' << b.count << ',' << fmt(b.min) << ',' << fmt(b.q1) << ','
          << fmt(b.median) << ',' << fmt(b.q3) << ',' << fmt(b.max) << '\n';
    };
    if (planar) line("avd", r.avd), avd_groups.push_back({std::to_string(r.size), r.avd});
    line("amd", r.amd);
    amd_groups.push_back({std::to_string(r.size), r.amd});
    for (std::size_t q = 0; q < r.amd_tail.size(); ++q) {
      raw << r.size << ',' << q;
      if (planar) raw << ',' << fmt(r.avd_tail[q]);
      raw << ',' << fmt(r.amd_tail[q]) << '\n';
    }
  }
  write_file((fs::path(a.out) / "scale.csv").string(), box.str());
  write_file((fs::path(a.out) / "scale_runs.csv").string(), raw.str());
  if (planar)
    write_file((fs::path(a.out) / "avd_box.svg").string(),
               svg_box_plot(avd_groups, {"avd over the final window", "swarm size", "avd", false}));
  write_file((fs::path(a.out) / "amd_box.svg").string(),
             svg_box_plot(amd_groups, {"amd over the final window", "swarm size", "amd", false}));

  // Qualitative rollouts: run 0 of each requested size.
  for (Index n : a.export_sizes) {
    if (n < 2) throw ValidationError("--export sizes must be >= 2");
    const RngSpec rng{a.seed, 1000003ull * static_cast<std::uint64_t>(n)};
    const SwarmState z0 = planar ? init_2d_swarm(n, rng)
                                 : init_3d_swarm(n, rng, 5.0 * std::cbrt(static_cast<double>(n) / 10.0));
    const Trajectory t = predict_rollout(p, z0, a.steps, dt);
    const std::string stem = "rollout_n" + std::to_string(n);
    save_trajectory((fs::path(a.out) / (stem + ".csv")).string(), t);
    write_file((fs::path(a.out) / (stem + ".svg")).string(),
               svg_trajectory(t, {"learnt controller, " + std::to_string(n) + " robots", "x", "y", false}));
  }
  spdlog::info("scaling study over {} sizes written to {}", rows.size(), a.out);
  return kExitOk;
}

// ---- plot ---------------------------------------------------------------------

struct PlotArgs {
  std::string input, out, title, x_column;
  std::vector<std::string> columns;
  bool log_y = false;
};

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

int run_plot(const PlotArgs& a) {
  const std::string text = read_file(a.input);
  const std::string title = a.title.empty() ? fs::path(a.input).filename().string() : a.title;
  if (text.rfind("# swarmlearn-traj", 0) == 0) {
    std::istringstream in(text);
    write_file(a.out, svg_trajectory(read_trajectory(in, a.input), {title, "x", "y", false}));
    return kExitOk;
  }
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw ValidationError(a.input + ": empty file");
  const std::vector<std::string> header = split_csv(line);
  std::vector<std::vector<double>> cols(header.size());
  std::vector<bool> numeric(header.size(), true);
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != header.size())
      throw ValidationError(a.input + ":" + std::to_string(lineno) + ": expected " + std::to_string(header.size()) +
                            " columns");
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (!numeric[c]) continue;
      try {
        cols[c].push_back(parse_double(cells[c]));
      } catch (const ValidationError&) {
        numeric[c] = false;
      }
    }
  }
  auto column = [&](const std::string& name) {
    for (std::size_t c = 0; c < header.size(); ++c)
      if (header[c] == name) return c;
    throw ValidationError(a.input + ": no column '" + name + "'");
  };
  const std::size_t xc = a.x_column.empty() ? 0 : column(a.x_column);
  if (!numeric[xc]) throw ValidationError(a.input + ": x column '" + header[xc] + "' is not numeric");
  std::vector<std::size_t> ys;
  if (a.columns.empty()) {
    for (std::size_t c = 0; c < header.size(); ++c)
      if (c != xc && numeric[c]) ys.push_back(c);
  } else {
    for (const std::string& name : a.columns) {
      const std::size_t c = column(name);
      if (!numeric[c]) throw ValidationError(a.input + ": column '" + name + "' is not numeric");
      ys.push_back(c);
    }
  }
  if (ys.empty()) throw ValidationError(a.input + ": nothing numeric to plot");
  std::vector<LineSeries> series;
  for (std::size_t c : ys) series.push_back({header[c], cols[xc], cols[c], {}, {}});
  write_file(a.out, svg_line_plot(series, {title, header[xc], "", a.log_y}));
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"swarmlearn: learn decentralized swarm controllers from trajectories"};
  app.require_subcommand(1);
  std::optional<int> jobs;
  app.add_option("--jobs", jobs, "worker threads (default: OpenMP default)");

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate", "simulate a ground-truth dataset");
  g->add_option("--config", gen.config, "experiment config (YAML)")->required();
  g->add_option("--out", gen.out, "output directory")->required();
  g->add_option("--seed", gen.seed, "override the data seed");

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "fit a controller to a dataset");
  t->add_option("--data", tr.data, "dataset directory")->required();
  t->add_option("--config", tr.config, "experiment config (default: <data>/config.yaml)");
  t->add_option("--out", tr.out, "checkpoint path")->required();
  t->add_option("--resume", tr.resume, "continue from a checkpoint");
  t->add_option("--epochs", tr.epochs, "total epochs (overrides train.epochs)");
  t->add_option("--seed", tr.seed, "override train.seed");

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "roll out a controller from the test initial conditions");
  e->add_option("--model", ev.model, "checkpoint")->required();
  e->add_option("--data", ev.data, "dataset directory")->required();
  e->add_option("--out", ev.out, "output directory")->required();
  e->add_option("--window", ev.window, "tail window for final metrics")->capture_default_str();
  e->add_flag("!--no-plots", ev.plots, "skip SVG output");
  e->add_option("--seed", ev.seed, "recorded in the summary; rollouts are deterministic");

  GridArgs gr;
  auto* s = app.add_subcommand("gridsearch", "train and evaluate over a d_cr x k grid");
  s->add_option("--config", gr.config, "experiment config (default: <data>/config.yaml)");
  s->add_option("--data", gr.data, "dataset directory")->required();
  s->add_option("--out", gr.out, "output directory")->required();
  s->add_option("--dcr", gr.dcr, "communication radii")->delimiter(',');
  s->add_option("--k", gr.k, "neighbor counts")->delimiter(',');
  s->add_option("--seeds-per-cell", gr.seeds_per_cell, "test initial conditions per cell")->capture_default_str();
  s->add_option("--window", gr.window, "tail window")->capture_default_str();
  s->add_option("--epochs", gr.epochs, "override train.epochs");
  s->add_option("--seed", gr.seed, "override train.seed");

  ScaleArgs sc;
  auto* c = app.add_subcommand("scale", "evaluate a controller across swarm sizes");
  c->add_option("--model", sc.model, "checkpoint")->required();
  c->add_option("--out", sc.out, "output directory")->required();
  c->add_option("--sizes", sc.sizes, "swarm sizes")->delimiter(',')->capture_default_str();
  c->add_option("--runs", sc.runs, "runs per size")->capture_default_str();
  c->add_option("--steps", sc.steps, "rollout steps")->capture_default_str();
  c->add_option("--dt", sc.dt, "step size (default 0.01 in 2d, 0.02 in 3d)");
  c->add_option("--window", sc.window, "tail window")->capture_default_str();
  c->add_option("--seed", sc.seed, "initial-condition seed")->capture_default_str();
  c->add_option("--export", sc.export_sizes, "also save run 0 of these sizes as trajectories")->delimiter(',');

  PlotArgs pl;
  auto* p = app.add_subcommand("plot", "render a CSV or trajectory file as SVG");
  p->add_option("--input", pl.input, "CSV or trajectory file")->required();
  p->add_option("--out", pl.out, "SVG path")->required();
  p->add_option("--title", pl.title, "plot title");
  p->add_option("--x", pl.x_column, "x column (default: first)");
  p->add_option("--columns", pl.columns, "y columns (default: all numeric)")->delimiter(',');
  p->add_flag("--log-y", pl.log_y, "logarithmic y axis");
  std::optional<std::uint64_t> plot_seed;
  p->add_option("--seed", plot_seed, "accepted for uniformity; plotting draws no random numbers");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    set_jobs(jobs);
    if (*g) return run_generate(gen);
    if (*t) return run_train(tr);
    if (*e) return run_eval(ev);
    if (*s) return run_gridsearch(gr);
    if (*c) return run_scale(sc);
    if (*p) return run_plot(pl);
  } catch (const ValidationError& err) {
    spdlog::error("{}", err.what());
    return kExitValidation;
  } catch (const NumericalError& err) {
    spdlog::error("{}", err.what());
    return kExitNumerical;
  } catch (const fs::filesystem_error& err) {
    spdlog::error("{}", err.what());
    return kExitValidation;
  } catch (const nlohmann::json::exception& err) {
    spdlog::error("{}", err.what());
    return kExitValidation;
  } catch (const std::exception& err) {
    spdlog::error("unexpected failure: {}", err.what());
    return 1;
  }
  return kExitOk;
}
