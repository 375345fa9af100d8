"""End-to-end checks of the swarmlearn command line: exit codes, byte-level
reproducibility, resume behavior and the shape of every emitted file."""
import csv
import filecmp
import json
import os
import shutil
import subprocess
import sys
import xml.etree.ElementTree as ET

CLI = sys.argv[1]
WORK = os.path.abspath(sys.argv[2])

CONFIG_2D = """space: 2d
n: 4
steps: 60
traj_count: 4
train_count: 2
hidden: 16
seed: 3
train:
  lr: 0.003
  epochs: 2
  batch_size: 16
  seed: 1
"""

CONFIG_3D = """space: 3d
n: 4
steps: 30
discard: 5
traj_count: 3
train_count: 1
hidden: 8
train:
  epochs: 1
  batch_size: 16
"""

failures = []


def check(cond, what):
    print(("ok   " if cond else "FAIL ") + what)
    if not cond:
        failures.append(what)


def run(*args, env=None):
    e = dict(os.environ)
    e.pop("SWARMLEARN_LOG", None)
    if env:
        e.update(env)
    return subprocess.run([CLI, *args], capture_output=True, text=True, env=e)


def path(*parts):
    return os.path.join(WORK, *parts)


def write(p, text):
    with open(p, "w") as f:
        f.write(text)


def read_csv(p):
    with open(p) as f:
        return list(csv.DictReader(f))


def same_tree(a, b):
    cmp = filecmp.dircmp(a, b)
    if cmp.left_only or cmp.right_only or cmp.funny_files:
        return False
    _, mismatch, errors = filecmp.cmpfiles(a, b, cmp.common_files, shallow=False)
    return not mismatch and not errors


def well_formed_svg(p):
    try:
        return ET.parse(p).getroot().tag == "{http://www.w3.org/2000/svg}svg"
    except ET.ParseError:
        return False


def ok(r, what):
    check(r.returncode == 0, f"{what} exits 0")
    if r.returncode != 0:
        print(r.stderr)


def main():
    shutil.rmtree(WORK, ignore_errors=True)
    os.makedirs(WORK)
    write(path("c2.yaml"), CONFIG_2D)
    write(path("c3.yaml"), CONFIG_3D)

    # generate
    ok(run("generate", "--config", path("c2.yaml"), "--out", path("data")), "generate")
    manifest = json.load(open(path("data", "manifest.json")))
    check(len(manifest["trajectories"]) == 4, "manifest lists 4 trajectories")
    check(sum(t["split"] == "train" for t in manifest["trajectories"]) == 2, "2 training trajectories")
    ok(run("generate", "--config", path("c2.yaml"), "--out", path("data_again")), "second generate")
    check(same_tree(path("data"), path("data_again")), "regenerating gives byte-identical files")
    ok(run("generate", "--config", path("c2.yaml"), "--out", path("data_seed"), "--seed", "99"), "generate --seed")
    check(not same_tree(path("data"), path("data_seed")), "--seed changes the dataset")
    check("seed: 99" in open(path("data_seed", "config.yaml")).read(), "--seed is recorded in config.yaml")

    write(path("bad.yaml"), "space: 2d\nn: 4\nstepz: 10\n")
    r = run("generate", "--config", path("bad.yaml"), "--out", path("nope"))
    check(r.returncode == 2, "unknown config key exits 2")
    check("bad.yaml:3:" in r.stderr and "stepz" in r.stderr, "error names file, line and key")
    r = run("generate", "--config", path("missing.yaml"), "--out", path("nope"))
    check(r.returncode == 2, "missing config exits 2")
    r = run("generate", "--out", path("nope"))
    check(r.returncode == 2, "missing required flag exits 2")

    write(path("blowup.yaml"), "space: 2d\nn: 4\nsteps: 400\ndt: 5\ntraj_count: 2\ntrain_count: 1\n")
    r = run("generate", "--config", path("blowup.yaml"), "--out", path("blowup"))
    check(r.returncode == 3, "diverging ground-truth simulation exits 3")

    # train
    ok(run("train", "--data", path("data"), "--out", path("m", "model.json")), "train")
    ok(run("train", "--data", path("data"), "--out", path("m2", "model.json")), "second train")
    check(filecmp.cmp(path("m", "model.json"), path("m2", "model.json"), shallow=False),
          "retraining gives a byte-identical checkpoint")
    check(filecmp.cmp(path("m", "model.history.csv"), path("m2", "model.history.csv"), shallow=False),
          "retraining gives an identical history")
    ok(run("--jobs", "3", "train", "--data", path("data"), "--out", path("m3", "model.json")), "train --jobs 3")
    check(filecmp.cmp(path("m", "model.json"), path("m3", "model.json"), shallow=False),
          "thread count does not change the checkpoint")
    hist = read_csv(path("m", "model.history.csv"))
    check([h["epoch"] for h in hist] == ["0", "1"], "history has one row per epoch")
    best = [float(h["best_heldout_loss"]) for h in hist]
    check(all(b2 <= b1 for b1, b2 in zip(best, best[1:])), "best held-out loss is non-increasing")
    check(os.path.exists(path("m", "model.timing.csv")), "timing file written")

    ok(run("train", "--data", path("data"), "--out", path("r", "model.json"), "--epochs", "1"), "train 1 epoch")
    ok(run("train", "--data", path("data"), "--out", path("r", "model.json"), "--resume", path("r", "model.json"),
           "--epochs", "2"), "resume to 2 epochs")
    check([h["epoch"] for h in read_csv(path("r", "model.history.csv"))] == ["0", "1"],
          "resumed run continues the epoch numbering")
    check(filecmp.cmp(path("m", "model.json"), path("r", "model.json"), shallow=False),
          "resumed run equals an uninterrupted run")
    ok(run("train", "--data", path("data"), "--out", path("s", "model.json"), "--seed", "8"), "train --seed")
    check(not filecmp.cmp(path("m", "model.json"), path("s", "model.json"), shallow=False),
          "--seed changes training")

    os.makedirs(path("empty"), exist_ok=True)
    r = run("train", "--data", path("empty"), "--config", path("c2.yaml"), "--out", path("x", "model.json"))
    check(r.returncode == 2, "missing manifest exits 2")
    check("manifest.json" in r.stderr, "missing manifest is named")

    # eval
    ok(run("eval", "--model", path("m", "model.json"), "--data", path("data"), "--out", path("ev")), "eval")
    runs = read_csv(path("ev", "runs.csv"))
    check(len(runs) == 2, "one evaluation row per test trajectory")
    series = read_csv(path("ev", "series.csv"))
    check(len(series) == 61, "series covers every snapshot")
    check(all(float(s["pred_amd_lo"]) <= float(s["pred_amd_mean"]) <= float(s["pred_amd_hi"]) for s in series),
          "confidence band brackets the mean")
    svgs = [f for f in os.listdir(path("ev")) if f.endswith(".svg")]
    check(len(svgs) >= 3 and all(well_formed_svg(path("ev", f)) for f in svgs), "eval plots are well-formed SVG")
    ok(run("eval", "--model", path("m", "model.json"), "--data", path("data"), "--out", path("ev2"), "--no-plots"),
       "eval --no-plots")
    check(not any(f.endswith(".svg") for f in os.listdir(path("ev2"))), "--no-plots writes no SVG")
    check(filecmp.cmp(path("ev", "runs.csv"), path("ev2", "runs.csv"), shallow=False), "eval is deterministic")

    shutil.copytree(path("data"), path("data_notest"))
    m = json.load(open(path("data_notest", "manifest.json")))
    for t in m["trajectories"]:
        t["split"] = "train"
    json.dump(m, open(path("data_notest", "manifest.json"), "w"))
    r = run("eval", "--model", path("m", "model.json"), "--data", path("data_notest"), "--out", path("ev3"))
    check(r.returncode == 2, "empty test set exits 2")

    ok(run("generate", "--config", path("c3.yaml"), "--out", path("data3")), "generate 3d")
    files3 = [t["file"] for t in json.load(open(path("data3", "manifest.json")))["trajectories"]]
    rows = open(path("data3", files3[0])).read().splitlines()
    check(len(rows) == 3 + 25 * 4, "3d trajectory keeps frames after the discard")
    ok(run("train", "--data", path("data3"), "--out", path("m3d", "model.json")), "train 3d")
    ok(run("eval", "--model", path("m3d", "model.json"), "--data", path("data3"), "--out", path("ev3d")), "eval 3d")
    check(os.path.exists(path("ev3d", "pod.csv")), "3d eval writes POD energies")
    check("pod_kld" in open(path("ev3d", "runs.csv")).readline(), "3d runs include POD-KLD")
    r = run("eval", "--model", path("m3d", "model.json"), "--data", path("data"), "--out", path("evx"))
    check(r.returncode == 2, "space mismatch exits 2")

    # gridsearch
    ok(run("gridsearch", "--data", path("data"), "--out", path("g1"), "--dcr", "5", "--k", "6", "--seeds-per-cell",
           "2"), "single-cell gridsearch")
    cell = json.load(open(path("g1", "cells", "cell_k6_dcr5.json")))
    check([float(x["pred_avd_tail"]) for x in runs] == cell["avd"], "single cell avd equals train + eval")
    check([float(x["pred_amd_tail"]) for x in runs] == cell["amd"], "single cell amd equals train + eval")

    ok(run("gridsearch", "--data", path("data"), "--out", path("g"), "--dcr", "2,5", "--k", "2,3"), "2x2 gridsearch")
    grid = read_csv(path("g", "grid.csv"))
    check([(g["k"], g["d_cr"]) for g in grid] == [("2", "2"), ("2", "5"), ("3", "2"), ("3", "5")],
          "grid rows are k-major")
    with open(path("g", "grid_amd_mean.csv")) as f:
        lines = f.read().splitlines()
    check(len(lines) == 3 and lines[0].count(",") == 2, "heatmap table has rows k and columns d_cr")
    first = open(path("g", "grid.csv")).read()
    os.remove(path("g", "cells", "cell_k3_dcr5.json"))
    os.remove(path("g", "grid.csv"))
    r = run("gridsearch", "--data", path("data"), "--out", path("g"), "--dcr", "2,5", "--k", "2,3",
            env={"SWARMLEARN_LOG": "info"})
    ok(r, "resumed gridsearch")
    check(r.stderr.count("restored") == 3, "completed cells are restored")
    check(open(path("g", "grid.csv")).read() == first, "resumed grid equals the uninterrupted grid")
    check(all(well_formed_svg(path("g", f)) for f in os.listdir(path("g")) if f.endswith(".svg")),
          "grid heatmaps are well-formed SVG")

    # scale
    ok(run("scale", "--model", path("m", "model.json"), "--out", path("sc"), "--sizes", "4,6", "--runs", "3",
           "--steps", "20", "--window", "5", "--export", "6"), "scale")
    scale = read_csv(path("sc", "scale.csv"))
    check([(s["size"], s["metric"]) for s in scale] == [("4", "avd"), ("4", "amd"), ("6", "avd"), ("6", "amd")],
          "one box row per size and metric")
    check(len(read_csv(path("sc", "scale_runs.csv"))) == 6, "one raw row per size and run")
    check(os.path.exists(path("sc", "rollout_n6.csv")) and well_formed_svg(path("sc", "rollout_n6.svg")),
          "exported rollout")
    ok(run("scale", "--model", path("m", "model.json"), "--out", path("sc1"), "--sizes", "5", "--runs", "1",
           "--steps", "10", "--window", "3"), "single size and run")
    single = read_csv(path("sc1", "scale.csv"))
    check(len(single) == 2 and all(x["count"] == "1" and x["min"] == x["max"] for x in single),
          "single size/run gives one metrics row per metric")
    ok(run("scale", "--model", path("m", "model.json"), "--out", path("sc2"), "--sizes", "4,6", "--runs", "3",
           "--steps", "20", "--window", "5", "--export", "6"), "scale again")
    check(filecmp.cmp(path("sc", "scale_runs.csv"), path("sc2", "scale_runs.csv"), shallow=False),
          "scale is deterministic")
    r = run("scale", "--model", path("m", "model.json"), "--out", path("sc3"), "--sizes", "1")
    check(r.returncode == 2, "size 1 exits 2")

    # plot
    ok(run("plot", "--input", path("m", "model.history.csv"), "--out", path("loss.svg"), "--x", "epoch",
           "--columns", "train_loss,heldout_loss", "--log-y", "--title", "loss <2d>"), "plot csv")
    check(well_formed_svg(path("loss.svg")), "csv plot is well-formed SVG")
    ok(run("plot", "--input", path("data", manifest["trajectories"][0]["file"]),
           "--out", path("traj.svg")), "plot trajectory")
    check(well_formed_svg(path("traj.svg")), "trajectory plot is well-formed SVG")
    r = run("plot", "--input", path("m", "model.history.csv"), "--out", path("x.svg"), "--columns", "nope")
    check(r.returncode == 2, "unknown plot column exits 2")

    # logging
    r = run("eval", "--model", path("m", "model.json"), "--data", path("data"), "--out", path("ev4"), "--no-plots",
            env={"SWARMLEARN_LOG": "warn"})
    check(r.returncode == 0 and "[info]" not in r.stderr, "SWARMLEARN_LOG=warn silences info lines")

    print(f"{len(failures)} failure(s)")
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
