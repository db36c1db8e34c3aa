"""End-to-end checks of the perfopt command line.

usage: test_cli.py <perfopt executable> <aggregate schema> <work dir>
"""
import csv
import io
import json
import os
import shutil
import subprocess
import sys
import unittest
from pathlib import Path

import jsonschema

EXE, SCHEMA, WORK = sys.argv[1], Path(sys.argv[2]), Path(sys.argv[3])
CONFIGS = Path(__file__).resolve().parents[2] / "configs"
HEADER = "algorithm,trial,seed,samples,theta_norm,metric_name,metric_value,flag"


def run(*args, env=None, check=True):
    full = dict(os.environ)
    full.pop("PERFOPT_JOBS", None)
    full.update(env or {})
    p = subprocess.run([EXE, *args], capture_output=True, text=True, env=full)
    if check and p.returncode != 0:
        raise AssertionError(f"{args} exited {p.returncode}: {p.stderr}")
    return p


def write(name, text):
    path = WORK / name
    path.write_text(text)
    return path


class Cli(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        shutil.rmtree(WORK, ignore_errors=True)
        WORK.mkdir(parents=True)
        cls.schema = json.loads(SCHEMA.read_text())

    def run_config(self, config, out, *extra, env=None):
        run("run", "--config", str(config), "--out", str(WORK / out), *extra, env=env)
        raw = (WORK / out / "results.csv").read_bytes()
        agg = json.loads((WORK / out / "aggregate.json").read_text())
        jsonschema.validate(agg, self.schema)
        return raw, agg

    def test_smoke_config(self):
        raw, agg = self.run_config(CONFIGS / "quadratic_smoke.yaml", "smoke")
        text = raw.decode()
        self.assertTrue(text.startswith(HEADER + "\r\n"))
        self.assertNotIn("\n", text.replace("\r\n", ""))
        rows = list(csv.DictReader(io.StringIO(text, newline="")))
        self.assertEqual([r["algorithm"] for r in rows], ["greedy_sgd", "rrm"])
        self.assertTrue(all(float(r["metric_value"]) >= 0 for r in rows))
        self.assertEqual(agg["scenario"]["certificate"]["verdict"], "strongly_convex")
        self.assertEqual(len(agg["cells"]), 2)

    def test_job_count_does_not_change_output(self):
        base, _ = self.run_config(CONFIGS / "gaussian_scale.yaml", "j1", "--trials", "4", "--jobs", "1")
        three, _ = self.run_config(CONFIGS / "gaussian_scale.yaml", "j3", "--trials", "4", "--jobs", "3")
        env, _ = self.run_config(CONFIGS / "gaussian_scale.yaml", "jenv", "--trials", "4", env={"PERFOPT_JOBS": "2"})
        self.assertEqual(base, three)
        self.assertEqual(base, env)
        self.assertEqual((WORK / "j1" / "aggregate.json").read_bytes(), (WORK / "j3" / "aggregate.json").read_bytes())

    def test_seed_override_changes_output(self):
        a, _ = self.run_config(CONFIGS / "gaussian_scale.yaml", "s1", "--trials", "2", "--seed", "1")
        b, _ = self.run_config(CONFIGS / "gaussian_scale.yaml", "s2", "--trials", "2", "--seed", "2")
        self.assertNotEqual(a, b)

    def test_bad_config_reports_line_and_column(self):
        bad = write("bad.yaml", "scenario: quadratic\nalgorithms:\n  - name: dfo\n    stepsize: 2\n")
        p = run("run", "--config", str(bad), "--out", str(WORK / "bad"), check=False)
        self.assertEqual(p.returncode, 2)
        self.assertIn("bad.yaml:4:5:", p.stderr)
        self.assertIn("stepsize", p.stderr)
        self.assertFalse((WORK / "bad" / "results.csv").exists())

    def test_missing_config_and_bad_jobs(self):
        self.assertEqual(run("run", "--config", str(WORK / "nope.yaml"), check=False).returncode, 2)
        p = run("run", "--config", str(CONFIGS / "quadratic_smoke.yaml"), "--out", str(WORK / "j0"), "--jobs", "0",
                check=False)
        self.assertEqual(p.returncode, 2)
        p = run("run", "--config", str(CONFIGS / "quadratic_smoke.yaml"), "--out", str(WORK / "jx"),
                env={"PERFOPT_JOBS": "many"}, check=False)
        self.assertEqual(p.returncode, 2)

    def test_failed_trials_are_flagged_not_fatal(self):
        cfg = write("tiny.yaml", "scenario: quadratic\ntrials: 2\ncheckpoints: [2, 200]\n"
                                 "evaluation: {method: closed_form}\nalgorithms:\n  - name: two_stage\n")
        raw, agg = self.run_config(cfg, "tiny")
        rows = list(csv.DictReader(io.StringIO(raw.decode(), newline="")))
        small = [r for r in rows if r["samples"] == "2"]
        self.assertTrue(all(r["flag"].startswith("error:") and r["metric_value"] == "" for r in small))
        self.assertIsNone(agg["cells"][0]["median"])
        self.assertEqual(agg["cells"][0]["failed"], 2)
        self.assertEqual(agg["cells"][1]["n"], 2)

    def test_accuracy_metric(self):
        cfg = write("strategic.yaml", "scenario: {id: strategic_classification, params: {d: 3, epsilon: 1}}\n"
                                      "trials: 2\ncheckpoints: [500, 2000]\nevaluation: {samples: 2000}\n"
                                      "algorithms:\n  - name: greedy_sgd\n  - {name: dfo, c0: 1, batch: 50}\n")
        raw, agg = self.run_config(cfg, "strategic")
        self.assertEqual(agg["metric"], "accuracy")
        self.assertEqual(agg["scenario"]["instance"], "per_trial")
        for c in agg["cells"]:
            self.assertTrue(0.0 <= c["median"] <= 1.0)

    def test_other_subcommands(self):
        listing = run("list-scenarios").stdout
        for sid in ("quadratic", "gaussian_scale", "election_linreg", "strategic_classification"):
            self.assertIn(sid, listing)
        cert = json.loads(run("certify", "--scenario", "gaussian_scale", "--param", "epsilon=2").stdout)
        self.assertEqual(cert["lambda"], 1.0)
        self.assertEqual(cert["rule"], "location_scale")
        dom = run("dominance", "--scenario", "gaussian_location", "--probes", "5", "--samples", "2000").stdout
        self.assertIn("yes=5", dom)
        self.assertEqual(run("certify", "--scenario", "nope", check=False).returncode, 2)


if __name__ == "__main__":
    unittest.main(argv=sys.argv[:1], verbosity=2)
