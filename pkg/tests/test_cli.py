import io
import json
import os
import tempfile
import unittest
from unittest.mock import patch

from ds2sim.core.diagnostics import read_diagnostics_csv
from ds2sim.core.errors import ConfigurationError, NoContractionError, SnapshotFormatError
from ds2sim.core.runner import EXIT_CONFIG, EXIT_IO, EXIT_OK, EXIT_REJECTED, exit_code_for
from ds2sim.core.snapshot import read_snapshot
from ds2sim.ui.cli import main, setup_argparse

from support import write_config

SMALL_RUN = {
    "grid.nx": 16,
    "grid.ny": 16,
    "grid.Lx": 10,
    "grid.Ly": 10,
    "time.dt": 0.01,
    "time.t_end": 0.05,
    "output.chart": "false",
}


def run_main(*argv):
    """Run the CLI with captured stdout; returns (exit code, output)."""
    with patch("sys.stdout", new_callable=io.StringIO) as stdout:
        code = main(list(argv))
    return code, stdout.getvalue()


class TestArgumentParsing(unittest.TestCase):
    def test_subcommands(self):
        parser = setup_argparse()
        args = parser.parse_args(["sweep", "-w", "3", "sweep.cfg"])
        self.assertEqual((args.command, args.workers, args.config), ("sweep", 3, "sweep.cfg"))
        self.assertFalse(args.quiet)
        self.assertTrue(parser.parse_args(["-q", "run", "a.cfg"]).quiet)

    def test_version(self):
        code, output = run_main("--version")
        self.assertEqual(code, EXIT_OK)
        self.assertIn("ds2sim", output)

    def test_usage_error_is_a_config_error(self):
        with patch("sys.stderr", new_callable=io.StringIO):
            code, _ = run_main()
        self.assertEqual(code, EXIT_CONFIG)

    def test_unexpected_errors_propagate(self):
        with patch("ds2sim.ui.cli.load_config", side_effect=ValueError("internal")):
            with self.assertRaises(ValueError):
                main(["validate", "any.cfg"])


class TestExitCodes(unittest.TestCase):
    def test_library_errors(self):
        self.assertEqual(exit_code_for(ConfigurationError("bad", key="grid.nx")), EXIT_CONFIG)
        self.assertEqual(exit_code_for(NoContractionError(None)), EXIT_REJECTED)
        self.assertEqual(exit_code_for(SnapshotFormatError("bad magic")), EXIT_IO)
        self.assertEqual(exit_code_for(FileNotFoundError("absent")), EXIT_IO)

    def test_other_errors_have_no_exit_code(self):
        with self.assertRaises(TypeError):
            exit_code_for(ValueError("internal"))


class TestCommands(unittest.TestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.dir = self.tmp.name
        self.out = os.path.join(self.dir, "out")

    def tearDown(self):
        self.tmp.cleanup()

    def test_validate_prints_the_normalized_config(self):
        path = write_config(self.dir, {**SMALL_RUN, "params.gamma": -2})
        code, output = run_main("validate", path)
        self.assertEqual(code, EXIT_OK)
        lines = output.splitlines()
        self.assertIn("params.gamma = -2", lines)
        self.assertIn("grid.nx = 16", lines)
        self.assertEqual(lines, sorted(lines))

    def test_bad_config_exits_one(self):
        path = write_config(self.dir, {**SMALL_RUN, "grid.nw": 8})
        code, output = run_main("validate", path)
        self.assertEqual(code, EXIT_CONFIG)
        self.assertIn("grid.nw", output)
        code, _ = run_main("run", path)
        self.assertEqual(code, EXIT_CONFIG)

    def test_missing_config_file_is_an_io_error(self):
        code, _ = run_main("run", os.path.join(self.dir, "missing.cfg"))
        self.assertEqual(code, EXIT_IO)

    def test_linear_run_conserves_mass(self):
        path = write_config(self.dir, SMALL_RUN)
        code, _ = run_main("-q", "run", path)
        self.assertEqual(code, EXIT_OK)
        records = read_diagnostics_csv(os.path.join(self.out, "diagnostics.csv"))
        self.assertEqual(len(records), 5)
        mass0 = records[0].mass
        for record in records:
            self.assertLessEqual(abs(record.mass - mass0), 1e-12 * mass0)
        final, t = read_snapshot(os.path.join(self.out, "final.ds2f"))
        self.assertAlmostEqual(t, 0.05, places=15)
        self.assertEqual(final.grid.points, (16, 16))
        with open(os.path.join(self.out, "run_info.json"), encoding="utf-8") as f:
            info = json.load(f)
        self.assertEqual(info["steps"], 5)
        self.assertEqual(info["config"]["grid.nx"], "16")

    def test_run_writes_snapshots_and_images_on_cadence(self):
        path = write_config(self.dir, {**SMALL_RUN, "params.gamma": -1, "output.snapshot_every": 2,
                                       "output.images": "true"})
        code, _ = run_main("-q", "run", path)
        self.assertEqual(code, EXIT_OK)
        names = set(os.listdir(self.out))
        for name in ("snapshot_000002.ds2f", "snapshot_000004.ds2f", "snapshot_000002.pgm",
                     "final.ds2f", "final.pgm"):
            self.assertIn(name, names)
        self.assertNotIn("snapshot_000005.ds2f", names)

    def test_rejected_step_exits_two_and_keeps_the_last_good_state(self):
        path = write_config(self.dir, {**SMALL_RUN, "params.gamma": 1, "initial.A": 50,
                                       "time.dt": 0.5, "time.t_end": 1})
        code, output = run_main("-q", "run", path)
        self.assertEqual(code, EXIT_REJECTED)
        self.assertIn("last good time", output)
        _, t = read_snapshot(os.path.join(self.out, "last_good.ds2f"))
        self.assertEqual(t, 0.0)
        self.assertFalse(os.path.exists(os.path.join(self.out, "final.ds2f")))

    def test_missing_snapshot_exits_three(self):
        path = write_config(self.dir, {**SMALL_RUN, "initial.family": "snapshot",
                                       "initial.path": os.path.join(self.dir, "absent.ds2f")})
        code, _ = run_main("-q", "run", path)
        self.assertEqual(code, EXIT_IO)

    def test_existence_time_shrinks_with_amplitude(self):
        estimates = []
        for amplitude in (1, 2):
            path = write_config(self.dir, {
                "grid.nx": 32, "grid.ny": 32, "grid.Lx": 20, "grid.Ly": 20,
                "params.gamma": -2, "params.lambda": 1, "params.mu": 1,
                "initial.A": amplitude, "estimate.T_max": 1,
            }, name=f"estimate_{amplitude}.cfg")
            code, output = run_main("-q", "estimate-t", path)
            self.assertEqual(code, EXIT_OK)
            line = next(line for line in output.splitlines() if line.startswith("T_star = "))
            estimates.append(float(line.split("=", 1)[1]))
            self.assertIn("T,max_ratio,contracts", output)
        self.assertGreater(estimates[1], 0.0)
        self.assertLessEqual(estimates[1], estimates[0])

    def test_no_contraction_exits_two(self):
        path = write_config(self.dir, {**SMALL_RUN, "params.gamma": 1, "initial.A": 1e4})
        code, output = run_main("-q", "estimate-t", path)
        self.assertEqual(code, EXIT_REJECTED)
        self.assertIn("no contraction at probe scale", output)


class TestSweep(unittest.TestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.dir = self.tmp.name

    def tearDown(self):
        self.tmp.cleanup()

    def sweep(self, workers):
        out = os.path.join(self.dir, f"workers_{workers}")
        path = write_config(self.dir, {**SMALL_RUN, "params.lambda": 1, "params.mu": 1,
                                       "sweep.params.gamma": "-1, -2"},
                            name=f"sweep_{workers}.cfg", output_dir=out)
        code, _ = run_main("-q", "sweep", "-w", str(workers), path)
        return code, out

    def test_outputs_do_not_depend_on_the_worker_count(self):
        code_serial, serial = self.sweep(1)
        code_parallel, parallel = self.sweep(2)
        self.assertEqual((code_serial, code_parallel), (EXIT_OK, EXIT_OK))
        for member in ("member_000", "member_001"):
            for name in ("diagnostics.csv", "final.ds2f"):
                with open(os.path.join(serial, member, name), "rb") as a, \
                        open(os.path.join(parallel, member, name), "rb") as b:
                    self.assertEqual(a.read(), b.read(), f"{member}/{name}")
        with open(os.path.join(serial, "member_001.txt"), encoding="utf-8") as f:
            self.assertEqual(f.read(), "params.gamma = -2\n")

    def test_failed_member_sets_the_exit_code(self):
        path = write_config(self.dir, {**SMALL_RUN, "time.dt": 0.5, "time.t_end": 1,
                                       "params.gamma": 1, "sweep.initial.A": "0.01, 50"})
        code, _ = run_main("-q", "sweep", "-w", "1", path)
        self.assertEqual(code, EXIT_REJECTED)
        self.assertTrue(os.path.exists(os.path.join(self.dir, "out", "member_000", "final.ds2f")))
        self.assertTrue(os.path.exists(os.path.join(self.dir, "out", "member_001", "last_good.ds2f")))

    def test_workers_must_be_positive(self):
        path = write_config(self.dir, SMALL_RUN)
        code, _ = run_main("-q", "sweep", "-w", "0", path)
        self.assertEqual(code, EXIT_CONFIG)


if __name__ == '__main__':
    unittest.main()
