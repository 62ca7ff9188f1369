import io
import unittest
from unittest.mock import patch

from ds2sim.utils.display import print_section, print_status, print_table, set_quiet
from ds2sim.utils.system import check_memory, default_worker_count, estimate_step_memory, get_system_info


class TestDisplay(unittest.TestCase):
    def tearDown(self):
        set_quiet(False)

    def capture(self, func, *args):
        with patch("sys.stdout", new_callable=io.StringIO) as stdout:
            func(*args)
        return stdout.getvalue()

    def test_status_levels(self):
        self.assertIn("[OK] done", self.capture(print_status, "done", "ok"))
        self.assertIn("[ERROR] bad", self.capture(print_status, "bad", "error"))
        self.assertIn("[custom] x", self.capture(print_status, "x", "custom"))

    def test_quiet_hides_ok_and_info_only(self):
        self.assertFalse(set_quiet(True))
        self.assertEqual(self.capture(print_status, "done", "ok"), "")
        self.assertEqual(self.capture(print_status, "note", "info"), "")
        self.assertIn("careful", self.capture(print_status, "careful", "warning"))
        self.assertEqual(self.capture(print_table, ["a"], [[1]]), "")
        self.assertEqual(self.capture(print_section, "Title"), "")
        self.assertTrue(set_quiet(False))

    def test_table(self):
        output = self.capture(print_table, ["steps", "ratio"], [[10, "1.0e-03"]])
        self.assertIn("steps", output)
        self.assertIn("1.0e-03", output)


class TestSystem(unittest.TestCase):
    def test_system_info(self):
        info = get_system_info()
        for key in ("system", "python_version", "numpy_version", "scipy_version"):
            self.assertIn(key, info)

    def test_worker_count(self):
        self.assertGreaterEqual(default_worker_count(), 1)

    def test_memory_estimate_scales(self):
        self.assertEqual(estimate_step_memory(128 * 128, 8), 4 * estimate_step_memory(64 * 64, 8))
        self.assertTrue(check_memory(16 * 16, 8))

    def test_memory_warning(self):
        with patch("ds2sim.utils.system.print_status") as status:
            fits = check_memory(10 ** 15, 8)
        self.assertFalse(fits)
        self.assertEqual(status.call_args[0][1], "warning")


if __name__ == '__main__':
    unittest.main()
