import unittest
from unittest import mock

import psutil

from adaptive_wave import performance
from adaptive_wave.performance import PerformanceContext, PerformanceMonitor, monitor_operation


class TestPerformanceMonitor(unittest.TestCase):
    """Test cases for the performance monitor"""

    def setUp(self):
        self.monitor = PerformanceMonitor()

    def test_operation_timing(self):
        self.monitor.start_operation("fit")
        duration = self.monitor.end_operation("fit")
        self.assertGreaterEqual(duration, 0.0)
        stats = self.monitor.get_metric_stats("fit_duration")
        self.assertEqual(stats["stdev"], 0)
        self.assertEqual(stats["min"], stats["max"])

    def test_end_without_start(self):
        self.assertIsNone(self.monitor.end_operation("never"))

    def test_metric_history_is_bounded(self):
        for i in range(150):
            self.monitor.record_metric("x", float(i), "s")
        self.assertEqual(len(self.monitor.metrics["x"]), 100)
        self.assertEqual(self.monitor.get_metric_stats("x")["min"], 50.0)
        self.assertIsNone(self.monitor.get_metric_stats("y"))

    def test_snapshot_records_memory(self):
        snapshot = self.monitor.take_snapshot()
        self.assertGreater(snapshot.memory_mb, 0.0)
        self.assertIn("peak_memory_mb", self.monitor.get_performance_summary())

    def test_summary_reports_cpu_and_threads(self):
        self.monitor.take_snapshot()
        summary = self.monitor.get_performance_summary()
        self.assertGreaterEqual(summary["peak_cpu_percent"], 0.0)
        self.assertGreaterEqual(summary["peak_thread_count"], 1)
        with self.assertLogs("adaptive_wave.performance", level="INFO") as logs:
            self.monitor.log_summary()
        self.assertTrue(any("threads:" in line for line in logs.output))

    def test_snapshot_survives_psutil_errors(self):
        with mock.patch.object(self.monitor.process, "memory_info", side_effect=psutil.AccessDenied()):
            snapshot = self.monitor.take_snapshot()
        self.assertEqual(snapshot.memory_mb, 0.0)

    def test_context_warns_on_slow_operation(self):
        with mock.patch.object(self.monitor, "end_operation", return_value=5.0):
            with self.assertLogs("adaptive_wave.performance", level="WARNING") as logs:
                with PerformanceContext(self.monitor, "manakov", slow_threshold=1.0) as ctx:
                    pass
        self.assertEqual(ctx.duration, 5.0)
        self.assertIn("Slow operation: manakov", logs.output[0])

    def test_log_summary(self):
        with PerformanceContext(self.monitor, "hebb"):
            pass
        with self.assertLogs("adaptive_wave.performance", level="INFO") as logs:
            self.monitor.log_summary()
        self.assertTrue(any("hebb_duration" in line for line in logs.output))


def test_monitor_operation_decorator(monkeypatch):
    monitor = PerformanceMonitor()
    monkeypatch.setattr(performance, "_monitor", monitor)

    @monitor_operation("square")
    def square(x):
        return x * x

    assert square(3) == 9
    assert len(monitor.metrics["square_duration"]) == 1
