"""
Timing instrumentation for the numerical pipeline.

Timings are logged, never written into artifacts, so reruns stay byte-identical.
"""

import logging
import time
from functools import wraps
from typing import Any, Dict

from .conf import get_setting

logger = logging.getLogger(__name__)


class PerformanceMonitor:
    """Monitor and log per-function wall-clock timings"""

    def __init__(self):
        self.metrics: Dict[str, list] = {}

    def time_function(self, func_name: str):
        """Decorator to time function execution"""
        def decorator(func):
            @wraps(func)
            def wrapper(*args, **kwargs):
                start_time = time.perf_counter()
                result = func(*args, **kwargs)
                execution_time = time.perf_counter() - start_time

                self.metrics.setdefault(func_name, []).append(execution_time)

                if execution_time > get_setting('SLOW_CALL_SECONDS'):
                    logger.warning(f"Slow call {func_name}: {execution_time:.3f}s")
                else:
                    logger.debug(f"{func_name}: {execution_time:.4f}s")

                return result
            return wrapper
        return decorator

    def get_average_time(self, func_name: str) -> float:
        """Get average execution time for a function"""
        times = self.metrics.get(func_name)
        if not times:
            return 0.0
        return sum(times) / len(times)

    def get_performance_report(self) -> Dict[str, Any]:
        """Summarize recorded timings per function"""
        report = {}
        for func_name, times in self.metrics.items():
            if times:
                report[func_name] = {
                    'average_time': sum(times) / len(times),
                    'min_time': min(times),
                    'max_time': max(times),
                    'total_calls': len(times),
                    'total_time': sum(times),
                }
        return report

    def reset(self) -> None:
        self.metrics.clear()


performance_monitor = PerformanceMonitor()
