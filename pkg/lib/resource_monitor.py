# resource_monitor.py
"""
Run-level wall time and memory accounting for CLI subcommands.
"""

import time
import logging

import psutil

from .utils import message_processor

SLOW_RUN_SECONDS = 60
LARGE_MEMORY_CHANGE_MB = 100


def _rss_mb():
    return psutil.Process().memory_info().rss / 1024 / 1024


def monitor_resource_usage(operation_func, *args, **kwargs):
    """
    Run ``operation_func`` and measure what it cost.

    Args:
        operation_func: Function to monitor
        *args, **kwargs: Arguments for the function

    Returns:
        tuple: (function_result, resource_usage_report)
    """
    start_time = time.perf_counter()
    start_memory = _rss_mb()

    try:
        result = operation_func(*args, **kwargs)
    except Exception as e:
        duration = time.perf_counter() - start_time
        logging.error(f"{operation_func.__name__} failed after {duration:.2f}s: {e}")
        raise

    duration = time.perf_counter() - start_time
    end_memory = _rss_mb()
    memory_change = end_memory - start_memory
    report = {
        'duration_seconds': round(duration, 2),
        'memory_change_mb': round(memory_change, 2),
        'peak_memory_mb': round(end_memory, 2),
        'cpu_count': psutil.cpu_count(),
        'success': True
    }
    logging.info(f"Resource usage for {operation_func.__name__}: {report}")

    if duration > SLOW_RUN_SECONDS or abs(memory_change) > LARGE_MEMORY_CHANGE_MB:
        message_processor(
            f"Resource usage for {operation_func.__name__}: "
            f"{duration:.1f}s, {memory_change:+.1f}MB memory"
        )

    return result, report
