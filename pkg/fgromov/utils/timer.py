import time
import functools
import logging


def timer(logger: logging.Logger | None = None):
    """Decorator factory that returns a decorator which logs execution time.

    Use like:

        @timer(logger=logger)
        def enumerate_ball(self, group, radius):
            ...

    Apply it to the heavy entry points only; nested timed calls each log
    their own line.
    """
    if logger is None:
        logger = logging.getLogger("fgromov.timer")

    def _decorator(func):
        @functools.wraps(func)
        def _wrapper(*args, **kwargs):
            start = time.perf_counter()
            try:
                return func(*args, **kwargs)
            finally:
                elapsed_ms = (time.perf_counter() - start) * 1000
                logger.info(f"{func.__module__}.{func.__name__} executed in {elapsed_ms:.2f} ms")

        return _wrapper

    return _decorator


class Stopwatch:
    """Wall clock budget shared by the steps of one command"""

    def __init__(self, seconds: float):
        self.seconds = seconds
        self.start = time.monotonic()

    def elapsed(self) -> float:
        return time.monotonic() - self.start

    def expired(self) -> bool:
        return self.elapsed() > self.seconds
