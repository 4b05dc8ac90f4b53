import time
from contextlib import contextmanager


@contextmanager
def timed(timings: dict, key: str):
    """

    Record the wall clock duration of the with-block in `timings[key]`.

    Parameters
    ----------
    timings : dict
        mapping which collects the durations in seconds, e.g. the
        `timings` field of a run manifest
    key : str
        name of the timed step

    """

    start = time.perf_counter_ns()
    try:
        yield timings
    finally:
        timings[key] = (time.perf_counter_ns() - start) * 1e-9
