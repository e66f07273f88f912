import time
import numpy as np

# stage name -> wall times of every pass through that stage, in first-use order
stages = {}
running = False


def reset():
    global stages, running
    stages = {}
    running = False


def start():
    global running
    running = True

    if any(stages.values()):
        print('Warning, stage times are not empty when starting.')


def get_times(stage_names):
    return [float(np.sum(stages[name])) if stages.get(name) else 0. for name in stage_names]


def summary():
    """Total seconds per stage."""
    return {k: float(np.sum(v)) for k, v in stages.items()}


def line():
    return ', '.join(f'{k}: {v:.2f}s' for k, v in summary().items())


class counter:
    """Adds the wall time of the block to a stage. Does nothing before start()."""

    def __init__(self, name):
        self.name = name
        self.begin = None

    def __enter__(self):
        if running:
            self.begin = time.perf_counter()
        return self

    def __exit__(self, e, ev, t):
        if self.begin is not None:
            stages.setdefault(self.name, []).append(time.perf_counter() - self.begin)
            self.begin = None
