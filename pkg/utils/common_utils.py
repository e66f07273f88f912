#!/usr/bin/env python
# -*- coding:utf-8 -*-
import os
from concurrent.futures import ThreadPoolExecutor
from terminaltables import AsciiTable


class ProgressBar:
    """A bar of `length` cells for `total` items, rebuilt only when the number of filled cells changes."""

    def __init__(self, length, total):
        self.length = length
        self.total = max(total, 1)
        self.filled = -1
        self.string = ''
        self.get_bar(0)

    def get_bar(self, done):
        filled = self.length * min(done, self.total) // self.total
        if filled != self.filled:
            self.filled = filled
            self.string = '█' * filled + '░' * (self.length - filled)
        return self.string


def worker_count(workers=None):
    """Thread count for the parallel sweeps, capped by the ORBITRACE_THREADS environment variable."""
    cap = os.environ.get('ORBITRACE_THREADS')
    workers = workers or os.cpu_count() or 1
    if cap:
        assert cap.isdigit() and int(cap) > 0, f'ORBITRACE_THREADS must be a positive integer, got \'{cap}\'.'
        workers = min(workers, int(cap))
    return max(1, workers)


def parallel_map(fn, items, workers=None, progress=None):
    """
    Apply fn to every item on a thread pool, results in item order.
    progress, if given, is called with the number of finished items and the total.
    """
    items = list(items)
    workers = min(worker_count(workers), max(len(items), 1))
    if workers == 1:
        results = []
        for i, item in enumerate(items):
            results.append(fn(item))
            if progress:
                progress(i + 1, len(items))
        return results

    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(fn, aa) for aa in items]
        results = []
        for i, future in enumerate(futures):
            results.append(future.result())
            if progress:
                progress(i + 1, len(items))
    return results


def console_progress(title='', length=40):
    """A progress callback for parallel_map that redraws a ProgressBar in place."""
    bars = {}

    def show(done, total):
        bar = bars.setdefault(total, ProgressBar(length, total))
        print(f'\r{title} {bar.get_bar(done)} {done}/{total}', end='' if done < total else '\n', flush=True)

    return show


def make_table(header, rows, digits=6):
    def cell(value):
        if isinstance(value, complex):
            return f'{value.real:.{digits}f}{value.imag:+.{digits}f}j'
        if isinstance(value, float):
            return f'{value:.{digits}g}'
        return '' if value is None else str(value)

    return AsciiTable([list(header)] + [[cell(aa) for aa in row] for row in rows]).table
