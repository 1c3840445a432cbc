from concurrent.futures import ThreadPoolExecutor

import numpy as np


def spawn_rngs(seed, count):
    """Independent generators, one per work chunk, derived from a single seed."""
    if not isinstance(seed, np.random.SeedSequence):
        seed = np.random.SeedSequence(seed)
    return [np.random.default_rng(s) for s in seed.spawn(count)]


def chunk_sizes(total, chunks):
    base, extra = divmod(total, chunks)
    return [base + (1 if i < extra else 0) for i in range(chunks)]


def parallel_map(fn, items, threads=1):
    """Map `fn` over `items`, preserving input order."""
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))
