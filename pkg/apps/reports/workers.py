import logging
import multiprocessing

logger = logging.getLogger(__name__)


def parallel_map(func, items, workers=1):
    """
    ``[func(item) for item in items]`` spread over a process pool.

    ``func`` must be picklable (a module-level function or a partial of one).
    Results keep the order of ``items``.
    """
    items = list(items)
    workers = max(1, min(int(workers or 1), len(items)))
    if workers == 1:
        return [func(item) for item in items]
    logger.debug('mapping %d items over %d workers', len(items), workers)
    with multiprocessing.Pool(workers) as pool:
        return pool.map(func, items)
