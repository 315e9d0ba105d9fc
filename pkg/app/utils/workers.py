import logging
from concurrent.futures import ThreadPoolExecutor

logger = logging.getLogger(__name__)


def map_ordered(func, items, jobs=1):
    """Apply func to every item and return the results in input order.

    With jobs > 1 the calls run on a thread pool; completion order never
    changes the output order.
    """
    items = list(items)
    jobs = max(1, int(jobs or 1))
    if jobs == 1 or len(items) < 2:
        return [func(item) for item in items]
    logger.debug("running %d tasks on %d workers", len(items), jobs)
    with ThreadPoolExecutor(max_workers=min(jobs, len(items))) as pool:
        return list(pool.map(func, items))
