"""Binary search over sorted key lists, with explicit comparison counting.

The catalog and the index tables promise logarithmic lookup in the number
of keys, and that promise is checked by measuring real comparisons. So the
search is written out longhand here instead of using ``bisect``: each key
comparison the algorithm performs is counted, nothing else.
"""


def locate(keys, key):
    """Search ``keys`` (sorted ascending, unique) for ``key``.

    Returns ``(pos, found, comparisons)`` where ``pos`` is the bisect-left
    insertion point, ``found`` says whether ``keys[pos] == key``, and
    ``comparisons`` is the number of key comparisons performed.
    """
    lo, hi = 0, len(keys)
    comparisons = 0
    while lo < hi:
        mid = (lo + hi) // 2
        comparisons += 1
        if keys[mid] < key:
            lo = mid + 1
        else:
            hi = mid
    found = False
    if lo < len(keys):
        comparisons += 1
        found = keys[lo] == key
    return lo, found, comparisons
