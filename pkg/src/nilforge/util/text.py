import itertools
import numbers
from fractions import Fraction

import numpy as np


def _is_iterable(obj):
    try:
        iter(obj)
        return True
    except TypeError:
        return False


def format_limited(value, limit=10, depth=3):
    """Short printable form of a witness: long containers are elided with '...'."""

    def format_tuple(t, depth):
        return tuple([helper(x, depth) for x in t])

    def format_list(items, depth):
        return [helper(x, depth) for x in items]

    def format_dict(items, depth):
        return {k: helper(v, depth) for k, v in items}

    def helper(value, depth):
        if depth == 0:
            return ...
        if value is Ellipsis:
            return ...
        if isinstance(value, dict):
            if len(value) > limit:
                return format_dict(list(value.items())[:limit - 1] + [(..., ...)], depth - 1)
            return format_dict(value.items(), depth - 1)
        elif isinstance(value, (str, bytes)):
            if len(value) > 254:
                value = value[0:253] + '...'
            return value
        elif isinstance(value, tuple):
            if len(value) > limit:
                return format_tuple(value[0:limit - 1] + (...,), depth - 1)
            return format_tuple(value, depth - 1)
        elif value is None or isinstance(value, (int, float, bool, numbers.Number)):
            return value
        elif isinstance(value, np.ndarray):
            return helper(value.tolist(), depth)
        elif _is_iterable(value):
            value = list(itertools.islice(value, 0, limit + 1))
            if len(value) > limit:
                return format_list(value[:limit - 1] + [...], depth - 1)
            return format_list(value, depth - 1)
        else:
            return str(value)

    result = str(helper(value, depth=depth)).replace('Ellipsis', '...')
    if len(result) > 1024:
        result = result[:1024 - 3] + '...'
    return result


def to_jsonable(value):
    """Convert results to plain JSON values. Exact numbers become strings."""
    if hasattr(value, 'to_json'):
        return to_jsonable(value.to_json())
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, complex):
        return [value.real, value.imag]
    if isinstance(value, Fraction):
        return str(value)
    if value is None or isinstance(value, (str, int, float)):
        return value
    return str(value)
