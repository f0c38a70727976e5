"""JSON encoding for matrices and deterministic numeric output.

Matrices travel as {"dim": n, "re": [[...]], "im": [[...]]}.  All floats
written by the command line tools go through format_float, which prints
17 significant digits so outputs are byte-stable and round-trip exactly.
"""

import numpy as np

from .errors import ValidationError


def matrix_to_json(matrix):
    m = np.asarray(matrix, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValidationError("only square matrices are serialized")
    return {
        "dim": int(m.shape[0]),
        "re": [[float(x) for x in row] for row in m.real],
        "im": [[float(x) for x in row] for row in m.imag],
    }


def matrix_from_json(obj):
    if not isinstance(obj, dict):
        raise ValidationError("matrix JSON must be an object")
    try:
        dim = int(obj["dim"])
        re = np.asarray(obj["re"], dtype=float)
        im = np.asarray(obj["im"], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError("malformed matrix JSON: %s" % exc) from exc
    if re.shape != (dim, dim) or im.shape != (dim, dim):
        raise ValidationError(
            "matrix JSON shape mismatch: dim=%d, re%r, im%r" % (dim, re.shape, im.shape)
        )
    return re + 1j * im


def format_float(x):
    """17 significant digits; enough to round-trip any double exactly."""
    x = float(x)
    if x != x or x in (float("inf"), float("-inf")):
        raise ValidationError("non-finite value in output: %r" % x)
    if x == 0.0:
        x = 0.0  # normalize -0.0
    return format(x, ".17g")


def dump_json(obj, indent=0):
    """Deterministic JSON text: sorted keys, fixed float format, LF newline."""
    pieces = []
    _write(obj, pieces, indent, 0)
    return "".join(pieces) + "\n"


def _write(obj, out, indent, level):
    pad = " " * (indent * (level + 1)) if indent else ""
    close_pad = " " * (indent * level) if indent else ""
    nl = "\n" if indent else ""
    sep = "," + nl
    if obj is None:
        out.append("null")
    elif obj is True:
        out.append("true")
    elif obj is False:
        out.append("false")
    elif isinstance(obj, (int, np.integer)) and not isinstance(obj, bool):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.append(format_float(obj))
    elif isinstance(obj, str):
        out.append(_escape(obj))
    elif isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        out.append("{" + nl)
        keys = sorted(obj)
        for i, k in enumerate(keys):
            if not isinstance(k, str):
                raise ValidationError("JSON object keys must be strings")
            out.append(pad + _escape(k) + ": ")
            _write(obj[k], out, indent, level + 1)
            out.append(sep if i + 1 < len(keys) else nl)
        out.append(close_pad + "}")
    elif isinstance(obj, (list, tuple)):
        if not len(obj):
            out.append("[]")
            return
        out.append("[" + nl)
        for i, item in enumerate(obj):
            out.append(pad)
            _write(item, out, indent, level + 1)
            out.append(sep if i + 1 < len(obj) else nl)
        out.append(close_pad + "]")
    else:
        raise ValidationError("cannot serialize %r" % type(obj))


def _escape(s):
    out = ['"']
    for ch in s:
        if ch == '"':
            out.append('\\"')
        elif ch == "\\":
            out.append("\\\\")
        elif ord(ch) < 0x20:
            out.append("\\u%04x" % ord(ch))
        else:
            out.append(ch)
    out.append('"')
    return "".join(out)
