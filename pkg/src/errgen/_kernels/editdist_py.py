"""Pure-Python edit-distance kernels over int id sequences.

Reference implementation for the compiled extension: both backends must
produce identical results. The script is canonical under ties:

  1. prefer the diagonal step (match, else substitute),
  2. then deletion (advances the first sequence),
  3. then insertion.

Costs are unit for substitute/delete/insert and zero for a match.
Ops are encoded one byte per op: 0 match, 1 substitute, 2 delete, 3 insert.
"""

OP_MATCH = 0
OP_SUB = 1
OP_DEL = 2
OP_INS = 3


def _suffix_table(a, b):
    # d[i][j] = distance between a[i:] and b[j:]
    la, lb = len(a), len(b)
    d = [[0] * (lb + 1) for _ in range(la + 1)]
    for i in range(la + 1):
        d[i][lb] = la - i
    for j in range(lb + 1):
        d[la][j] = lb - j
    for i in range(la - 1, -1, -1):
        row = d[i]
        below = d[i + 1]
        ai = a[i]
        for j in range(lb - 1, -1, -1):
            sub = below[j + 1] + (ai != b[j])
            dele = below[j] + 1
            ins = row[j + 1] + 1
            row[j] = min(sub, dele, ins)
    return d


def edit_cost(a, b):
    """Minimal unit-cost edit distance between two id sequences."""
    a = [int(x) for x in a]
    b = [int(x) for x in b]
    return int(_suffix_table(a, b)[0][0])


def edit_script(a, b):
    """Return (cost, ops bytes) for the canonical minimal edit script."""
    a = [int(x) for x in a]
    b = [int(x) for x in b]
    la, lb = len(a), len(b)
    d = _suffix_table(a, b)
    ops = bytearray()
    i = j = 0
    while i < la or j < lb:
        if i < la and j < lb and d[i][j] == d[i + 1][j + 1] + (a[i] != b[j]):
            ops.append(OP_MATCH if a[i] == b[j] else OP_SUB)
            i += 1
            j += 1
        elif i < la and d[i][j] == d[i + 1][j] + 1:
            ops.append(OP_DEL)
            i += 1
        else:
            ops.append(OP_INS)
            j += 1
    return int(d[0][0]), bytes(ops)
