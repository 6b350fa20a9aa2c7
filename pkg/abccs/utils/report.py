def _cell(value):
    if isinstance(value, float):
        return '%.6g' % value
    return str(value)


def table(header, rows):
    rows = [[_cell(v) for v in row] for row in rows]
    widths = [max(len(str(h)), *(len(r[i]) for r in rows)) if rows
              else len(str(h)) for i, h in enumerate(header)]

    print('  ' + ' '.join(str(h).rjust(w) for h, w in zip(header, widths)))
    for row in rows:
        print('  ' + ' '.join(c.rjust(w) for c, w in zip(row, widths)))


def matrix(m, names):
    table([''] + list(names),
          [[name] + [float(v) for v in row] for name, row in zip(names, m)])
