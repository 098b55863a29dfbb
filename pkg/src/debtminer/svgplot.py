"""Dependency-free SVG charts.

Every figure the pipeline emits comes from here: category-quantification
scatters, scree/parallel-analysis lines, and step-accuracy grouped bars.
Output is a plain SVG string built with stable number formatting, so the
same inputs always produce the same bytes.
"""

import math

PALETTE = ("#2c5f8a", "#c0623a", "#4a8a57", "#7d5a9e", "#a3443f", "#6b6b6b")
FLAG_COLOR = "#b03030"
POINT_COLOR = "#2c5f8a"
GRID_COLOR = "#d8d8d8"
AXIS_COLOR = "#404040"
FONT = "font-family=\"Helvetica, Arial, sans-serif\""


def _fmt(x) -> str:
    """Stable short decimal; never emits scientific notation artifacts."""
    v = float(x)
    if v == 0:
        return "0"
    s = f"{v:.2f}".rstrip("0").rstrip(".")
    return s if s else "0"


def _esc(text: str) -> str:
    return (
        str(text).replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
    )


def _ticks(lo: float, hi: float, target: int = 5):
    """Round tick positions covering [lo, hi]."""
    if not (hi > lo):
        hi = lo + 1.0
    raw = (hi - lo) / max(target, 1)
    mag = 10.0 ** math.floor(math.log10(raw))
    step = next(
        m * mag for m in (1.0, 2.0, 2.5, 5.0, 10.0) if m * mag >= raw
    )
    first = math.ceil(lo / step) * step
    out = []
    t = first
    while t <= hi + 1e-9 * step:
        out.append(0.0 if abs(t) < 1e-12 else t)
        t += step
    return out


class _Canvas:
    def __init__(self, width: int, height: int):
        self.width = width
        self.height = height
        self.parts = [
            f"<svg xmlns=\"http://www.w3.org/2000/svg\" "
            f"width=\"{width}\" height=\"{height}\" "
            f"viewBox=\"0 0 {width} {height}\">",
            f"<rect x=\"0\" y=\"0\" width=\"{width}\" height=\"{height}\" "
            f"fill=\"#ffffff\"/>",
        ]

    def line(self, x1, y1, x2, y2, stroke=AXIS_COLOR, width=1.0, dash=None):
        d = f" stroke-dasharray=\"{dash}\"" if dash else ""
        self.parts.append(
            f"<line x1=\"{_fmt(x1)}\" y1=\"{_fmt(y1)}\" x2=\"{_fmt(x2)}\" "
            f"y2=\"{_fmt(y2)}\" stroke=\"{stroke}\" "
            f"stroke-width=\"{_fmt(width)}\"{d}/>"
        )

    def polyline(self, pts, stroke, width=1.5, dash=None):
        d = f" stroke-dasharray=\"{dash}\"" if dash else ""
        coords = " ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in pts)
        self.parts.append(
            f"<polyline points=\"{coords}\" fill=\"none\" stroke=\"{stroke}\" "
            f"stroke-width=\"{_fmt(width)}\"{d}/>"
        )

    def circle(self, cx, cy, r, fill, stroke=None):
        s = f" stroke=\"{stroke}\"" if stroke else ""
        self.parts.append(
            f"<circle cx=\"{_fmt(cx)}\" cy=\"{_fmt(cy)}\" r=\"{_fmt(r)}\" "
            f"fill=\"{fill}\"{s}/>"
        )

    def rect(self, x, y, w, h, fill, stroke=None):
        s = f" stroke=\"{stroke}\"" if stroke else ""
        self.parts.append(
            f"<rect x=\"{_fmt(x)}\" y=\"{_fmt(y)}\" width=\"{_fmt(w)}\" "
            f"height=\"{_fmt(h)}\" fill=\"{fill}\"{s}/>"
        )

    def text(self, x, y, s, size=11, anchor="start", fill="#202020",
             rotate=None, bold=False):
        tr = (
            f" transform=\"rotate({_fmt(rotate)} {_fmt(x)} {_fmt(y)})\""
            if rotate is not None else ""
        )
        w = " font-weight=\"bold\"" if bold else ""
        self.parts.append(
            f"<text x=\"{_fmt(x)}\" y=\"{_fmt(y)}\" {FONT} "
            f"font-size=\"{size}\" text-anchor=\"{anchor}\" "
            f"fill=\"{fill}\"{w}{tr}>{_esc(s)}</text>"
        )

    def render(self) -> str:
        return "\n".join(self.parts) + "\n</svg>\n"


def _frame(canvas, box, title, xlabel, ylabel):
    x0, y0, x1, y1 = box
    canvas.rect(x0, y0, x1 - x0, y1 - y0, fill="none", stroke=AXIS_COLOR)
    canvas.text((x0 + x1) / 2, 22, title, size=14, anchor="middle", bold=True)
    canvas.text((x0 + x1) / 2, canvas.height - 8, xlabel, anchor="middle")
    canvas.text(16, (y0 + y1) / 2, ylabel, anchor="middle", rotate=-90)


def scatter_plot(points, title, xlabel="dimension 1", ylabel="dimension 2",
                 width=760, height=560) -> str:
    """Labelled point cloud; flagged points get the alert colour.

    ``points`` holds (x, y, label, flagged) tuples.
    """
    pts = [(float(x), float(y), str(lab), bool(flag))
           for x, y, lab, flag in points]
    if not pts:
        raise ValueError("no points to plot")
    xs = [p[0] for p in pts]
    ys = [p[1] for p in pts]
    pad = 0.08
    xspan = (max(xs) - min(xs)) or 1.0
    yspan = (max(ys) - min(ys)) or 1.0
    xlo, xhi = min(xs) - pad * xspan, max(xs) + pad * xspan
    ylo, yhi = min(ys) - pad * yspan, max(ys) + pad * yspan

    c = _Canvas(width, height)
    box = (70, 40, width - 20, height - 50)
    x0, y0, x1, y1 = box

    def sx(v):
        return x0 + (v - xlo) / (xhi - xlo) * (x1 - x0)

    def sy(v):
        return y1 - (v - ylo) / (yhi - ylo) * (y1 - y0)

    for t in _ticks(xlo, xhi):
        c.line(sx(t), y0, sx(t), y1, stroke=GRID_COLOR)
        c.text(sx(t), y1 + 16, _fmt(t), anchor="middle", size=10)
    for t in _ticks(ylo, yhi):
        c.line(x0, sy(t), x1, sy(t), stroke=GRID_COLOR)
        c.text(x0 - 6, sy(t) + 4, _fmt(t), anchor="end", size=10)
    if xlo < 0 < xhi:
        c.line(sx(0), y0, sx(0), y1, stroke=AXIS_COLOR, dash="3,3")
    if ylo < 0 < yhi:
        c.line(x0, sy(0), x1, sy(0), stroke=AXIS_COLOR, dash="3,3")

    for x, y, lab, flagged in pts:
        color = FLAG_COLOR if flagged else POINT_COLOR
        c.circle(sx(x), sy(y), 4 if flagged else 3, fill=color)
        c.text(sx(x) + 6, sy(y) - 5, lab, size=9,
               fill=FLAG_COLOR if flagged else "#333333")
    _frame(c, box, title, xlabel, ylabel)
    return c.render()


def scree_plot(observed, random_means=None, retained=None,
               title="Scree plot", width=720, height=480) -> str:
    """Eigenvalues by component index, optionally with the random baseline.

    ``retained`` draws a cut marker after that many components.
    """
    obs = [float(v) for v in observed]
    if not obs:
        raise ValueError("no eigenvalues to plot")
    rnd = [float(v) for v in random_means] if random_means is not None else None
    p = len(obs)
    ymax = max(obs + (rnd or [0.0]) + [1.0]) * 1.08
    ymin = min(obs + (rnd or [0.0]) + [0.0])

    c = _Canvas(width, height)
    box = (70, 40, width - 20, height - 50)
    x0, y0, x1, y1 = box

    def sx(i):
        if p == 1:
            return (x0 + x1) / 2
        return x0 + (i / (p - 1)) * (x1 - x0) * 0.94 + (x1 - x0) * 0.03

    def sy(v):
        return y1 - (v - ymin) / (ymax - ymin) * (y1 - y0)

    for t in _ticks(ymin, ymax):
        c.line(x0, sy(t), x1, sy(t), stroke=GRID_COLOR)
        c.text(x0 - 6, sy(t) + 4, _fmt(t), anchor="end", size=10)
    step = max(1, p // 14)
    for i in range(0, p, step):
        c.text(sx(i), y1 + 16, str(i + 1), anchor="middle", size=10)

    c.line(x0, sy(1.0), x1, sy(1.0), stroke="#999999", dash="5,4")
    c.polyline([(sx(i), sy(v)) for i, v in enumerate(obs)],
               stroke=PALETTE[0], width=2.0)
    for i, v in enumerate(obs):
        c.circle(sx(i), sy(v), 3, fill=PALETTE[0])
    if rnd is not None:
        c.polyline([(sx(i), sy(v)) for i, v in enumerate(rnd)],
                   stroke=PALETTE[1], width=1.5, dash="6,3")
        c.text(x1 - 8, sy(rnd[0]) - 8, "random baseline", anchor="end",
               size=10, fill=PALETTE[1])
    if retained:
        xr = (sx(retained - 1) + sx(retained)) / 2 if retained < p else sx(p - 1)
        c.line(xr, y0, xr, y1, stroke=FLAG_COLOR, dash="2,3")
        c.text(xr + 4, y0 + 14, f"retained = {retained}", size=10,
               fill=FLAG_COLOR)
    c.text(x1 - 8, sy(obs[0]) + 14, "observed", anchor="end", size=10,
           fill=PALETTE[0])
    _frame(c, box, title, "component", "eigenvalue")
    return c.render()


def grouped_bars(groups, series, title, ylabel="mean accuracy",
                 ylim=(0.0, 1.0), width=720, height=480) -> str:
    """One bar cluster per group, one coloured bar per series entry.

    ``series`` holds (name, values) pairs aligned with ``groups``.
    """
    groups = [str(g) for g in groups]
    series = [(str(name), [float(v) for v in vals]) for name, vals in series]
    if not groups or not series:
        raise ValueError("need groups and series")
    for name, vals in series:
        if len(vals) != len(groups):
            raise ValueError(f"series {name!r} length mismatch")
    ylo, yhi = float(ylim[0]), float(ylim[1])

    c = _Canvas(width, height)
    box = (70, 40, width - 20, height - 60)
    x0, y0, x1, y1 = box

    def sy(v):
        return y1 - (v - ylo) / (yhi - ylo) * (y1 - y0)

    for t in _ticks(ylo, yhi):
        c.line(x0, sy(t), x1, sy(t), stroke=GRID_COLOR)
        c.text(x0 - 6, sy(t) + 4, _fmt(t), anchor="end", size=10)

    ng, ns = len(groups), len(series)
    slot = (x1 - x0) / ng
    bar = slot * 0.7 / ns
    for gi, gname in enumerate(groups):
        base = x0 + gi * slot + slot * 0.15
        for si, (name, vals) in enumerate(series):
            color = PALETTE[si % len(PALETTE)]
            h = sy(ylo) - sy(vals[gi])
            c.rect(base + si * bar, sy(vals[gi]), bar * 0.92, h, fill=color)
            c.text(base + si * bar + bar * 0.46, sy(vals[gi]) - 4,
                   _fmt(vals[gi]), anchor="middle", size=8)
        c.text(x0 + gi * slot + slot / 2, y1 + 16, gname, anchor="middle",
               size=11)

    lx = x0 + 8
    for si, (name, _) in enumerate(series):
        c.rect(lx, y0 + 8 + si * 16, 10, 10, fill=PALETTE[si % len(PALETTE)])
        c.text(lx + 15, y0 + 17 + si * 16, name, size=10)
    _frame(c, box, title, "", ylabel)
    return c.render()
