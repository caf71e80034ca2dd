"""Deterministic SVG chart emission: stacked bars and Marimekko mosaics.

Charts are plain hand-assembled SVG with fixed coordinate formatting so the
same tables always produce byte-identical files.  Each chart builder has a
matching ``*_data`` function returning the raw numbers behind the drawing,
which the report embeds for downstream (UI) consumption.
"""

from __future__ import annotations

from .analytics import ALL_PARTIES, BAND_TOKENS, BARRIER_TOKENS, BandMatrix, ProportionTable

BARRIER_COLORS = {
    "primary": "#4c78a8",
    "opponent": "#e45756",
    "low": "#f58518",
    "medium": "#72b7b2",
    "high": "#54a24b",
}

BAND_LABELS = {"low": "Low", "mid": "Mid", "high": "High"}


def _fmt(x: float) -> str:
    return f"{x:.2f}"


def _esc(text: str) -> str:
    return (
        text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;").replace('"', "&quot;")
    )


def _legend(x: float, y: float) -> list[str]:
    parts = []
    for i, token in enumerate(BARRIER_TOKENS):
        ly = y + i * 22
        parts.append(
            f'<rect x="{_fmt(x)}" y="{_fmt(ly)}" width="14" height="14" '
            f'fill="{BARRIER_COLORS[token]}"/>'
        )
        parts.append(
            f'<text x="{_fmt(x + 20)}" y="{_fmt(ly + 11)}" font-size="12" '
            f'font-family="sans-serif">{_esc(token)}</text>'
        )
    return parts


def stacked_bar_data(tables: list[ProportionTable], country: str) -> dict:
    """Raw bar data: per party, one bar per provider, segments summing to 1."""
    country = country.upper()
    bars = []
    for table in tables:
        if table.country != country or table.party_id == ALL_PARTIES:
            continue
        bars.append(
            {
                "party": table.party_id,
                "provider": table.provider,
                "total": table.total,
                "excluded_pending": table.excluded_pending,
                "segments": table.proportions,
            }
        )
    bars.sort(key=lambda b: (b["party"], b["provider"]))
    return {"kind": "stacked_bars", "country": country, "classes": list(BARRIER_TOKENS), "bars": bars}


def stacked_bar_svg(tables: list[ProportionTable], country: str) -> str:
    """Grouped stacked bars: adjacent per-provider bars for each party.

    Every bar spans height 1.0 split by barrier-class proportions; the
    occurrence total is printed under each bar.
    """
    return stacked_bar_svg_from_data(stacked_bar_data(tables, country))


def stacked_bar_svg_from_data(data: dict) -> str:
    """Render the stacked-bar SVG from a ``stacked_bar_data`` dict."""
    country = data["country"]
    bars = data["bars"]
    parties = sorted({b["party"] for b in bars})
    providers = sorted({b["provider"] for b in bars})
    bar_w, gap, group_gap = 34.0, 4.0, 28.0
    plot_h, top, bottom, left = 260.0, 30.0, 64.0, 60.0
    group_w = len(providers) * bar_w + max(0, len(providers) - 1) * gap
    width = left + len(parties) * (group_w + group_gap) + 150
    height = top + plot_h + bottom
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_fmt(width)}" '
        f'height="{_fmt(height)}" viewBox="0 0 {_fmt(width)} {_fmt(height)}">',
        f'<rect x="0" y="0" width="{_fmt(width)}" height="{_fmt(height)}" fill="white"/>',
        f'<text x="{_fmt(left)}" y="18" font-size="14" font-family="sans-serif" '
        f'font-weight="bold">Citations by barrier class — {_esc(country)}</text>',
    ]
    for frac in (0.0, 0.25, 0.5, 0.75, 1.0):
        y = top + plot_h * (1 - frac)
        parts.append(
            f'<line x1="{_fmt(left - 6)}" y1="{_fmt(y)}" x2="{_fmt(left)}" y2="{_fmt(y)}" '
            f'stroke="#333" stroke-width="1"/>'
        )
        parts.append(
            f'<text x="{_fmt(left - 10)}" y="{_fmt(y + 4)}" font-size="11" '
            f'font-family="sans-serif" text-anchor="end">{_fmt(frac)}</text>'
        )
    by_key = {(b["party"], b["provider"]): b for b in bars}
    for pi, party in enumerate(parties):
        gx = left + pi * (group_w + group_gap)
        for vi, provider in enumerate(providers):
            bar = by_key.get((party, provider))
            if bar is None:
                continue
            x = gx + vi * (bar_w + gap)
            y_cursor = top + plot_h
            for token in BARRIER_TOKENS:
                frac = bar["segments"].get(token, 0.0)
                seg_h = plot_h * frac
                y_cursor -= seg_h
                if seg_h > 0:
                    parts.append(
                        f'<rect x="{_fmt(x)}" y="{_fmt(y_cursor)}" width="{_fmt(bar_w)}" '
                        f'height="{_fmt(seg_h)}" fill="{BARRIER_COLORS[token]}">'
                        f"<title>{_esc(f'{party}/{provider} {token}: {frac:.3f}')}</title></rect>"
                    )
            parts.append(
                f'<text x="{_fmt(x + bar_w / 2)}" y="{_fmt(top + plot_h + 14)}" font-size="10" '
                f'font-family="sans-serif" text-anchor="middle">{_esc(provider)}</text>'
            )
            parts.append(
                f'<text x="{_fmt(x + bar_w / 2)}" y="{_fmt(top + plot_h + 28)}" font-size="10" '
                f'font-family="sans-serif" text-anchor="middle">n={bar["total"]}</text>'
            )
        parts.append(
            f'<text x="{_fmt(gx + group_w / 2)}" y="{_fmt(top + plot_h + 46)}" font-size="12" '
            f'font-family="sans-serif" text-anchor="middle">{_esc(party)}</text>'
        )
    parts.extend(_legend(left + len(parties) * (group_w + group_gap) + 16, top))
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def marimekko_data(matrix: BandMatrix) -> dict:
    """Raw mosaic data: column width share per band, stacked class shares."""
    total = matrix.included_total
    columns = []
    for band in BAND_TOKENS:
        band_total = matrix.band_totals[band]
        columns.append(
            {
                "band": band,
                "count": band_total,
                "width": (band_total / total) if total else 0.0,
                "segments": matrix.proportions[band],
            }
        )
    return {
        "kind": "marimekko",
        "country": matrix.country,
        "provider": matrix.provider,
        "classes": list(BARRIER_TOKENS),
        "included_total": total,
        "excluded_unavailable": matrix.excluded_unavailable,
        "excluded_pending": matrix.excluded_pending,
        "columns": columns,
    }


def marimekko_svg(matrix: BandMatrix) -> str:
    """Band × class mosaic: column widths ∝ band totals, stacks ∝ class shares."""
    return marimekko_svg_from_data(marimekko_data(matrix))


def marimekko_svg_from_data(data: dict) -> str:
    """Render the Marimekko SVG from a ``marimekko_data`` dict."""
    plot_w, plot_h, top, left = 460.0, 280.0, 36.0, 20.0
    width, height = left + plot_w + 160, top + plot_h + 60
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_fmt(width)}" '
        f'height="{_fmt(height)}" viewBox="0 0 {_fmt(width)} {_fmt(height)}">',
        f'<rect x="0" y="0" width="{_fmt(width)}" height="{_fmt(height)}" fill="white"/>',
        f'<text x="{_fmt(left)}" y="20" font-size="14" font-family="sans-serif" '
        f'font-weight="bold">Similarity band × barrier class — '
        f"{_esc(data['country'])} / {_esc(data['provider'])}</text>",
    ]
    if data["included_total"] == 0:
        parts.append(
            f'<text x="{_fmt(left)}" y="{_fmt(top + 40)}" font-size="12" '
            f'font-family="sans-serif">no included citations</text>'
        )
    x_cursor = left
    for column in data["columns"]:
        band = column["band"]
        col_w = plot_w * column["width"]
        if col_w > 0:
            y_cursor = top + plot_h
            for token in BARRIER_TOKENS:
                frac = column["segments"].get(token, 0.0)
                seg_h = plot_h * frac
                y_cursor -= seg_h
                if seg_h > 0:
                    parts.append(
                        f'<rect x="{_fmt(x_cursor)}" y="{_fmt(y_cursor)}" '
                        f'width="{_fmt(col_w)}" height="{_fmt(seg_h)}" '
                        f'fill="{BARRIER_COLORS[token]}" stroke="white" stroke-width="1">'
                        f"<title>{_esc(f'{band} {token}: {frac:.3f}')}</title></rect>"
                    )
        label_x = x_cursor + max(col_w, 1.0) / 2
        parts.append(
            f'<text x="{_fmt(label_x)}" y="{_fmt(top + plot_h + 16)}" font-size="11" '
            f'font-family="sans-serif" text-anchor="middle">'
            f"{_esc(BAND_LABELS[band])}</text>"
        )
        parts.append(
            f'<text x="{_fmt(label_x)}" y="{_fmt(top + plot_h + 30)}" font-size="10" '
            f'font-family="sans-serif" text-anchor="middle">n={column["count"]}</text>'
        )
        x_cursor += col_w
    parts.append(
        f'<text x="{_fmt(left)}" y="{_fmt(top + plot_h + 48)}" font-size="10" '
        f'font-family="sans-serif">excluded: {data["excluded_unavailable"]} unavailable, '
        f'{data["excluded_pending"]} pending</text>'
    )
    parts.extend(_legend(left + plot_w + 24, top))
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
