"""Plotly figures for finished runs: running-average costs and per-file allocation."""

from __future__ import annotations

from typing import Mapping, Optional, Sequence

import plotly.graph_objects as go

COLORS = [
    "#3498db", "#e74c3c", "#2ecc71", "#f39c12",
    "#9b59b6", "#1abc9c", "#e67e22", "#34495e",
]


def running_average_figure(
    metrics: Mapping[str, Mapping[str, Sequence[float]]],
    hindsight_average: Optional[float] = None,
    title: str = "Running average cost",
    height: int = 420,
) -> go.Figure:
    """One line per policy from ``read_metrics_csv`` output."""
    fig = go.Figure()
    for i, (name, columns) in enumerate(metrics.items()):
        fig.add_trace(go.Scatter(
            x=list(columns["slot"]),
            y=list(columns["running_avg"]),
            mode="lines",
            name=name,
            line=dict(color=COLORS[i % len(COLORS)], width=2),
        ))

    if hindsight_average is not None:
        fig.add_hline(
            y=hindsight_average,
            line_dash="dash",
            line_color="black",
            annotation_text=f"Best static: {hindsight_average:.3f}",
        )

    fig.update_layout(
        title=title,
        xaxis_title="Slot",
        yaxis_title="Cost per request",
        height=height,
        margin=dict(l=40, r=20, t=40, b=40),
        legend=dict(orientation="h", yanchor="bottom", y=1.02),
        template="plotly_white",
    )
    return fig


def allocation_figure(
    allocations: Mapping[str, Sequence[float]],
    slot: int,
    height: int = 420,
) -> go.Figure:
    """Total cached fraction per file, one bar group per policy."""
    fig = go.Figure()
    for i, (name, totals) in enumerate(allocations.items()):
        fig.add_trace(go.Bar(
            x=list(range(len(totals))),
            y=list(totals),
            name=name,
            marker_color=COLORS[i % len(COLORS)],
        ))

    fig.update_layout(
        title=f"Total cache capacity per file at t={slot}",
        xaxis_title="File",
        yaxis_title="Cached fraction (summed over devices)",
        barmode="group",
        height=height,
        margin=dict(l=40, r=20, t=40, b=40),
        legend=dict(orientation="h", yanchor="bottom", y=1.02),
        template="plotly_white",
    )
    return fig
