"""Deflected-path length study.

For sampled deflections the interesting quantity is how many exchange
points the traffic touches once deflected: the site where the deflection
happens plus every fabric the target's route crosses afterwards.  Short
spans keep loop checks cheap, so the study compares the span distribution
of relationship-preserving deflections against unrestricted ones.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from pathlib import Path

from ..bgpsim import (
    DeflectionPolicy,
    compute_routes,
    generate_topology,
    gr_compliant,
    traversed_sdxes,
)
from ..rules import FlowSpec, PROTO_TCP, encode
from .config import ExperimentConfig
from .results import write_csv

PATHLEN_COLUMNS = ("experiment", "mode", "sdx_count", "cumulative",
                   "samples")

_PROBE_RULE = encode(FlowSpec(ip_proto=PROTO_TCP, dst_port=80))


@dataclass(frozen=True)
class CdfPoint:
    mode: str
    sdx_count: int
    cumulative: float
    samples: int


def sdx_span(origin_sdx: int, path, sites) -> int:
    """Number of distinct exchanges a deflected path touches."""
    return len({origin_sdx} | set(traversed_sdxes(path, sites)))


def _cdf(mode: str, counts: list[int]) -> list[CdfPoint]:
    points = []
    total = len(counts)
    running = 0
    for value in range(1, max(counts) + 1):
        running += sum(1 for c in counts if c == value)
        points.append(CdfPoint(mode, value, running / total, total))
    return points


def collect_spans(cfg: ExperimentConfig) -> dict[str, list[int]]:
    """Sample deflections and bucket their spans by compliance mode.

    Relationship-preserving deflections are a small minority of the draw,
    so sampling keeps going past the random quota until the gr bucket has
    enough points for a stable curve (or an attempt cap is hit).
    """
    graph, sites = generate_topology(cfg.n_as, cfg.n_sdx, cfg.seed,
                                     sdx_size_range=cfg.pathlen_site_size)
    rng = random.Random(f"pathlen:{cfg.seed}")
    origins = rng.sample(graph.as_ids, cfg.n_prefixes)
    ribs = {f"198.51.{i}.0/24": compute_routes(graph, origin)
            for i, origin in enumerate(origins)}
    prefixes = sorted(ribs)

    spans: dict[str, list[int]] = {"gr": [], "random": []}
    gr_quota = max(30, cfg.pathlen_samples // 10)
    attempts = 0
    while ((len(spans["random"]) < cfg.pathlen_samples
            or len(spans["gr"]) < gr_quota)
           and attempts < 200 * cfg.pathlen_samples):
        attempts += 1
        site = rng.choice(sites)
        owner, target = rng.sample(sorted(site.members), 2)
        prefix = rng.choice(prefixes)
        rib = ribs[prefix]
        if rib.get(target) is None:
            continue
        route = rib.get(owner)
        if route is not None and route.next_hop == target:
            continue
        policy = DeflectionPolicy(owner=owner, sdx_id=site.sdx_id,
                                  rule=_PROBE_RULE, deflect_to=target,
                                  prefix=prefix)
        span = sdx_span(site.sdx_id, rib.path(target), sites)
        if len(spans["random"]) < cfg.pathlen_samples:
            spans["random"].append(span)
        if gr_compliant(policy, rib, graph):
            spans["gr"].append(span)
    return spans


def run_pathlen(cfg: ExperimentConfig) -> list[Path]:
    cfg = cfg.validated()
    spans = collect_spans(cfg)
    records = []
    for mode in sorted(spans):
        if not spans[mode]:
            continue
        for point in _cdf(mode, spans[mode]):
            records.append({
                "experiment": "pathlen",
                "mode": point.mode,
                "sdx_count": str(point.sdx_count),
                "cumulative": f"{point.cumulative:.6f}",
                "samples": str(point.samples),
            })
    out = write_csv(Path(cfg.out_dir) / "pathlen.csv", PATHLEN_COLUMNS,
                    records)
    return [out]
