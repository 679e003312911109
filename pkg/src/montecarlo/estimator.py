from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from loguru import logger

from src.config.settings import settings
from src.core.point import PARAMETER_NAMES
from src.data.point_loader import write_points_frame
from src.geometry.metric import VolumeElementCase, volume_element_batch
from src.montecarlo.sampler import Chunking, acceptance_reference, sample_chunk
from src.regions.predicates import Intersection, Region
from src.schemas.reports import (
    CaseName,
    ChunkingDescriptor,
    EstimateReport,
    LabeledValue,
    Provenance,
    SubsampleRecord,
)
from src.utils.exceptions import InvalidParameters, NonConvergence

# Published values, keyed by (case, region name)
REFERENCE_VALUES: Dict[Tuple[str, str], List[LabeledValue]] = {
    ("general", "ppt-oracle"): [
        LabeledValue(name="published general-case PPT probability", value=0.0963689, provenance=Provenance.PAPER),
    ],
    ("qubit", "ppt-oracle"): [
        LabeledValue(name="published qubit-case biseparable probability (PPT at d=2)", value=0.216769,
                     provenance=Provenance.PAPER),
    ],
    ("general", "bisep_necessary"): [
        LabeledValue(name="exact bound r_minus <= 1/3", value=0.825312, provenance=Provenance.PAPER),
        LabeledValue(name="published general-case biseparable probability (full constraints)", value=0.0694443,
                     provenance=Provenance.PAPER,
                     note="shipped spec holds a necessary condition only; this estimate upper-bounds the published value"),
    ],
    ("general", "trisep_quoted"): [
        LabeledValue(name="published general-case triseparable probability (full constraints)", value=0.0142526,
                     provenance=Provenance.PAPER,
                     note="text elsewhere quotes .0165952; shipped spec holds necessary conditions only"),
    ],
    ("qubit", "trisep_quoted_qubit"): [
        LabeledValue(name="published qubit-case triseparable probability (full constraints)", value=0.0630532,
                     provenance=Provenance.PAPER, note="shipped spec holds necessary conditions only"),
    ],
}


@dataclass
class ChunkTally:
    """Weighted sums of one chunk; merged in chunk order"""

    n_raw: int
    accepted: int = 0
    discarded_singular: int = 0
    weight_sum: float = 0.0
    region_weight_sums: List[float] = field(default_factory=list)
    dump: Optional[pd.DataFrame] = None


def _tally_chunk(
    regions: Sequence[Region],
    given: Optional[Region],
    case: VolumeElementCase,
    size: int,
    seed: int,
    subsample: int,
    chunk: int,
    dump_points: bool,
) -> ChunkTally:
    points = sample_chunk(case, size, seed, subsample, chunk)
    n_valid = len(points)
    weights, singular = volume_element_batch(points, case)
    points, weights = points[~singular], weights[~singular]
    if given is not None:
        keep = given.contains(points)
        points, weights = points[keep], weights[keep]

    tally = ChunkTally(n_raw=size, accepted=n_valid, discarded_singular=int(singular.sum()))
    tally.weight_sum = float(np.sum(weights))
    for region in regions:
        tally.region_weight_sums.append(float(np.sum(weights[region.contains(points)])) if len(points) else 0.0)
    if dump_points:
        frame = pd.DataFrame(points, columns=list(PARAMETER_NAMES))
        frame["weight"] = weights
        tally.dump = frame
    return tally


def pooled_stddev(estimates: Sequence[float]) -> float:
    """Bias-adjusted standard deviation sqrt(sum (x - mean)^2 / (n - 1))"""
    values = np.asarray(estimates, dtype=float)
    if len(values) < 2:
        raise InvalidParameters(f"pooled_stddev needs at least two estimates, got {len(values)}")
    return float(np.std(values, ddof=1))


def _run_tallies(
    regions: Sequence[Region],
    given: Optional[Region],
    case: VolumeElementCase,
    subsamples: int,
    n_raw_per: int,
    seed: int,
    workers: int,
    chunk_size: int,
    dump_points: bool,
) -> List[List[ChunkTally]]:
    chunking = Chunking(n_raw_per, chunk_size)
    jobs = [
        (s, c, size)
        for s in range(subsamples)
        for c, size in enumerate(chunking.sizes())
    ]
    logger.info(
        f"sampling {subsamples} subsample(s) x {n_raw_per} raw draws in {len(jobs)} chunk(s) "
        f"with {workers} worker(s)"
    )
    tallies = Parallel(n_jobs=workers)(
        delayed(_tally_chunk)(regions, given, case, size, seed, s, c, dump_points) for s, c, size in jobs
    )
    per_subsample: List[List[ChunkTally]] = [[] for _ in range(subsamples)]
    for (s, _, _), tally in zip(jobs, tallies):
        per_subsample[s].append(tally)
    return per_subsample


def estimate_probabilities(
    regions: Sequence[Region],
    case: VolumeElementCase,
    subsamples: Optional[int] = None,
    n_raw_per: Optional[int] = None,
    seed: Optional[int] = None,
    workers: Optional[int] = None,
    chunk_size: Optional[int] = None,
    given: Optional[Region] = None,
    dump_path: Optional[Union[str, Path]] = None,
) -> List[EstimateReport]:
    """
    SD-weighted probabilities of several regions from one shared sample

    Each accepted point carries the volume element as weight; per subsample the
    probability of a region is its weight sum over the total weight sum. With
    given, both sums are restricted to that region (conditional probability).

    Raises:
        NonConvergence: some subsample has zero accepted weight
    """
    case = VolumeElementCase(case)
    subsamples = settings.subsamples if subsamples is None else subsamples
    n_raw_per = settings.points_per_subsample if n_raw_per is None else n_raw_per
    seed = settings.default_seed if seed is None else seed
    workers = settings.default_workers if workers is None else workers
    chunk_size = settings.chunk_size if chunk_size is None else chunk_size
    if subsamples < 1:
        raise InvalidParameters(f"subsamples must be at least 1, got {subsamples}")
    for region in regions:
        if region.case is not case:
            raise InvalidParameters(f"region '{region.name}' is {region.case.value}-case, sampling {case.value}")

    per_subsample = _run_tallies(
        regions, given, case, subsamples, n_raw_per, seed, workers, chunk_size, dump_path is not None
    )

    records: List[List[SubsampleRecord]] = [[] for _ in regions]
    totals = np.zeros(len(regions))
    total_weight = 0.0
    n_raw = accepted = 0
    for index, tallies in enumerate(per_subsample):
        weight = sum(t.weight_sum for t in tallies)
        region_weights = [sum(t.region_weight_sums[k] for t in tallies) for k in range(len(regions))]
        sub_accepted = sum(t.accepted for t in tallies)
        singular = sum(t.discarded_singular for t in tallies)
        if weight <= 0.0:
            raise NonConvergence(f"subsample {index} has no accepted weight; increase the number of draws")
        if singular:
            logger.warning(f"subsample {index}: discarded {singular} point(s) on the singular set")
        for k, region_weight in enumerate(region_weights):
            records[k].append(SubsampleRecord(
                index=index,
                n_raw=n_raw_per,
                accepted=sub_accepted,
                discarded_singular=singular,
                weight_sum=weight,
                region_weight_sum=region_weight,
                probability=region_weight / weight,
            ))
        logger.info(
            f"subsample {index}: accepted {sub_accepted}/{n_raw_per} "
            + " ".join(f"{r.name}={w / weight:.7f}" for r, w in zip(regions, region_weights))
        )
        totals += region_weights
        total_weight += weight
        n_raw += n_raw_per
        accepted += sub_accepted

    if dump_path is not None:
        frames = [t.dump for tallies in per_subsample for t in tallies]
        write_points_frame(pd.concat(frames, ignore_index=True), dump_path)

    rate, stderr = acceptance_reference(case, n_raw)
    reference = LabeledValue(
        name="analytic acceptance rate", value=rate, provenance=Provenance.DERIVED,
        note=f"binomial standard error {stderr!r} at {n_raw} draws",
    )
    chunking = ChunkingDescriptor(chunk_size=chunk_size, chunks_per_subsample=Chunking(n_raw_per, chunk_size).n_chunks)

    reports = []
    for k, region in enumerate(regions):
        probabilities = [r.probability for r in records[k]]
        reports.append(EstimateReport(
            case=CaseName(case.value),
            region=region.name,
            given=given.name if given is not None else None,
            necessary_only=region.necessary_only,
            subsamples=records[k],
            pooled_probability=LabeledValue(
                name=f"P({region.name} | {given.name})" if given is not None else f"P({region.name})",
                value=float(totals[k] / total_weight),
                provenance=Provenance.ESTIMATE,
                note=f"pooled over {len(probabilities)} subsamples of {n_raw_per} draws",
            ),
            bias_adjusted_stddev=pooled_stddev(probabilities) if len(probabilities) > 1 else None,
            acceptance_rate=accepted / n_raw,
            acceptance_reference=reference,
            seed=seed,
            chunking=chunking,
            references=[] if given is not None else REFERENCE_VALUES.get((case.value, region.name), []),
        ))
    logger.success(
        "pooled: " + " ".join(f"{r.region}={r.probability:.7f}" for r in reports)
    )
    return reports


def estimate_probability(
    region: Region,
    case: VolumeElementCase,
    subsamples: Optional[int] = None,
    n_raw_per: Optional[int] = None,
    seed: Optional[int] = None,
    workers: Optional[int] = None,
    chunk_size: Optional[int] = None,
    dump_path: Optional[Union[str, Path]] = None,
) -> EstimateReport:
    """Single-region form of estimate_probabilities()"""
    return estimate_probabilities(
        [region], case, subsamples, n_raw_per, seed, workers, chunk_size, dump_path=dump_path
    )[0]


def conditional_probability(
    region: Region,
    given: Region,
    case: VolumeElementCase,
    subsamples: Optional[int] = None,
    n_raw_per: Optional[int] = None,
    seed: Optional[int] = None,
    workers: Optional[int] = None,
    chunk_size: Optional[int] = None,
) -> EstimateReport:
    """P(region | given) under the SD measure, from the same weighted sample"""
    return estimate_probabilities(
        [Intersection(region, given)], case, subsamples, n_raw_per, seed, workers, chunk_size, given=given
    )[0]
