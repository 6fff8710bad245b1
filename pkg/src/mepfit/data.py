"""Dataset ingestion, validation, and indexing.

Observations live in long format: one row per (participant, condition,
group, muscle, intensity, MEP size).  ``condition`` and ``group`` are
optional columns; wide files with one column per muscle are melted on load.
MEP sizes must be strictly positive and intensities non-negative; rows that
violate these invariants are dropped, each with a row-numbered diagnostic.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from .errors import (
    EmptyDataError,
    MissingColumnError,
    NonPositiveMepError,
    UnknownGroupAssignmentError,
)

CANONICAL_COLUMNS = ("participant", "condition", "group", "muscle", "intensity", "mep_size")


@dataclass(frozen=True)
class DatasetSummary:
    n_participants: int
    n_muscles: int
    n_conditions: int
    n_groups: int
    observations_per_participant: dict[str, int]
    intensity_range_per_participant: dict[str, tuple[float, float]]
    counts_per_cell: dict[tuple, int]


@dataclass
class MepDataset:
    """Validated long-format MEP observations with integer index columns.

    Label lists are sorted (or follow a configured explicit order), and the
    first condition label is the designated baseline.
    """

    participants: list[str]
    muscles: list[str]
    conditions: list[str] | None
    groups: list[str] | None
    participant_idx: np.ndarray
    muscle_idx: np.ndarray
    condition_idx: np.ndarray | None
    group_of_participant: np.ndarray | None
    intensity: np.ndarray
    mep_size: np.ndarray
    diagnostics: list[str] = field(default_factory=list)
    units: str = "arbitrary"

    @property
    def n_obs(self) -> int:
        return int(self.intensity.shape[0])

    @property
    def baseline_condition(self) -> str | None:
        return self.conditions[0] if self.conditions else None

    def to_frame(self) -> pd.DataFrame:
        cols = {"participant": [self.participants[i] for i in self.participant_idx]}
        if self.conditions is not None:
            cols["condition"] = [self.conditions[i] for i in self.condition_idx]
        if self.groups is not None:
            cols["group"] = [
                self.groups[self.group_of_participant[i]] for i in self.participant_idx
            ]
        cols["muscle"] = [self.muscles[i] for i in self.muscle_idx]
        cols["intensity"] = self.intensity
        cols["mep_size"] = self.mep_size
        return pd.DataFrame(cols)

    def to_csv(self, path) -> None:
        self.to_frame().to_csv(path, index=False, lineterminator="\n")

    def subset_participants(self, labels: list[str]) -> "MepDataset":
        """Rows belonging to the given participants, preserving row order."""
        keep_ids = {self.participants.index(lab) for lab in labels}
        mask = np.isin(self.participant_idx, sorted(keep_ids))
        return _from_arrays(
            participants=[self.participants[i] for i in self.participant_idx[mask]],
            conditions=(
                [self.conditions[i] for i in self.condition_idx[mask]]
                if self.conditions is not None
                else None
            ),
            groups=(
                [self.groups[self.group_of_participant[i]] for i in self.participant_idx[mask]]
                if self.groups is not None
                else None
            ),
            muscles=[self.muscles[i] for i in self.muscle_idx[mask]],
            intensity=self.intensity[mask],
            mep_size=self.mep_size[mask],
            condition_order=self.conditions,
            units=self.units,
        )


def from_rows(
    participants,
    muscles,
    intensity,
    mep_size,
    conditions=None,
    groups=None,
    condition_order=None,
    units="arbitrary",
) -> MepDataset:
    """Build a dataset from parallel sequences (used by simulators and tests)."""
    return _from_arrays(
        participants=list(participants),
        conditions=list(conditions) if conditions is not None else None,
        groups=list(groups) if groups is not None else None,
        muscles=list(muscles),
        intensity=np.asarray(intensity, dtype=float),
        mep_size=np.asarray(mep_size, dtype=float),
        condition_order=condition_order,
        units=units,
    )


def _from_arrays(
    participants,
    conditions,
    groups,
    muscles,
    intensity,
    mep_size,
    condition_order=None,
    units="arbitrary",
    diagnostics=None,
) -> MepDataset:
    n = len(participants)
    if n == 0:
        raise EmptyDataError("dataset has no valid observations")
    p_labels = sorted(set(participants))
    m_labels = sorted(set(muscles))
    p_map = {lab: i for i, lab in enumerate(p_labels)}
    m_map = {lab: i for i, lab in enumerate(m_labels)}
    p_idx = np.fromiter((p_map[x] for x in participants), dtype=np.intp, count=n)
    m_idx = np.fromiter((m_map[x] for x in muscles), dtype=np.intp, count=n)

    c_labels = None
    c_idx = None
    if conditions is not None:
        seen = set(conditions)
        if condition_order is not None:
            c_labels = [c for c in condition_order if c in seen]
            missing = seen.difference(c_labels)
            if missing:
                c_labels = c_labels + sorted(missing)
        else:
            c_labels = sorted(seen)
        c_map = {lab: i for i, lab in enumerate(c_labels)}
        c_idx = np.fromiter((c_map[x] for x in conditions), dtype=np.intp, count=n)

    g_labels = None
    g_of_p = None
    if groups is not None:
        g_labels = sorted(set(groups))
        g_map = {lab: i for i, lab in enumerate(g_labels)}
        g_of_p = np.full(len(p_labels), -1, dtype=np.intp)
        for lab, grp in zip(participants, groups):
            gi = g_map[grp]
            pi = p_map[lab]
            if g_of_p[pi] == -1:
                g_of_p[pi] = gi
            elif g_of_p[pi] != gi:
                raise UnknownGroupAssignmentError(
                    f"participant {lab!r} assigned to multiple groups"
                )

    return MepDataset(
        participants=p_labels,
        muscles=m_labels,
        conditions=c_labels,
        groups=g_labels,
        participant_idx=p_idx,
        muscle_idx=m_idx,
        condition_idx=c_idx,
        group_of_participant=g_of_p,
        intensity=np.asarray(intensity, dtype=float),
        mep_size=np.asarray(mep_size, dtype=float),
        diagnostics=diagnostics or [],
        units=units,
    )


def load_csv(path_or_buffer, schema: dict | None = None, strict: bool = False) -> MepDataset:
    """Load and validate a dataset from CSV.

    ``schema`` may rename columns (keys of ``CANONICAL_COLUMNS`` mapped to
    the file's column names), declare ``wide_muscles`` (a list of columns,
    one per muscle, melted into long format), fix a ``condition_order``
    (first entry is the baseline), and set ``units``.

    Rows with non-positive MEP size, negative intensity, or unparseable
    numbers are dropped and reported in ``dataset.diagnostics`` (one entry
    per offending row); with ``strict=True`` the first such row raises.
    """
    schema = dict(schema or {})
    rename = {
        schema.get(canon, canon): canon
        for canon in CANONICAL_COLUMNS
        if schema.get(canon, canon) is not None
    }
    frame = pd.read_csv(path_or_buffer, dtype=str, keep_default_na=False)
    frame = frame.rename(columns=rename)

    wide_muscles = schema.get("wide_muscles")
    if wide_muscles:
        missing = [c for c in wide_muscles if c not in frame.columns]
        if missing:
            raise MissingColumnError(f"wide-format muscle columns missing: {missing}")
        id_cols = [
            c for c in ("participant", "condition", "group", "intensity") if c in frame.columns
        ]
        frame = frame.melt(
            id_vars=id_cols,
            value_vars=list(wide_muscles),
            var_name="muscle",
            value_name="mep_size",
        )

    for required in ("participant", "muscle", "intensity", "mep_size"):
        if required not in frame.columns:
            raise MissingColumnError(f"required column {required!r} not found")

    known = [c for c in CANONICAL_COLUMNS if c in frame.columns]
    extra = [c for c in frame.columns if c not in known]
    diagnostics = []
    if extra:
        diagnostics.append(f"ignoring columns: {', '.join(sorted(extra))}")

    has_condition = "condition" in frame.columns
    has_group = "group" in frame.columns

    keep_participant, keep_condition, keep_group, keep_muscle = [], [], [], []
    keep_x, keep_y = [], []
    for row_number, row in enumerate(frame.itertuples(index=False), start=2):
        record = dict(zip(frame.columns, row))
        try:
            x = float(record["intensity"])
            y = float(record["mep_size"])
        except ValueError:
            diagnostics.append(f"row {row_number}: non-numeric intensity or mep_size")
            if strict:
                raise NonPositiveMepError(f"row {row_number}: non-numeric value")
            continue
        if not np.isfinite(y) or y <= 0.0:
            diagnostics.append(f"row {row_number}: mep_size must be > 0 (got {record['mep_size']})")
            if strict:
                raise NonPositiveMepError(f"row {row_number}: mep_size must be > 0")
            continue
        if not np.isfinite(x) or x < 0.0:
            diagnostics.append(f"row {row_number}: intensity must be >= 0 (got {record['intensity']})")
            if strict:
                raise NonPositiveMepError(f"row {row_number}: intensity must be >= 0")
            continue
        keep_participant.append(record["participant"])
        keep_muscle.append(record["muscle"])
        keep_x.append(x)
        keep_y.append(y)
        if has_condition:
            keep_condition.append(record["condition"])
        if has_group:
            keep_group.append(record["group"])

    return _from_arrays(
        participants=keep_participant,
        conditions=keep_condition if has_condition else None,
        groups=keep_group if has_group else None,
        muscles=keep_muscle,
        intensity=np.asarray(keep_x, dtype=float),
        mep_size=np.asarray(keep_y, dtype=float),
        condition_order=schema.get("condition_order"),
        units=schema.get("units", "arbitrary"),
        diagnostics=diagnostics,
    )


def dumps_csv(dataset: MepDataset) -> str:
    buf = io.StringIO()
    dataset.to_csv(buf)
    return buf.getvalue()


def summarize(dataset: MepDataset) -> DatasetSummary:
    """Exact counts and per-participant intensity ranges."""
    if dataset.n_obs == 0:
        raise EmptyDataError("cannot summarize an empty dataset")
    obs_per_p = {}
    range_per_p = {}
    for i, lab in enumerate(dataset.participants):
        mask = dataset.participant_idx == i
        obs_per_p[lab] = int(np.sum(mask))
        xs = dataset.intensity[mask]
        range_per_p[lab] = (float(xs.min()), float(xs.max()))
    counts = {}
    for row in range(dataset.n_obs):
        key = [dataset.participants[dataset.participant_idx[row]]]
        if dataset.conditions is not None:
            key.append(dataset.conditions[dataset.condition_idx[row]])
        key.append(dataset.muscles[dataset.muscle_idx[row]])
        key = tuple(key)
        counts[key] = counts.get(key, 0) + 1
    return DatasetSummary(
        n_participants=len(dataset.participants),
        n_muscles=len(dataset.muscles),
        n_conditions=len(dataset.conditions) if dataset.conditions else 0,
        n_groups=len(dataset.groups) if dataset.groups else 0,
        observations_per_participant=obs_per_p,
        intensity_range_per_participant=range_per_p,
        counts_per_cell=counts,
    )
