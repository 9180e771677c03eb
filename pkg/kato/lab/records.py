from __future__ import annotations

from dataclasses import asdict, dataclass, fields

from msgpack import packb, unpackb

# column order of the sweep CSV
SWEEP_COLUMNS = (
    "nu",
    "e1_final",
    "e2_final",
    "e_sup",
    "kato_d",
    "diss_total",
    "gronwall_max_violation",
    "wall_clock",
)


@dataclass(frozen=True)
class SweepRecord:
    """
    Outcome of one viscous run.

    Attributes:
        nu (float): Viscosity.
        e1_final (float): e1 at the horizon.
        e2_final (float): e2 at the horizon.
        e_sup (float): Largest e_total over the samples.
        kato_d (float): Layer dissipation up to the horizon.
        diss_total (float): Total dissipation up to the horizon.
        gronwall_max_violation (float): Largest excess of E over its Gronwall bound.
        wall_clock (float): Seconds spent in the run.
        grid (str): Grid descriptor.
        energy_deficit (float): Kinetic energy lost beyond the recorded dissipation.
    """

    nu: float
    e1_final: float
    e2_final: float
    e_sup: float
    kato_d: float
    diss_total: float
    gronwall_max_violation: float
    wall_clock: float
    grid: str = ""
    energy_deficit: float = 0.0

    def __post_init__(self) -> None:
        if not self.nu > 0:
            raise ValueError(f"nu must be positive, got {self.nu}")
        for name in ("e1_final", "e2_final", "e_sup", "kato_d", "diss_total"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative, got {getattr(self, name)}")
        if self.kato_d > self.diss_total:
            raise ValueError(f"kato_d {self.kato_d} exceeds diss_total {self.diss_total}")

    def dictify(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> SweepRecord:
        known = {entry.name for entry in fields(cls)}
        return cls(**{key: value for key, value in data.items() if key in known})

    def row(self) -> dict:
        return {column: getattr(self, column) for column in SWEEP_COLUMNS}

    @classmethod
    def from_row(cls, row: dict[str, str]) -> SweepRecord:
        """Rebuild from a sweep CSV row; the grid descriptor is not part of the CSV."""
        return cls(**{column: float(row[column]) for column in SWEEP_COLUMNS})

    def serialize(self) -> bytes:
        return packb(self.dictify())

    @classmethod
    def deserialize(cls, serialized: bytes) -> SweepRecord:
        return cls.from_dict(unpackb(serialized))
