"""Experiment configuration: presets for desk and paper scale, JSON io."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field

from ..solvers import SolverConfig

SCENARIO_RECOVERY = "recovery-grid"
SCENARIO_DETECTION = "block-detection"
SCENARIO_THEOREM = "theorem-verify"
SCENARIOS = (SCENARIO_RECOVERY, SCENARIO_DETECTION, SCENARIO_THEOREM)


@dataclass
class ExperimentConfig:
    """One Monte Carlo run.

    M may be a single antenna count or a sequence of them (the block
    detection scenario sweeps several).  block_lengths is either one
    uniform length or an explicit per-block list.  For theorem-verify the
    dimension fields act as sampler upper bounds rather than exact sizes.
    """

    scenario: str
    M: tuple[int, ...] = (12,)
    N: int = 16
    m: int = 16
    block_lengths: tuple[int, ...] | int = 32
    s_values: tuple[int, ...] = (1,)
    sigma_values: tuple[int, ...] = (1,)
    snr_db: tuple[float, ...] = (10.0,)
    trials: int = 20
    master_seed: int = 20240601
    solver: SolverConfig = field(default_factory=SolverConfig)
    output_path: str | None = None
    # block-detection extras: which blocks have short delay spreads and how
    # short; None designates the first N//2 blocks.
    front_width: int = 10
    short_blocks: tuple[int, ...] | None = None
    # wall_millis is zeroed in trials.csv unless this is set, keeping two
    # identical runs byte-identical.
    measured_timing: bool = False

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ValueError(f"unknown scenario {self.scenario!r}")
        if isinstance(self.M, int):
            self.M = (self.M,)
        else:
            self.M = tuple(int(v) for v in self.M)
        self.s_values = tuple(int(v) for v in self.s_values)
        self.sigma_values = tuple(int(v) for v in self.sigma_values)
        self.snr_db = tuple(float(v) for v in self.snr_db)
        if not isinstance(self.block_lengths, int):
            self.block_lengths = tuple(int(v) for v in self.block_lengths)
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if min(self.M) < 1 or self.N < 1 or self.m < 1:
            raise ValueError("dimensions must be positive")

    def block_sizes(self) -> tuple[int, ...]:
        if isinstance(self.block_lengths, int):
            return (self.block_lengths,) * self.N
        if len(self.block_lengths) != self.N:
            raise ValueError("explicit block_lengths must have N entries")
        return self.block_lengths

    def designated_short_blocks(self) -> tuple[int, ...]:
        if self.short_blocks is not None:
            return tuple(sorted(self.short_blocks))
        return tuple(range(self.N // 2))

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = dict(d)
        solver = d.pop("solver", None)
        if solver is not None and not isinstance(solver, SolverConfig):
            solver = SolverConfig(**solver)
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        if solver is not None:
            d["solver"] = solver
        return cls(**d)

    def to_json(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def desk_recovery_grid() -> ExperimentConfig:
    """CI-sized recovery phase diagram (a couple of seconds per cell)."""
    return ExperimentConfig(
        scenario=SCENARIO_RECOVERY,
        M=(12,),
        N=16,
        m=16,
        block_lengths=32,
        s_values=(1, 2, 4, 8, 16),
        sigma_values=(1, 2, 4, 8, 16),
        snr_db=(10.0,),
        trials=20,
    )


def paper_recovery_grid() -> ExperimentConfig:
    """Full-size noisy recovery grid: 2000 measurements of 5000 unknowns,
    block counts 1..25 against in-block sparsities 1..20 at 10 dB."""
    return ExperimentConfig(
        scenario=SCENARIO_RECOVERY,
        M=(40,),
        N=50,
        m=50,
        block_lengths=100,
        s_values=tuple(range(1, 26)),
        sigma_values=tuple(range(1, 21)),
        snr_db=(10.0,),
        trials=50,
    )


def desk_block_detection() -> ExperimentConfig:
    """CI-sized active-block detection with mixed block lengths."""
    return ExperimentConfig(
        scenario=SCENARIO_DETECTION,
        M=(4, 8),
        N=8,
        m=16,
        block_lengths=40,
        s_values=(3,),
        sigma_values=(2,),
        snr_db=(0.0, 10.0),
        trials=8,
        front_width=6,
    )


def paper_block_detection() -> ExperimentConfig:
    """Active-block detection at full scale: 20 users, 50 probed
    frequencies, budget (6, 5), antenna sweep 10..40, SNR down to -10 dB;
    half the users have their energy in the first 10 taps."""
    return ExperimentConfig(
        scenario=SCENARIO_DETECTION,
        M=(10, 20, 30, 40),
        N=20,
        m=50,
        block_lengths=200,
        s_values=(6,),
        sigma_values=(5,),
        snr_db=(-10.0, 0.0, 10.0, 20.0),
        trials=50,
        front_width=10,
    )


def desk_theorem_verify(instances: int = 200) -> ExperimentConfig:
    """Random-instance verification of the isometry bounds; the dimension
    fields are upper bounds for the instance sampler."""
    return ExperimentConfig(
        scenario=SCENARIO_THEOREM,
        M=(10,),
        N=10,
        m=12,
        block_lengths=6,
        s_values=(3,),
        sigma_values=(2,),
        trials=instances,
    )


def preset(scenario: str, paper_scale: bool = False) -> ExperimentConfig:
    if scenario == SCENARIO_RECOVERY:
        return paper_recovery_grid() if paper_scale else desk_recovery_grid()
    if scenario == SCENARIO_DETECTION:
        return paper_block_detection() if paper_scale else desk_block_detection()
    if scenario == SCENARIO_THEOREM:
        return desk_theorem_verify()
    raise ValueError(f"unknown scenario {scenario!r}")
