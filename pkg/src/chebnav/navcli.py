"""
Command-line harness: simulate IMU data, run a navigation algorithm over it,
evaluate errors against truth, and time the algorithms against each other.

Every command reads an optional ``key=value`` config file whose keys are the
fields of :class:`RunConfig`; ``--set key=value`` overrides single keys.
All output is CSV; numbers are written with 17 significant digits so a
write/read cycle is exact.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import logging
import math
import statistics
import sys
import time
import typing
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np
from numpy.typing import NDArray

from . import navcore, reference
from . import quatalgebra as qa
from .earthmodel import cne, earth_rate_e, ecef2lla, lla2ecef
from .imufit import ImuBatch
from .navcore import IterationConfig, NavState
from .scenario import ScenarioSpec, attitude_from_euler, build_truth, generate_increments

log = logging.getLogger("chebnav")

ALGORITHMS = ("matrix", "naive", "twosample")
IMU_HEADER = ("t_end", "dthx", "dthy", "dthz", "dvx", "dvy", "dvz")
TRUTH_HEADER = ("t", "qs", "qx", "qy", "qz", "vx", "vy", "vz", "px", "py", "pz")
NAV_HEADER = TRUTH_HEADER + ("iters", "e_q", "e_v", "e_p")
ERROR_HEADER = ("t", "angle", "vn", "vu", "ve", "west_east", "north_south", "height")
TIME_TOL = 1e-9


class CliError(Exception):
    """Any user-facing failure; the message is printed and the exit code is 1."""


@dataclass(frozen=True)
class RunConfig:
    """
    Every setting the CLI understands. Angles are in degrees here and
    converted at the boundary; vectors are comma-separated in config files.
    """

    sample_rate: float = 100.0
    samples_per_interval: int = 8
    m_q: int = 9
    m_v: int = 9
    m_p: int = 9
    max_iters: int = 9
    tol: float = 1e-16
    algorithm: str = "matrix"
    renormalize: bool = True
    earth_rate: bool = True
    # initial state
    lon_deg: float = 0.0
    lat_deg: float = 45.0
    height: float = 100.0
    yaw_deg: float = 0.0
    pitch_deg: float = 0.0
    roll_deg: float = 0.0
    velocity_n: tuple[float, float, float] = (0.0, 0.0, 0.0)
    # scenario
    kind: str = "coning"
    half_angle_deg: float = 1.0
    coning_freq: float = 1.0
    spin_axis: tuple[float, float, float] = (0.0, 0.0, 1.0)
    spin_rate: float = 1.0
    accel_amplitude: float = 10.0
    translation_freq: float | None = None
    translation_dir: tuple[float, float, float] = (1.0, 0.0, 1.0)
    duration: float = 600.0

    def __post_init__(self) -> None:
        if self.algorithm not in ALGORITHMS:
            raise CliError(f"algorithm must be one of {ALGORITHMS}, got {self.algorithm!r}")
        if self.samples_per_interval < 2:
            raise CliError("samples_per_interval must be at least 2")
        if self.algorithm == "twosample" and self.samples_per_interval % 2:
            raise CliError("twosample needs an even samples_per_interval")
        if not self.sample_rate > 0:
            raise CliError("sample_rate must be positive")
        try:
            self.iteration_config()
        except ValueError as exc:
            raise CliError(str(exc)) from exc

    @property
    def dt(self) -> float:
        return 1.0 / self.sample_rate

    def iteration_config(self) -> IterationConfig:
        return IterationConfig(
            m_q=self.m_q,
            m_v=self.m_v,
            m_p=self.m_p,
            max_iters=self.max_iters,
            tol=self.tol,
            renormalize=self.renormalize,
        )

    def scenario(self) -> ScenarioSpec:
        try:
            return ScenarioSpec(
                kind=self.kind,
                half_angle=math.radians(self.half_angle_deg),
                coning_freq=self.coning_freq,
                spin_axis=self.spin_axis,
                spin_rate=self.spin_rate,
                lon=math.radians(self.lon_deg),
                lat=math.radians(self.lat_deg),
                height=self.height,
                yaw=math.radians(self.yaw_deg),
                pitch=math.radians(self.pitch_deg),
                roll=math.radians(self.roll_deg),
                velocity_n=self.velocity_n,
                accel_amplitude=self.accel_amplitude,
                translation_freq=self.translation_freq,
                translation_dir=self.translation_dir,
                duration=self.duration,
                sample_rate=self.sample_rate,
                include_earth_rate=self.earth_rate,
            )
        except ValueError as exc:
            raise CliError(str(exc)) from exc

    def initial_state(self) -> NavState:
        """State built from the configured position, velocity and attitude at t = 0."""
        lla = np.array([math.radians(self.lon_deg), math.radians(self.lat_deg), self.height])
        C = cne(lla)
        q_nb = attitude_from_euler(
            math.radians(self.yaw_deg), math.radians(self.pitch_deg), math.radians(self.roll_deg)
        )
        q = qa.quat_mul(qa.dcm_to_quat(C), q_nb)
        return NavState(0.0, q, C @ np.asarray(self.velocity_n, dtype=float), lla2ecef(lla))

    def earth_rate_vector(self) -> NDArray[np.float64]:
        return earth_rate_e() if self.earth_rate else np.zeros(3)


# ---------------------------------------------------------------- config


def _parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _parse_value(kind, text: str):
    text = text.strip()
    origin = typing.get_origin(kind)
    args = typing.get_args(kind)
    if origin is typing.Union or (origin is not None and type(None) in args):
        if text.lower() == "none":
            return None
        inner = next(a for a in args if a is not type(None))
        return _parse_value(inner, text)
    if kind is bool:
        return _parse_bool(text)
    if kind is int:
        return int(text)
    if kind is float:
        return float(text)
    if kind is str:
        return text
    if origin is tuple:
        parts = [p for p in text.replace(" ", "").split(",") if p]
        if len(parts) != len(args):
            raise ValueError(f"expected {len(args)} comma-separated numbers, got {text!r}")
        return tuple(float(p) for p in parts)
    raise TypeError(f"unsupported config type {kind!r}")


_FIELD_TYPES = typing.get_type_hints(RunConfig)


def parse_assignments(lines: Iterable[str], source: str) -> dict[str, object]:
    """Parse ``key=value`` lines; ``#`` starts a comment. Errors carry line numbers."""
    values: dict[str, object] = {}
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise CliError(f"{source}:{lineno}: expected key=value, got {raw.strip()!r}")
        key, text = (part.strip() for part in line.split("=", 1))
        if key not in _FIELD_TYPES:
            raise CliError(f"{source}:{lineno}: unknown config key {key!r}")
        try:
            values[key] = _parse_value(_FIELD_TYPES[key], text)
        except ValueError as exc:
            raise CliError(f"{source}:{lineno}: bad value for {key}: {exc}") from exc
    return values


def load_config(path: str | None, overrides: Sequence[str] = (), **direct) -> RunConfig:
    values: dict[str, object] = {}
    if path:
        try:
            text = Path(path).read_text().splitlines()
        except OSError as exc:
            raise CliError(f"cannot read config {path}: {exc}") from exc
        values.update(parse_assignments(text, path))
    values.update(parse_assignments(overrides, "--set"))
    values.update({k: v for k, v in direct.items() if v is not None})
    return RunConfig(**values)


def config_lines(cfg: RunConfig) -> list[str]:
    """Config file text reproducing ``cfg``."""
    out = []
    for f in dataclasses.fields(cfg):
        v = getattr(cfg, f.name)
        if isinstance(v, tuple):
            v = ",".join(_fmt(x) for x in v)
        elif isinstance(v, float):
            v = _fmt(v)
        out.append(f"{f.name}={v}")
    return out


# ---------------------------------------------------------------- CSV


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_csv(path: str | Path, header: Sequence[str], rows: Iterable[Sequence[float]]) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(x) for x in row) + "\n")


def read_csv(path: str | Path, header: Sequence[str]) -> NDArray[np.float64]:
    """Read a numeric CSV with the given header; malformed rows raise with their line number."""
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        first = next(reader, None)
        if first is None or [h.strip() for h in first] != list(header):
            raise CliError(f"{path}:1: expected header {','.join(header)}")
        rows = []
        for row in reader:
            lineno = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise CliError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
            try:
                rows.append([float(c) for c in row])
            except ValueError as exc:
                raise CliError(f"{path}:{lineno}: {exc}") from exc
    if not rows:
        raise CliError(f"{path}: no data rows")
    return np.array(rows)


def read_imu(path: str | Path, cfg: RunConfig):
    """IMU rows as ``(t_end, dtheta, dv)``, checked against the configured rate and batch size."""
    data = read_csv(path, IMU_HEADER)
    t = data[:, 0]
    steps = np.diff(np.concatenate([[t[0] - cfg.dt], t]))
    bad = np.flatnonzero(np.abs(steps - cfg.dt) > TIME_TOL * max(1.0, float(np.abs(t).max())))
    if bad.size:
        k = int(bad[0])
        raise CliError(
            f"{path}:{k + 2}: sample spacing {steps[k]:.12g} s does not match sample_rate {cfg.sample_rate:g} Hz"
        )
    N = cfg.samples_per_interval
    if data.shape[0] % N:
        raise CliError(
            f"{path}:{data.shape[0] + 1}: {data.shape[0]} samples is not a multiple of "
            f"samples_per_interval={N}"
        )
    return t, data[:, 1:4], data[:, 4:7]


def state_from_row(row: NDArray[np.float64]) -> NavState:
    q = row[1:5]
    return NavState(row[0], q / np.linalg.norm(q), row[5:8], row[8:11])


# ---------------------------------------------------------------- algorithms


def navigate(
    state: NavState,
    dtheta: NDArray[np.float64],
    dv: NDArray[np.float64],
    cfg: RunConfig,
    t_end: NDArray[np.float64] | None = None,
) -> NDArray[np.float64]:
    """
    Run the configured algorithm over increment streams.

    Returns one row per interval end in the nav CSV layout. When ``t_end`` is
    given, row times are taken from the last sample of each batch.
    """
    N = cfg.samples_per_interval
    it_cfg = cfg.iteration_config()
    w_e = cfg.earth_rate_vector()
    rows = []
    batches = navcore.iter_batches(dtheta, dv, cfg.dt, N)
    for k, batch in enumerate(batches):
        if cfg.algorithm == "twosample":
            state = reference.two_sample_step(state, batch, w_e=w_e)
            extra = (0, math.nan, math.nan, math.nan)
        else:
            stepper = navcore.step if cfg.algorithm == "matrix" else reference.naive_step
            state, sol = stepper(state, batch, it_cfg, w_e=w_e)
            iters = max(sol.iters_attitude, sol.iters_velpos)
            extra = (iters, sol.e_q, sol.e_v, sol.e_p)
        t = state.t if t_end is None else float(t_end[(k + 1) * N - 1])
        rows.append((t, *state.q, *state.v_e, *state.p_e, *extra))
    return np.array(rows)


# ---------------------------------------------------------------- evaluation


@dataclass(frozen=True)
class ErrorTable:
    t: NDArray[np.float64]
    angle: NDArray[np.float64]
    vel_n: NDArray[np.float64]  # North, Up, East
    pos_n: NDArray[np.float64]  # North, Up, East

    @property
    def horizontal(self) -> NDArray[np.float64]:
        return np.hypot(self.pos_n[:, 0], self.pos_n[:, 2])

    def rows(self) -> NDArray[np.float64]:
        # position columns are ordered west-east, north-south, height
        p = self.pos_n
        return np.column_stack([self.t, self.angle, self.vel_n, p[:, 2], p[:, 0], p[:, 1]])

    def summary(self) -> dict[str, float]:
        out: dict[str, float] = {}
        channels = {
            "angle": self.angle,
            "vn": self.vel_n[:, 0],
            "vu": self.vel_n[:, 1],
            "ve": self.vel_n[:, 2],
            "west_east": self.pos_n[:, 2],
            "north_south": self.pos_n[:, 0],
            "height": self.pos_n[:, 1],
            "horizontal": self.horizontal,
        }
        for name, x in channels.items():
            out[f"max_{name}"] = float(np.max(np.abs(x)))
            out[f"rms_{name}"] = float(np.sqrt(np.mean(x * x)))
        return out


def match_truth(nav_t: NDArray[np.float64], truth: NDArray[np.float64], source: str) -> NDArray[np.float64]:
    """Truth rows whose timestamps equal the nav timestamps within 1e-9 s."""
    tt = truth[:, 0]
    idx = np.clip(np.searchsorted(tt, nav_t), 1, len(tt) - 1)
    left, right = tt[idx - 1], tt[idx]
    idx = np.where(np.abs(nav_t - left) <= np.abs(nav_t - right), idx - 1, idx)
    gap = np.abs(tt[idx] - nav_t)
    bad = np.flatnonzero(gap > TIME_TOL)
    if bad.size:
        k = int(bad[0])
        raise CliError(f"{source}:{k + 2}: no truth sample within {TIME_TOL:g} s of t={nav_t[k]:.17g}")
    return truth[idx]


def compute_errors(nav: NDArray[np.float64], truth_rows: NDArray[np.float64]) -> ErrorTable:
    q_est, q_true = nav[:, 1:5], truth_rows[:, 1:5]
    angle = qa.principal_angle(q_true, q_est)
    C = cne(ecef2lla(truth_rows[:, 8:11]))
    # C maps NUE to ECEF, so its transpose resolves ECEF errors in NUE
    dv = np.einsum("kji,kj->ki", C, nav[:, 5:8] - truth_rows[:, 5:8])
    dp = np.einsum("kji,kj->ki", C, nav[:, 8:11] - truth_rows[:, 8:11])
    return ErrorTable(nav[:, 0], angle, dv, dp)


def evaluate_file(nav_path: str, truth: NDArray[np.float64]) -> ErrorTable:
    nav = read_csv(nav_path, NAV_HEADER)
    return compute_errors(nav, match_truth(nav[:, 0], truth, nav_path))


# ---------------------------------------------------------------- commands


def cmd_simulate(args: argparse.Namespace) -> None:
    cfg = load_config(args.config, args.set)
    spec = cfg.scenario()
    truth = build_truth(spec)
    n = spec.n_samples
    t_end, dth, dv = generate_increments(truth, 0.0, n, spec.dt)
    write_csv(args.imu, IMU_HEADER, np.column_stack([t_end, dth, dv]))
    t = np.concatenate([[0.0], t_end])
    q, v, p = truth.states(t)
    write_csv(args.truth, TRUTH_HEADER, np.column_stack([t, q, v, p]))
    log.info("wrote %d IMU rows to %s and %d truth rows to %s", n, args.imu, n + 1, args.truth)


def _initial_state(args: argparse.Namespace, cfg: RunConfig) -> NavState:
    if getattr(args, "truth", None):
        return state_from_row(read_csv(args.truth, TRUTH_HEADER)[0])
    return cfg.initial_state()


def cmd_run(args: argparse.Namespace) -> None:
    cfg = load_config(args.config, args.set, algorithm=args.algorithm)
    t_end, dth, dv = read_imu(args.imu, cfg)
    state = _initial_state(args, cfg)
    try:
        rows = navigate(state, dth, dv, cfg, t_end)
    except (ValueError, FloatingPointError) as exc:
        raise CliError(f"navigation failed: {exc}") from exc
    write_csv(args.out, NAV_HEADER, rows)
    log.info("%s: wrote %d nav rows to %s", cfg.algorithm, len(rows), args.out)


def cmd_evaluate(args: argparse.Namespace) -> None:
    truth = read_csv(args.truth, TRUTH_HEADER)
    errors = evaluate_file(args.nav, truth)
    write_csv(args.out, ERROR_HEADER, errors.rows())
    summary = errors.summary()
    lines = [f"{k} {_fmt(v)}" for k, v in summary.items()]
    if args.baseline:
        base = evaluate_file(args.baseline, truth).summary()
        for key in ("max_angle", "max_west_east", "max_horizontal", "max_height"):
            ratio = summary[key] / base[key] if base[key] > 0 else math.nan
            lines.append(f"ratio_{key} {_fmt(ratio)}")
    print("\n".join(lines))


def time_algorithm(
    cfg: RunConfig, state: NavState, dth, dv, reps: int, warmup_intervals: int = 10
) -> list[float]:
    """Wall-clock seconds of ``reps`` full runs, after a short untimed warmup."""
    w = warmup_intervals * cfg.samples_per_interval
    navigate(state, dth[:w], dv[:w], cfg)
    times = []
    for _ in range(reps):
        t0 = time.perf_counter()
        navigate(state, dth, dv, cfg)
        times.append(time.perf_counter() - t0)
    return times


def bench(cfg: RunConfig, state: NavState, dth, dv, reps: int = 5) -> dict[str, float]:
    medians = {}
    for alg in ALGORITHMS:
        run_cfg = dataclasses.replace(cfg, algorithm=alg)
        medians[alg] = statistics.median(time_algorithm(run_cfg, state, dth, dv, reps))
    return {
        **{f"median_s_{k}": v for k, v in medians.items()},
        "ratio_matrix/naive": medians["matrix"] / medians["naive"],
        "ratio_matrix/twosample": medians["matrix"] / medians["twosample"],
        "speedup_vs_naive": medians["naive"] / medians["matrix"],
    }


def cmd_bench(args: argparse.Namespace) -> None:
    if args.reps < 5:
        raise CliError("--reps must be at least 5")
    cfg = load_config(args.config, args.set)
    _, dth, dv = read_imu(args.imu, cfg)
    report = bench(cfg, _initial_state(args, cfg), dth, dv, args.reps)
    lines = [f"{k} {_fmt(v)}" for k, v in report.items()]
    print("\n".join(lines))
    if args.out:
        Path(args.out).write_text("\n".join(lines) + "\n")


# ---------------------------------------------------------------- entry point


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="chebnav", description=__doc__.split("\n\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="key=value config file")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override one config key")

    p = sub.add_parser("simulate", help="generate IMU increments and truth from a scenario")
    common(p)
    p.add_argument("--imu", required=True, help="output IMU CSV")
    p.add_argument("--truth", required=True, help="output truth CSV")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("run", help="navigate over an IMU CSV")
    common(p)
    p.add_argument("--imu", required=True)
    p.add_argument("--truth", help="take the initial state from the first truth row")
    p.add_argument("--out", required=True, help="output nav CSV")
    p.add_argument("--algorithm", choices=ALGORITHMS)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("evaluate", help="errors of a nav CSV against truth")
    p.add_argument("--nav", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--out", required=True, help="output error CSV")
    p.add_argument("--baseline", help="second nav CSV; the summary adds this/baseline error ratios")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("bench", help="time all algorithms on the same IMU data")
    common(p)
    p.add_argument("--imu", required=True)
    p.add_argument("--truth", help="take the initial state from the first truth row")
    p.add_argument("--reps", type=int, default=5)
    p.add_argument("--out", help="also write the report here")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        args.func(args)
    except CliError as exc:
        print(f"chebnav: error: {exc}", file=sys.stderr)
        return 1
    return 0
