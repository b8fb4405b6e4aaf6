"""Command-line harness: config-driven experiments with manifested artifacts.

Configs are flat ``key = value`` text; every run writes its artifacts into
<output_dir>/<experiment_id>/ and finishes with a manifest.json listing each
artifact with its SHA-256.  The manifest is the only artifact carrying a
timestamp, so the CSV bodies of two runs of one config are byte-identical.

Exit codes: 0 success, 2 configuration error, 3 numerical guard tripped,
4 built-in check suite failed.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import re
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .engine import (
    convergence_study,
    error_report,
    interior_window,
    predicted_output_spectral,
    predicted_output_time,
    target_output,
    uniformity_study,
    write_study_csv,
)
from .predictor import (
    HorizonKernel,
    band_flatness,
    boxcar_kernel,
    envelope_search,
    gamma_for_band,
    kernel_spectrum,
    magnitude_identity_defect,
    synthesize,
    triangular_kernel,
    write_predictor_spec,
)
from .processes import (
    FamilyBounds,
    GaussianMixtureParams,
    band_limited_process,
    counterexample_te,
    gaussian_mixture,
    membership_mc,
    membership_nc,
    membership_x,
    sample_family,
)
from .signals import (
    NumericsError,
    SampledSignal,
    Spectrum,
    TimeGrid,
    _fmt,
    band_weighted_integral,
    read_signal_csv,
    write_signal_csv,
)

_ID_RE = re.compile(r"^[A-Za-z0-9._-]+$")

_MISSING = object()


class ConfigError(Exception):
    """A config file problem, always with enough context to fix it."""


class _Config:
    """Flat key = value file with '#' comments.  Tracks consumed keys so a
    typo'd or stray key is reported by line number instead of ignored."""

    def __init__(self, path: Path):
        self.path = path
        self.entries: dict[str, tuple[str, int]] = {}
        self.consumed: set[str] = set()
        try:
            text = path.read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read {path}: {exc}") from exc
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
            key, value = (part.strip() for part in line.split("=", 1))
            if not key:
                raise ConfigError(f"{path}:{lineno}: empty key")
            if key in self.entries:
                raise ConfigError(
                    f"{path}:{lineno}: duplicate key {key!r} "
                    f"(first set on line {self.entries[key][1]})"
                )
            self.entries[key] = (value, lineno)

    def _raw(self, key: str, default=_MISSING) -> str:
        self.consumed.add(key)
        if key in self.entries:
            return self.entries[key][0]
        if default is _MISSING:
            raise ConfigError(f"{self.path}: missing required key {key!r}")
        return default

    def _where(self, key: str) -> str:
        return f"{self.path}:{self.entries[key][1]}"

    def str_choice(self, key: str, choices: tuple[str, ...], default=_MISSING) -> str:
        v = self._raw(key, default)
        if v not in choices:
            raise ConfigError(
                f"{self._where(key)}: {key} must be one of {', '.join(choices)}, got {v!r}"
            )
        return v

    def float_(self, key: str, default=_MISSING) -> float:
        v = self._raw(key, default)
        if isinstance(v, float):
            return v
        try:
            return float(v)
        except ValueError:
            raise ConfigError(f"{self._where(key)}: {key} must be a number, got {v!r}") from None

    def int_(self, key: str, default=_MISSING) -> int:
        v = self._raw(key, default)
        if isinstance(v, int):
            return v
        try:
            return int(v)
        except ValueError:
            raise ConfigError(f"{self._where(key)}: {key} must be an integer, got {v!r}") from None

    def float_list(self, key: str) -> list[float]:
        v = self._raw(key)
        try:
            out = [float(p) for p in v.split(",") if p.strip()]
        except ValueError:
            raise ConfigError(f"{self._where(key)}: {key} must be comma-separated numbers") from None
        if not out:
            raise ConfigError(f"{self._where(key)}: {key} is empty")
        return out

    def experiment_id(self) -> str:
        v = self._raw("experiment_id")
        if not _ID_RE.match(v):
            raise ConfigError(
                f"{self._where('experiment_id')}: experiment_id may contain only "
                f"letters, digits, '.', '_', '-', got {v!r}"
            )
        return v

    def reject_unknown(self) -> None:
        stray = sorted(set(self.entries) - self.consumed)
        if stray:
            spots = ", ".join(f"{k!r} (line {self.entries[k][1]})" for k in stray)
            raise ConfigError(f"{self.path}: unknown key(s): {spots}")


def _grid(cfg: _Config) -> TimeGrid:
    t_start = cfg.float_("t_start")
    dt = cfg.float_("dt")
    n = cfg.int_("n")
    if dt <= 0 or n < 2:
        raise ConfigError(f"{cfg.path}: need dt > 0 and n >= 2")
    return TimeGrid(t_start=t_start, dt=dt, n=n)


def _kernel(cfg: _Config, dt: float, default: str = _MISSING) -> HorizonKernel:
    kind = cfg.str_choice("kernel", ("boxcar", "triangular", "samples"), default)
    if kind == "samples":
        rel = cfg._raw("kernel_file")
        path = (cfg.path.parent / rel).resolve()
        sig = read_signal_csv(path)
        if not math.isclose(sig.grid.dt, dt, rel_tol=1e-9):
            raise ConfigError(f"{path}: kernel sample step {sig.grid.dt} does not match dt {dt}")
        t_last = sig.grid.times()[-1]
        if abs(t_last) > 1e-9 * dt:
            raise ConfigError(f"{path}: kernel samples must end at t = 0, got {t_last}")
        return HorizonKernel(T=-sig.grid.t_start, dt=dt, samples=sig.values)
    T = cfg.float_("T")
    if T <= 0:
        raise ConfigError(f"{cfg.path}: T must be positive")
    maker = boxcar_kernel if kind == "boxcar" else triangular_kernel
    return maker(T, dt)


def _parse_terms(cfg: _Config) -> GaussianMixtureParams:
    text = cfg._raw("terms")
    terms = []
    for part in text.split(";"):
        part = part.strip()
        if not part:
            continue
        fields = [p.strip() for p in part.split(",")]
        if len(fields) != 3:
            raise ConfigError(
                f"{cfg._where('terms')}: each term needs 'c, a, v', got {part!r}"
            )
        try:
            terms.append(tuple(float(f) for f in fields))
        except ValueError:
            raise ConfigError(f"{cfg._where('terms')}: non-numeric term {part!r}") from None
    if not terms:
        raise ConfigError(f"{cfg._where('terms')}: no terms given")
    return GaussianMixtureParams(terms=tuple(terms))


def _process(cfg: _Config, grid: TimeGrid, seed: int) -> tuple[SampledSignal, Spectrum]:
    name = cfg.str_choice(
        "process", ("gaussian_mixture", "band_limited", "counterexample", "zero")
    )
    if name == "gaussian_mixture":
        return gaussian_mixture(_parse_terms(cfg), grid)
    if name == "band_limited":
        return band_limited_process(cfg.float_("Omega"), seed, grid)
    if name == "counterexample":
        k = cfg.int_("sign_index", 1)
        return counterexample_te(k, grid)
    zero = SampledSignal(grid=grid, values=np.zeros(grid.n))
    return zero, Spectrum(dt=grid.dt, values=np.zeros(grid.n, dtype=complex))


def _memory(cfg: _Config) -> float | None:
    v = cfg._raw("memory_M", "unbounded")
    if v == "unbounded" or v is None:
        return None
    try:
        m = float(v)
    except ValueError:
        raise ConfigError(
            f"{cfg._where('memory_M')}: memory_M must be a number or 'unbounded'"
        ) from None
    if m <= 0:
        raise ConfigError(f"{cfg._where('memory_M')}: memory_M must be positive")
    return m


def _write_kv(path: Path, pairs) -> None:
    with open(path, "w") as fh:
        for key, value in pairs:
            fh.write(f"{key} = {value}\n")


def _finish(run_dir: Path, experiment_id: str, artifacts: list[Path]) -> None:
    """Write manifest.json last, hashing every artifact already on disk."""
    entries = []
    for p in artifacts:
        digest = hashlib.sha256(p.read_bytes()).hexdigest()
        entries.append({"name": p.name, "sha256": digest})
    manifest = {
        "experiment_id": experiment_id,
        "artifacts": entries,
        "created_utc": datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ"),
    }
    with open(run_dir / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")


def _run_dir(cfg: _Config, args, experiment_id: str) -> Path:
    base = args.output_dir if args.output_dir else cfg._raw("output_dir", "out")
    run_dir = Path(base) / experiment_id
    run_dir.mkdir(parents=True, exist_ok=True)
    return run_dir


def _cmd_synthesize(cfg: _Config, args) -> int:
    exp_id = cfg.experiment_id()
    grid = _grid(cfg)
    kern = _kernel(cfg, grid.dt)
    gamma = cfg.float_("gamma")
    cfg.reject_unknown()
    run_dir = _run_dir(cfg, args, exp_id)
    spec = synthesize(kern, gamma, grid)
    artifacts = write_predictor_spec(spec, run_dir, exp_id)
    _finish(run_dir, exp_id, artifacts)
    print(
        f"synthesized gamma={_fmt(gamma)} T={_fmt(kern.T)} "
        f"negative_time_energy_fraction={spec.negative_time_energy_fraction:.3e}"
    )
    print(f"wrote {run_dir}")
    return 0


def _cmd_predict(cfg: _Config, args) -> int:
    exp_id = cfg.experiment_id()
    seed = cfg.int_("seed", 0)
    grid = _grid(cfg)
    kern = _kernel(cfg, grid.dt)
    gamma = cfg.float_("gamma")
    mode = cfg.str_choice("mode", ("spectral", "time_domain"), "spectral")
    M = _memory(cfg)
    r_text = cfg.str_choice("r", ("1", "2", "inf"), "2")
    r = math.inf if r_text == "inf" else float(int(r_text))
    x, X = _process(cfg, grid, seed)
    cfg.reject_unknown()
    run_dir = _run_dir(cfg, args, exp_id)

    y = target_output(x, kern)
    spec = synthesize(kern, gamma, grid)
    if mode == "spectral":
        y_hat = predicted_output_spectral(X, spec, grid)
        window = interior_window(y.grid, kern.T)
    else:
        y_hat = predicted_output_time(x, spec, M)
        window = interior_window(y.grid, kern.T, M)
    rep = error_report(y, y_hat, r, gamma, mode, M if mode == "time_domain" else None, window)

    target_path = run_dir / f"{exp_id}_target.csv"
    pred_path = run_dir / f"{exp_id}_prediction.csv"
    report_path = run_dir / f"{exp_id}_report.txt"
    write_signal_csv(y, target_path)
    write_signal_csv(y_hat, pred_path)
    _write_kv(
        report_path,
        [
            ("gamma", _fmt(gamma)),
            ("T", _fmt(kern.T)),
            ("mode", mode),
            ("memory", "unbounded" if rep.memory_M is None else _fmt(rep.memory_M)),
            ("r", r_text),
            ("window_lo", _fmt(window[0])),
            ("window_hi", _fmt(window[1])),
            ("abs_error", _fmt(rep.abs_error)),
            ("rel_error", _fmt(rep.rel_error)),
            ("negative_time_energy_fraction", _fmt(spec.negative_time_energy_fraction)),
        ],
    )
    _finish(run_dir, exp_id, [target_path, pred_path, report_path])
    print(f"rel_error = {rep.rel_error:.6e} ({mode}, gamma={_fmt(gamma)})")
    print(f"wrote {run_dir}")
    return 0


def _cmd_converge(cfg: _Config, args) -> int:
    exp_id = cfg.experiment_id()
    seed = cfg.int_("seed", 0)
    grid = _grid(cfg)
    kern = _kernel(cfg, grid.dt)
    gammas = cfg.float_list("gamma_list")
    mode = cfg.str_choice("mode", ("spectral", "time_domain"), "spectral")
    M = _memory(cfg)
    r_text = cfg.str_choice("r", ("1", "2", "inf"), "2")
    r = math.inf if r_text == "inf" else float(int(r_text))
    x, X = _process(cfg, grid, seed)
    cfg.reject_unknown()
    run_dir = _run_dir(cfg, args, exp_id)

    table = convergence_study(
        x, kern, gammas, r=r, mode=mode,
        X=X if mode == "spectral" else None,
        M=M if mode == "time_domain" else None,
        jobs=args.jobs,
    )
    study_path = run_dir / f"{exp_id}_study.csv"
    meta_path = run_dir / f"{exp_id}_meta.txt"
    write_study_csv(table, study_path)
    _write_kv(meta_path, sorted(table.metadata.items()))
    _finish(run_dir, exp_id, [study_path, meta_path])
    print(
        f"{len(table.rows)} gammas, final rel_error = {table.rows[-1][1].rel_error:.6e}, "
        f"nonincreasing = {table.metadata['trend_nonincreasing']}"
    )
    print(f"wrote {run_dir}")
    return 0


def _cmd_uniform(cfg: _Config, args) -> int:
    exp_id = cfg.experiment_id()
    seed = cfg.int_("seed", 0)
    grid = _grid(cfg)
    kern = _kernel(cfg, grid.dt)
    q = cfg.int_("q")
    epsilons = cfg.float_list("epsilon_list")
    bounds = FamilyBounds(
        C1=cfg.int_("C1"), C2=cfg.float_("C2"), C3=cfg.float_("C3"), C4=cfg.float_("C4")
    )
    count = cfg.int_("family_count", 12)
    cfg.reject_unknown()
    run_dir = _run_dir(cfg, args, exp_id)

    family = [gaussian_mixture(p, grid) for p in sample_family(bounds, count, seed)]
    table = uniformity_study(family, kern, q, epsilons, jobs=args.jobs)
    study_path = run_dir / f"{exp_id}_study.csv"
    meta_path = run_dir / f"{exp_id}_meta.txt"
    write_study_csv(table, study_path)
    _write_kv(meta_path, sorted(table.metadata.items()))
    _finish(run_dir, exp_id, [study_path, meta_path])
    print(
        f"{count} members, worst rel_error at eps={epsilons[-1]:g}: "
        f"{table.rows[-1][1].rel_error:.6e}"
    )
    print(f"wrote {run_dir}")
    return 0


def _cmd_class_check(cfg: _Config, args) -> int:
    exp_id = cfg.experiment_id()
    seed = cfg.int_("seed", 0)
    grid = _grid(cfg)
    kind = cfg.str_choice("class", ("tail", "geometric", "factorial"))
    _, X = _process(cfg, grid, seed)
    if kind == "tail":
        q = cfg.int_("q")
        T = cfg.float_("T")
        Omegas = cfg.float_list("Omega_list")
        cfg.reject_unknown()
        report = membership_x(X, q, T, Omegas)
    else:
        C = cfg.float_("C")
        k_max = cfg.int_("k_max", 10)
        cfg.reject_unknown()
        check = membership_mc if kind == "geometric" else membership_nc
        report = check(X, C, k_max)
    run_dir = _run_dir(cfg, args, exp_id)

    member_path = run_dir / f"{exp_id}_membership.csv"
    with open(member_path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["Omega", "tail", "verdict"])
        for omega, tail in report.tail_curve:
            wr.writerow([_fmt(omega), _fmt(tail), report.verdict])
    meta_path = run_dir / f"{exp_id}_meta.txt"
    _write_kv(
        meta_path,
        [
            ("class", kind),
            ("class_tag", report.class_tag),
            ("verdict", report.verdict),
            ("q", str(report.q)),
            ("T", _fmt(report.T)),
        ],
    )
    _finish(run_dir, exp_id, [member_path, meta_path])
    print(f"verdict: {report.verdict} ({report.class_tag})")
    print(f"wrote {run_dir}")
    return 0


def _builtin_checks() -> list[tuple[str, float, float, bool]]:
    """The fixed check suite behind lemma-check: (name, observed, bound, ok).

    Bounds are upper bounds except where the name ends in _min.
    """
    rows: list[tuple[str, float, float, bool]] = []

    defect = magnitude_identity_defect(
        np.logspace(-2, 2, 10), [0.1, 1.0, 5.0], np.linspace(-20.0, 20.0, 101)
    )
    rows.append(("gain_magnitude_identity", defect, 1e-12, defect <= 1e-12))

    step = math.log(10.0) / 400.0
    for T, w in ((0.5, 3.0), (1.0, 5.0), (2.0, 0.7)):
        sup_log, g_max, _ = envelope_search(T, w)
        cap = T * abs(w)
        rows.append(
            (f"envelope_cap_T{T:g}_w{w:g}", sup_log, cap, sup_log <= cap * (1.0 + 1e-9))
        )
        off = abs(math.log(g_max / abs(w)))
        rows.append((f"envelope_argmax_T{T:g}_w{w:g}", off, step, off <= step * (1.0 + 1e-9)))

    for eps, Om, T in ((0.2, 5.0, 1.0), (0.1, 3.0, 0.5), (0.05, 10.0, 0.25)):
        flat = band_flatness(gamma_for_band(eps, Om, T), T, Om)
        rows.append((f"band_flatness_eps{eps:g}", flat, eps, flat <= eps))

    grid = TimeGrid(t_start=-2.0, dt=0.01, n=800)
    K = kernel_spectrum(boxcar_kernel(1.0, 0.01), grid)
    dc_err = abs(float(K.values[0].real) - 1.0) + abs(float(K.values[0].imag))
    rows.append(("kernel_dc_exactness", dc_err, 1e-12, dc_err <= 1e-12))

    cgrid = TimeGrid(t_start=-40.0, dt=0.005, n=16000)
    _, X = counterexample_te(1, cgrid)
    lo = band_weighted_integral(X, 2, 1.0, 5.0, 10.0)
    hi = band_weighted_integral(X, 2, 1.0, 10.0, 20.0)
    growth = hi / lo
    rows.append(("counterexample_band_growth_min", growth, 1e4, growth >= 1e4))
    return rows


def _cmd_lemma_check(cfg: _Config, args) -> int:
    exp_id = cfg.experiment_id()
    cfg.reject_unknown()
    run_dir = _run_dir(cfg, args, exp_id)
    rows = _builtin_checks()
    check_path = run_dir / f"{exp_id}_checks.csv"
    with open(check_path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["check", "observed", "bound", "status"])
        for name, observed, bound, ok in rows:
            wr.writerow([name, _fmt(observed), _fmt(bound), "pass" if ok else "fail"])
    _finish(run_dir, exp_id, [check_path])
    failed = [name for name, _, _, ok in rows if not ok]
    for name, observed, bound, ok in rows:
        print(f"{'pass' if ok else 'FAIL'}  {name}  observed={observed:.3e}  bound={bound:.3e}")
    print(f"wrote {run_dir}")
    return 4 if failed else 0


def _cmd_snapshot_demo(cfg: _Config, args) -> int:
    exp_id = cfg.experiment_id()
    seed = cfg.int_("seed", 0)
    t_start = cfg.float_("t_start", -0.05)
    dt = cfg.float_("dt", 1e-5)
    n = cfg.int_("n", 10000)
    T = cfg.float_("T", 5e-4)
    gamma = cfg.float_("gamma", 1e4)
    kind = cfg.str_choice("kernel", ("boxcar", "triangular"), "boxcar")
    cfg.reject_unknown()
    run_dir = _run_dir(cfg, args, exp_id)

    grid = TimeGrid(t_start=t_start, dt=dt, n=n)
    # hidden sources, beyond the horizon so nothing about them is observed
    rng = np.random.Generator(np.random.Philox(seed))
    terms = []
    for _ in range(2):
        c = float(rng.uniform(0.5, 1.0))
        a = float(rng.uniform(3e-3, 8e-3))
        v = float(rng.uniform(4e-5, 8e-5))
        terms.append((c, a, v))
    x, _ = gaussian_mixture(GaussianMixtureParams(terms=tuple(terms)), grid)

    maker = boxcar_kernel if kind == "boxcar" else triangular_kernel
    kern = maker(T, dt)
    spec = synthesize(kern, gamma, grid)
    j0 = grid.index_of(0.0)
    estimate = float(predicted_output_time(x, spec).values[j0])
    y = target_output(x, kern)
    true_value = float(y.values[y.grid.index_of(0.0)])
    abs_err = abs(estimate - true_value)
    rel_err = abs_err / abs(true_value) if true_value != 0.0 else math.inf

    past = SampledSignal(
        grid=TimeGrid(t_start, dt, j0 + 1), values=x.values[: j0 + 1]
    )
    past_path = run_dir / f"{exp_id}_past.csv"
    estimate_path = run_dir / f"{exp_id}_estimate.txt"
    write_signal_csv(past, past_path)
    _write_kv(
        estimate_path,
        [
            ("gamma", _fmt(gamma)),
            ("T", _fmt(T)),
            ("kernel", kind),
            ("estimate_at_0", _fmt(estimate)),
            ("true_value_at_0", _fmt(true_value)),
            ("abs_error", _fmt(abs_err)),
            ("rel_error", _fmt(rel_err)),
        ],
    )
    _finish(run_dir, exp_id, [past_path, estimate_path])
    print(
        f"integral over the unseen [0, {T:g}]: estimate {estimate:.6e}, "
        f"true {true_value:.6e}, rel_error {rel_err:.3e}"
    )
    print(f"wrote {run_dir}")
    return 0


_COMMANDS = {
    "synthesize": _cmd_synthesize,
    "predict": _cmd_predict,
    "converge": _cmd_converge,
    "uniform": _cmd_uniform,
    "class-check": _cmd_class_check,
    "lemma-check": _cmd_lemma_check,
    "snapshot-demo": _cmd_snapshot_demo,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="horizoncast",
        description="Synthesize causal predictors for finite-horizon convolution functionals.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "synthesize": "build a predictor spec and write its spectrum and kernel",
        "predict": "run one prediction against the target functional",
        "converge": "sweep gamma and tabulate errors",
        "uniform": "worst-case error over a sampled process family",
        "class-check": "estimate predictability-class membership",
        "lemma-check": "run the built-in identity and bound checks",
        "snapshot-demo": "predict an integral over an unseen future window",
    }
    for name in _COMMANDS:
        p = sub.add_parser(name, help=helps[name])
        p.add_argument("--config", required=True, help="path to a key = value config file")
        p.add_argument("--output-dir", default=None, help="override the config's output_dir")
        p.add_argument("--jobs", type=int, default=1, help="worker threads for sweeps")
    args = parser.parse_args(argv)
    if args.jobs < 1:
        print("error: --jobs must be at least 1", file=sys.stderr)
        return 2
    try:
        cfg = _Config(Path(args.config))
        # output_dir applies to every command; consume it up front so the
        # per-command reject_unknown calls accept it
        cfg._raw("output_dir", "out")
        return _COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except NumericsError as exc:
        print(f"numerics error: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
