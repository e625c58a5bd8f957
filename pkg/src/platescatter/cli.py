"""Command-line driver: TOML configuration, frequency sweeps, outputs.

One configuration file describes material, cavity, mesh, truncation, and a
list or range of frequencies. The mesh and the frequency-independent FEM
matrices are built once and shared; each frequency then runs dispersion,
incident field, DtN build, direct solve, and post-processing. Results are
gathered in frequency order so outputs are byte-identical regardless of the
worker count.
"""

from __future__ import annotations

import argparse
import csv
import logging
import os
import sys
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from .dispersion import find_lamb_roots
from .dtn_boundary import Truncation, build_dtn_operator, recover_coefficients
from .fem_core import assemble
from .incident import make_incident, incident_nodal_data
from .material import PlateMaterial
from .mesh import CavitySpec, MeshResolution, generate
from .postprocess import (
    coefficient_rows,
    energy_balance,
    export_fields,
)
from .solver import solve_scattering

SCHEMA_VERSION = 1
WORKERS_ENV = "PLATESCATTER_WORKERS"
EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

log = logging.getLogger("platescatter")


class ConfigError(ValueError):
    """Raised with every detected configuration problem at once."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("invalid configuration:\n  - " + "\n  - ".join(self.problems))


@dataclass(frozen=True)
class RunConfig:
    h: float
    lam: float
    mu: float
    rho: float
    frequencies: tuple
    cavity: CavitySpec | None
    resolution: MeshResolution
    M: int
    N: int
    a: float | None           # None requests a = b + 2 lambda_S0
    out_dir: str
    workers: int
    write_fields: bool

    def material(self, freq_hz: float) -> PlateMaterial:
        return PlateMaterial(h=self.h, lam=self.lam, mu=self.mu,
                             rho=self.rho, omega=2.0 * np.pi * freq_hz)


def _get(table, key, problems, kind, context, default=None, required=False):
    if key not in table:
        if required:
            problems.append(f"missing key {context}.{key}")
        return default
    value = table[key]
    if kind is float and isinstance(value, int):
        value = float(value)
    if not isinstance(value, kind):
        problems.append(f"{context}.{key} must be {kind.__name__}, got {value!r}")
        return default
    return value


def load_config(path) -> RunConfig:
    """Parse and validate a TOML run configuration.

    All problems are collected and reported together in the raised
    ConfigError; nothing expensive runs before validation passes.
    """
    problems = []
    try:
        with open(path, "rb") as f:
            doc = tomllib.load(f)
    except OSError as exc:
        raise ConfigError([f"cannot read {path}: {exc}"])
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError([f"TOML parse error in {path}: {exc}"])

    schema = doc.get("schema")
    if schema != SCHEMA_VERSION:
        problems.append(f"schema must be {SCHEMA_VERSION}, got {schema!r}")

    mat = doc.get("material", {})
    rho = _get(mat, "rho", problems, float, "material", required=True)
    thickness = _get(mat, "thickness", problems, float, "material", required=True)
    if "lam" in mat or "mu" in mat:
        lam = _get(mat, "lam", problems, float, "material", required=True)
        mu = _get(mat, "mu", problems, float, "material", required=True)
    elif "E" in mat or "nu" in mat:
        E = _get(mat, "E", problems, float, "material", required=True)
        nu = _get(mat, "nu", problems, float, "material", required=True)
        if E is not None and nu is not None:
            if not -1.0 < nu < 0.5:
                problems.append(f"material.nu must lie in (-1, 0.5), got {nu}")
                lam = mu = None
            else:
                mu = E / (2.0 * (1.0 + nu))
                lam = E * nu / ((1.0 + nu) * (1.0 - 2.0 * nu))
        else:
            lam = mu = None
    else:
        problems.append("material needs either lam and mu or E and nu")
        lam = mu = None
    if thickness is not None and thickness <= 0:
        problems.append(f"material.thickness must be positive, got {thickness}")
    if rho is not None and rho <= 0:
        problems.append(f"material.rho must be positive, got {rho}")
    if mu is not None and mu <= 0:
        problems.append(f"shear modulus must be positive, got {mu}")

    freq = doc.get("frequency", {})
    if "hz" in freq:
        hz = freq["hz"]
        if not isinstance(hz, list) or not hz or not all(
            isinstance(v, (int, float)) and v > 0 for v in hz
        ):
            problems.append("frequency.hz must be a non-empty list of positive numbers")
            frequencies = ()
        else:
            frequencies = tuple(float(v) for v in hz)
    elif {"start", "stop", "count"} <= freq.keys():
        start = _get(freq, "start", problems, float, "frequency", required=True)
        stop = _get(freq, "stop", problems, float, "frequency", required=True)
        count = _get(freq, "count", problems, int, "frequency", required=True)
        if None in (start, stop, count) or start <= 0 or stop < start or count < 1:
            problems.append("frequency range needs 0 < start <= stop and count >= 1")
            frequencies = ()
        else:
            frequencies = tuple(np.linspace(start, stop, count))
    else:
        problems.append("frequency needs hz = [...] or start/stop/count")
        frequencies = ()

    cav = doc.get("cavity", {})
    shape = cav.get("shape", "none")
    cavity = None
    if shape != "none":
        radius = _get(cav, "radius", problems, float, "cavity", required=True)
        half_depth = _get(cav, "half_depth", problems, float, "cavity")
        if radius is not None:
            try:
                cavity = CavitySpec(shape=shape, radius=radius, half_depth=half_depth)
            except ValueError as exc:
                problems.append(f"cavity: {exc}")

    mesh_tab = doc.get("mesh", {})
    resolution = None
    res_args = {
        k: _get(mesh_tab, k, problems, int, "mesh", required=True)
        for k in ("n_radial", "n_circumferential", "n_thickness")
    }
    if None not in res_args.values():
        try:
            resolution = MeshResolution(**res_args)
        except ValueError as exc:
            problems.append(f"mesh: {exc}")

    tr = doc.get("truncation", {})
    M = _get(tr, "M", problems, int, "truncation", required=True)
    N = _get(tr, "N", problems, int, "truncation", required=True)
    if M is not None and M < 0:
        problems.append(f"truncation.M must be nonnegative, got {M}")
    if N is not None and (N < 0 or N % 2 != 0):
        problems.append(f"truncation.N must be even and nonnegative, got {N}")

    bnd = doc.get("boundary", {})
    a_raw = bnd.get("a", "auto")
    if a_raw == "auto":
        a = None
        if cavity is None:
            problems.append("boundary.a = 'auto' requires a cavity")
    elif isinstance(a_raw, (int, float)) and a_raw > 0:
        a = float(a_raw)
        if cavity is not None and cavity.radius >= 0.8 * a:
            problems.append(
                f"cavity radius {cavity.radius} too close to boundary radius {a}"
            )
    else:
        problems.append(f"boundary.a must be 'auto' or a positive number, got {a_raw!r}")
        a = None

    out_tab = doc.get("output", {})
    out_dir = out_tab.get("directory", "out")
    write_fields = bool(out_tab.get("fields", True))
    workers = doc.get("run", {}).get("workers", 1)
    if not isinstance(workers, int) or workers < 1:
        problems.append(f"run.workers must be a positive integer, got {workers!r}")
        workers = 1

    if problems:
        raise ConfigError(problems)
    return RunConfig(
        h=thickness / 2.0, lam=lam, mu=mu, rho=rho, frequencies=frequencies,
        cavity=cavity, resolution=resolution, M=M, N=N, a=a,
        out_dir=out_dir, workers=workers, write_fields=write_fields,
    )


def resolve_radius(config: RunConfig) -> float:
    """Boundary radius: explicit, or cavity radius plus two fundamental-mode
    wavelengths at the lowest sweep frequency."""
    if config.a is not None:
        return config.a
    mat = config.material(min(config.frequencies))
    roots = find_lamb_roots(mat)
    if not roots:
        raise ConfigError(
            ["no propagating symmetric mode at the lowest frequency; "
             "cannot derive the boundary radius"]
        )
    wavelength = 2.0 * np.pi / roots[0].k.real
    return config.cavity.radius + 2.0 * wavelength


def check_config(config: RunConfig) -> list:
    """Cheap validation pass: dispersion and truncation at every frequency.

    Returns human-readable summary lines; raises ConfigError on failure.
    """
    lines = []
    problems = []
    for f in config.frequencies:
        mat = config.material(f)
        roots = find_lamb_roots(mat)
        if not roots:
            problems.append(f"no propagating symmetric Lamb mode at {f:g} Hz")
            continue
        try:
            trunc = Truncation.default(mat, config.M, config.N)
        except ValueError as exc:
            problems.append(f"truncation invalid at {f:g} Hz: {exc}")
            continue
        lines.append(
            f"{f:g} Hz: {len(roots)} propagating Lamb, "
            f"{len(trunc.lamb_modes)} Lamb + {len(trunc.sh_modes)} SH columns"
        )
    if problems:
        raise ConfigError(problems)
    return lines


def _solve_one_frequency(args):
    """Worker body: full single-frequency pipeline on a shared mesh/system.

    Returns (coefficient rows, energy rows, field arrays or None, log lines).
    """
    config, freq, mesh, system = args
    mat = config.material(freq)
    lines = []
    timings = {}

    def stage(name, fn):
        t0 = time.perf_counter()
        out = fn()
        timings[name] = time.perf_counter() - t0
        return out

    field = stage("incident", lambda: make_incident(mat))
    trunc = stage("truncation", lambda: Truncation.default(mat, config.M, config.N))
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        dtn = stage("dtn", lambda: build_dtn_operator(mesh, trunc))
    for w in caught:
        lines.append(f"{freq:g} Hz: {w.message}")
    inc = stage("incident nodal data", lambda: incident_nodal_data(field, mesh))
    sol = stage("solve", lambda: solve_scattering(system, dtn, inc, omega=mat.omega))
    coeffs = stage("recover", lambda: recover_coefficients(dtn, sol.U_sca))
    result = stage("energy", lambda: energy_balance(mesh, field, trunc, coeffs))

    cond = ", ".join(f"m'={m}: {c:.2e}" for m, c in sorted(dtn.conditions.items()))
    lines.append(f"{freq:g} Hz: DtN condition numbers {cond}")
    lines.append(
        f"{freq:g} Hz: residual {sol.residual:.2e}, "
        f"energy balance error {result.energy_balance_error:.3e}"
    )
    lines.append(
        f"{freq:g} Hz timings: "
        + ", ".join(f"{k} {v:.2f}s" for k, v in timings.items())
    )

    coeff_rows = coefficient_rows(freq, trunc, coeffs)
    energy_rows = []
    for (family, n), power in sorted(result.mode_powers.items()):
        energy_rows.append([
            repr(freq), family, n, repr(power),
            repr(result.incident_power), repr(result.net_flux),
            repr(result.energy_balance_error),
        ])
    fields_data = None
    if config.write_fields:
        U_inc = inc[0]
        fields_data = (U_inc + sol.U_sca, sol.U_sca)
    return coeff_rows, energy_rows, fields_data, lines


def run(config: RunConfig, workers: int | None = None) -> int:
    """Execute a sweep and write coefficients.csv, energy.csv, fields VTK
    files, and run.log to the output directory."""
    if workers is None:
        workers = config.workers
    os.makedirs(config.out_dir, exist_ok=True)
    handler = logging.FileHandler(os.path.join(config.out_dir, "run.log"), mode="w")
    handler.setFormatter(logging.Formatter("%(asctime)s %(levelname)s %(message)s"))
    log.addHandler(handler)
    log.setLevel(logging.INFO)
    try:
        return _run_inner(config, workers)
    finally:
        log.removeHandler(handler)
        handler.close()


def _run_inner(config: RunConfig, workers: int) -> int:
    t_start = time.perf_counter()
    a = resolve_radius(config)
    log.info("boundary radius a = %g m", a)

    mat0 = config.material(min(config.frequencies))
    t0 = time.perf_counter()
    mesh = generate(a, mat0, config.cavity, config.resolution)
    system = assemble(mesh, mat0)
    log.info(
        "mesh %d nodes, %d elements; assembly %.2f s",
        mesh.n_nodes, mesh.elements.shape[0], time.perf_counter() - t0,
    )

    jobs = [(config, f, mesh, system) for f in config.frequencies]
    workers = min(workers, len(jobs))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_solve_one_frequency, jobs))
    else:
        results = [_solve_one_frequency(j) for j in jobs]

    coeff_path = os.path.join(config.out_dir, "coefficients.csv")
    with open(coeff_path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["freq", "family", "n", "m", "Re", "Im"])
        for rows, _, _, _ in results:
            writer.writerows(rows)
    energy_path = os.path.join(config.out_dir, "energy.csv")
    with open(energy_path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow([
            "freq", "family", "n", "power",
            "incident_power", "net_flux", "balance_error",
        ])
        for _, rows, _, _ in results:
            writer.writerows(rows)
    for freq, (_, _, fields_data, lines) in zip(config.frequencies, results):
        for line in lines:
            log.info("%s", line)
        if fields_data is not None:
            U_tot, U_sca = fields_data
            path = os.path.join(config.out_dir, f"fields_{freq:g}.vtk")
            export_fields(mesh, U_tot.reshape(-1, 3), U_sca.reshape(-1, 3), path)
    log.info("sweep of %d frequencies done in %.2f s",
             len(jobs), time.perf_counter() - t_start)
    return EXIT_OK


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="platescatter",
        description="Guided-wave scattering by a symmetric cavity in a plate",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    p_solve = sub.add_parser("solve", help="run a configured scattering sweep")
    p_solve.add_argument("config", help="TOML configuration file")
    p_solve.add_argument("--out", help="output directory (overrides config)")
    p_solve.add_argument("--workers", type=int, help="parallel sweep workers")
    p_solve.add_argument(
        "--check", action="store_true",
        help="validate the configuration and dispersion setup, then exit",
    )
    args = parser.parse_args(argv)

    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    try:
        config = load_config(args.config)
    except ConfigError as exc:
        print(exc, file=sys.stderr)
        return EXIT_CONFIG
    if args.out is not None:
        config = replace(config, out_dir=args.out)

    workers = args.workers
    if workers is None and os.environ.get(WORKERS_ENV):
        try:
            workers = int(os.environ[WORKERS_ENV])
        except ValueError:
            print(f"{WORKERS_ENV} must be an integer", file=sys.stderr)
            return EXIT_CONFIG
    if workers is not None and workers < 1:
        print("worker count must be positive", file=sys.stderr)
        return EXIT_CONFIG

    try:
        if args.check:
            for line in check_config(config):
                print(line)
            return EXIT_OK
        return run(config, workers)
    except ConfigError as exc:
        print(exc, file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
