"""Experiment orchestration: config-driven runs of the forward -> MSR ->
imaging -> metrics pipeline, artifact persistence with a reproducibility
manifest, identity-suite verification, refinement runs, and grayscale
rendering.

Config files are flat TOML-style tables (sections, `key = value`,
`#` comments); the canonical serializer makes parse -> serialize a
byte-identical round trip.
"""

import argparse
import math
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, analysis, geometry, imaging, msr, refine
from .backend import BACKEND
from .errors import (
    ConfigError,
    DegenerateSteeringError,
    DomainError,
    IterationError,
    LookupNameError,
    MapParseError,
    SingularityError,
    SolverError,
)
from .forward import BoundaryCondition, NystromConfig, PlaneWave, boundary_residual, solve_density
from .imaging import file_sha256

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3

_CONFIG_ERRORS = (ConfigError, LookupNameError, MapParseError, DomainError, KeyError)
_NUMERIC_ERRORS = (
    SolverError,
    IterationError,
    SingularityError,
    DegenerateSteeringError,
    np.linalg.LinAlgError,
)

# Preset experiment configurations, keyed by catalog crack and
# polarization: (directions, frequencies, lambda_1, lambda_F, search
# domain); TE differs only in the direction count.
PRESETS = {
    ("G1", "TM"): dict(count=16, freqs=10, lambda_first=0.5, lambda_last=0.4,
                       bounds=(-1.0, 1.0, -1.0, 1.0)),
    ("G2", "TM"): dict(count=28, freqs=12, lambda_first=0.6, lambda_last=0.3,
                       bounds=(-2.0, 2.0, -2.0, 2.0)),
    ("G3", "TM"): dict(count=40, freqs=16, lambda_first=0.5, lambda_last=0.3,
                       bounds=(-2.0, 2.0, -1.0, 3.0)),
    ("G4", "TM"): dict(count=32, freqs=24, lambda_first=0.4, lambda_last=0.2,
                       bounds=(-1.0, 1.0, -1.0, 1.0)),
    ("G1", "TE"): dict(count=16, freqs=10, lambda_first=0.5, lambda_last=0.4,
                       bounds=(-1.0, 1.0, -1.0, 1.0)),
    ("G2", "TE"): dict(count=36, freqs=12, lambda_first=0.6, lambda_last=0.3,
                       bounds=(-2.0, 2.0, -2.0, 2.0)),
    ("G3", "TE"): dict(count=64, freqs=16, lambda_first=0.5, lambda_last=0.3,
                       bounds=(-2.0, 2.0, -1.0, 3.0)),
    ("G4", "TE"): dict(count=64, freqs=24, lambda_first=0.4, lambda_last=0.2,
                       bounds=(-1.0, 1.0, -1.0, 1.0)),
}

APERTURES = {
    "full": (0.0, 2.0 * math.pi),
    "limited": (math.pi / 6.0, 5.0 * math.pi / 6.0),
    "west": (5.0 * math.pi / 6.0, 7.0 * math.pi / 6.0),
    "south": (7.0 * math.pi / 6.0, 11.0 * math.pi / 6.0),
    "east": (-math.pi / 6.0, math.pi / 6.0),
}

GRID_STEP = 0.02


# ---------------------------------------------------------------- config io

def _format_value(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return format(value, ".17g")
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_format_value(v) for v in value) + "]"
    return '"' + str(value) + '"'


def _parse_value(text, path, lineno):
    text = text.strip()
    if text.startswith("[") and text.endswith("]"):
        inner = text[1:-1].strip()
        if not inner:
            return []
        return [_parse_value(part, path, lineno) for part in inner.split(",")]
    if text.startswith('"') and text.endswith('"') and len(text) >= 2:
        return text[1:-1]
    if text in ("true", "false"):
        return text == "true"
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError as exc:
        raise ConfigError(f"{path}:{lineno}: cannot parse value {text!r}") from exc


def parse_config_text(text, path="<config>"):
    """Parse the TOML-style subset into {section: {key: value}}."""
    tables = {}
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].strip()
            if not current:
                raise ConfigError(f"{path}:{lineno}: empty section name")
            tables.setdefault(current, {})
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key = value")
        if current is None:
            raise ConfigError(f"{path}:{lineno}: key outside a section")
        key, value = line.split("=", 1)
        tables[current][key.strip()] = _parse_value(value, path, lineno)
    return tables


_SECTION_ORDER = ["crack", "aperture", "frequencies", "noise", "grid", "imaging", "solver"]


def serialize_config(tables):
    """Canonical serializer: fixed section order, sorted keys."""
    lines = []
    ordered = [s for s in _SECTION_ORDER if s in tables]
    ordered += [s for s in sorted(tables) if s not in _SECTION_ORDER]
    for section in ordered:
        lines.append(f"[{section}]")
        for key in sorted(tables[section]):
            lines.append(f"{key} = {_format_value(tables[section][key])}")
        lines.append("")
    return "\n".join(lines)


@dataclass
class ExperimentConfig:
    crack_table: dict
    alpha: float
    beta: float
    count: int
    lambda_first: float
    lambda_last: float
    freq_count: int
    bounds: tuple
    step: float = GRID_STEP
    bc: str = "dirichlet"
    mode: str = "tm"
    candidates: int = 8
    weight: str = "unit"
    threshold: float = 0.01
    snr_db: float = None
    seed: int = 0
    nodes_data: int = 128
    nodes_check: int = 64

    def validate(self):
        if self.nodes_data < 2 * self.nodes_check:
            raise ConfigError(
                "inverse-crime guard: data-generation nodes must be >= 2x the "
                f"verification nodes (got {self.nodes_data} vs {self.nodes_check})"
            )
        BoundaryCondition.parse(self.bc)
        imaging.SteeringMode(self.mode, self.candidates if self.mode == "te-search" else 0)
        self.weight_scheme()
        if not self.lambda_first >= self.lambda_last:
            raise ConfigError("expect lambda_first >= lambda_last (k_1 < k_F)")
        return self

    def crack(self):
        return geometry.crack_from_config(self.crack_table)

    def direction_set(self):
        return msr.DirectionSet(self.alpha, self.beta, self.count)

    def frequency_set(self):
        return imaging.FrequencySet.from_wavelengths(
            self.lambda_first, self.lambda_last, self.freq_count
        )

    def grid(self):
        x_lo, x_hi, y_lo, y_hi = self.bounds
        return imaging.SearchGrid(x_lo, x_hi, y_lo, y_hi, self.step)

    def steering_mode(self):
        if self.mode == "te-search":
            return imaging.SteeringMode.te_search(self.candidates)
        return imaging.SteeringMode(self.mode)

    def weight_scheme(self):
        if self.weight == "unit":
            return imaging.WeightScheme.unit()
        if self.weight == "log":
            return imaging.WeightScheme.log()
        if self.weight.startswith("power:"):
            return imaging.WeightScheme.power_p(int(self.weight.split(":", 1)[1]))
        raise ConfigError(f"unknown weight scheme {self.weight!r}")

    def to_tables(self):
        tables = {
            "crack": dict(self.crack_table),
            "aperture": {"alpha": self.alpha, "beta": self.beta, "count": self.count},
            "frequencies": {
                "lambda_first": self.lambda_first,
                "lambda_last": self.lambda_last,
                "count": self.freq_count,
            },
            "grid": {
                "x_lo": self.bounds[0], "x_hi": self.bounds[1],
                "y_lo": self.bounds[2], "y_hi": self.bounds[3],
                "step": self.step,
            },
            "imaging": {
                "bc": self.bc, "mode": self.mode, "weight": self.weight,
                "threshold": self.threshold, "candidates": self.candidates,
            },
            "solver": {"nodes_data": self.nodes_data, "nodes_check": self.nodes_check},
        }
        if self.snr_db is not None:
            tables["noise"] = {"snr_db": self.snr_db, "seed": self.seed}
        return tables

    @classmethod
    def from_tables(cls, tables):
        try:
            crack_table = dict(tables["crack"])
            ap = tables["aperture"]
            fr = tables["frequencies"]
            gr = tables["grid"]
        except KeyError as exc:
            raise ConfigError(f"missing config section {exc}") from exc
        im = tables.get("imaging", {})
        so = tables.get("solver", {})
        no = tables.get("noise", {})
        cfg = cls(
            crack_table=crack_table,
            alpha=float(ap["alpha"]),
            beta=float(ap["beta"]),
            count=int(ap["count"]),
            lambda_first=float(fr["lambda_first"]),
            lambda_last=float(fr["lambda_last"]),
            freq_count=int(fr["count"]),
            bounds=(float(gr["x_lo"]), float(gr["x_hi"]), float(gr["y_lo"]), float(gr["y_hi"])),
            step=float(gr.get("step", GRID_STEP)),
            bc=im.get("bc", "dirichlet"),
            mode=im.get("mode", "tm"),
            candidates=int(im.get("candidates", 8)),
            weight=im.get("weight", "unit"),
            threshold=float(im.get("threshold", 0.01)),
            snr_db=float(no["snr_db"]) if "snr_db" in no else None,
            seed=int(no.get("seed", 0)),
            nodes_data=int(so.get("nodes_data", 128)),
            nodes_check=int(so.get("nodes_check", 64)),
        )
        return cfg.validate()


def _normalize_crack_name(name):
    key = str(name).strip().upper().replace("Γ", "G").replace("GAMMA", "G")
    if key not in ("G1", "G2", "G3", "G4"):
        raise LookupNameError(f"unknown preset crack {name!r}")
    return key


def preset_config(spec, aperture="full", seed=0, snr_db=None):
    """Named catalog preset, e.g. 'G1,TM' or 'Gamma3,TE'."""
    parts = [p.strip() for p in str(spec).split(",")]
    if len(parts) != 2:
        raise LookupNameError(f"preset must be '<crack>,<TM|TE>', got {spec!r}")
    crack_key = _normalize_crack_name(parts[0])
    mode_key = parts[1].strip().upper()
    if mode_key not in ("TM", "TE"):
        raise LookupNameError(f"preset polarization must be TM or TE, got {parts[1]!r}")
    entry = PRESETS[(crack_key, mode_key)]
    if aperture not in APERTURES:
        raise LookupNameError(f"unknown aperture {aperture!r}; valid: {sorted(APERTURES)}")
    alpha, beta = APERTURES[aperture]
    candidates = 8 if crack_key == "G1" else 24
    # the long spiral needs twice the quadrature resolution of the other
    # cracks to pass the pre-run residual verification
    nodes_check = 128 if crack_key == "G3" else 64
    cfg = ExperimentConfig(
        crack_table={"kind": "catalog", "name": crack_key},
        alpha=alpha,
        beta=beta,
        count=entry["count"],
        lambda_first=entry["lambda_first"],
        lambda_last=entry["lambda_last"],
        freq_count=entry["freqs"],
        bounds=entry["bounds"],
        bc="dirichlet" if mode_key == "TM" else "neumann",
        mode="tm" if mode_key == "TM" else "te-search",
        candidates=candidates,
        snr_db=snr_db,
        seed=seed,
        nodes_data=2 * nodes_check,
        nodes_check=nodes_check,
    )
    return cfg.validate()


# ------------------------------------------------------------- experiment

@dataclass
class RunManifest:
    config_tables: dict
    artifacts: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)
    stages_completed: list = field(default_factory=list)
    seed: int = 0

    def write(self, path):
        meta = {"seed": self.seed, "backend": BACKEND, "version": __version__}
        for section, table in self.config_tables.items():
            for key, value in table.items():
                meta[f"config.{section}.{key}"] = _format_value(value)
        for name, digest in self.artifacts.items():
            meta[f"artifact.{name}.sha256"] = digest
        for stage, seconds in self.timings.items():
            meta[f"timing.{stage}_s"] = float(seconds)
        meta["stages"] = ",".join(self.stages_completed)
        imaging.save_metadata(meta, path)


def verify_manifest(path):
    """Re-hash the artifacts recorded in a manifest; returns mismatches."""
    meta = imaging.load_metadata(path)
    base = Path(path).parent
    mismatches = []
    for key, recorded in meta.items():
        if not key.startswith("artifact.") or not key.endswith(".sha256"):
            continue
        name = key[len("artifact.") : -len(".sha256")]
        target = base / name
        if not target.exists():
            mismatches.append(f"{name}: missing")
        elif file_sha256(target) != recorded:
            mismatches.append(f"{name}: hash mismatch")
    return mismatches


def run_experiment(cfg: ExperimentConfig, out_dir, threads=1, stop_after=None):
    """forward -> MSR -> SVD -> imaging -> metrics with artifact persistence.

    A failed stage raises after writing a manifest that records the stages
    already completed."""
    cfg.validate()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest(config_tables=cfg.to_tables(), seed=cfg.seed)
    manifest_path = out / "manifest.txt"
    crack = cfg.crack()
    dirs = cfg.direction_set()
    bc = BoundaryCondition.parse(cfg.bc)
    wavenumbers = cfg.frequency_set().wavenumbers()

    try:
        # solver verification at the check node count; data generation at
        # >= 2x that count (inverse-crime guard, validated above)
        t0 = time.perf_counter()
        if bc is BoundaryCondition.DIRICHLET:
            probe = solve_density(
                crack,
                PlaneWave(np.array([0.0, -1.0]), wavenumbers[0]),
                bc,
                NystromConfig(nodes_per_arc=cfg.nodes_check),
            )
            defect = boundary_residual(probe, 64)
            if defect > 1e-6:
                raise SolverError(f"verification residual {defect:.3e} exceeds 1e-6")
        manifest.timings["verify"] = time.perf_counter() - t0

        t0 = time.perf_counter()
        matrices = []
        data_cfg = NystromConfig(nodes_per_arc=cfg.nodes_data)
        for f_idx, k in enumerate(wavenumbers):
            matrix = msr.assemble(crack, k, dirs, bc, data_cfg)
            if bc is BoundaryCondition.NEUMANN:
                if dirs.is_full_view and matrix.symmetry_defect() > 1e-6:
                    raise SolverError("assembled matrix violates reciprocal symmetry")
            if cfg.snr_db is not None:
                matrix = msr.add_noise(matrix, msr.NoiseSpec(cfg.snr_db, cfg.seed + f_idx))
            name = f"msr_{f_idx:03d}.msr"
            msr.save_msr(matrix, out / name)
            manifest.artifacts[name] = file_sha256(out / name)
            matrices.append(matrix)
        manifest.timings["forward"] = time.perf_counter() - t0
        manifest.stages_completed.append("forward")
        if stop_after == "forward":
            manifest.write(manifest_path)
            return manifest

        t0 = time.perf_counter()
        subspaces = [msr.svd_threshold(m, cfg.threshold) for m in matrices]
        manifest.timings["svd"] = time.perf_counter() - t0
        manifest.stages_completed.append("svd")

        t0 = time.perf_counter()
        image = imaging.image_subspace(
            subspaces, cfg.grid(), cfg.steering_mode(), cfg.weight_scheme(), dirs,
            threads=threads,
        )
        imaging.save_map(image, out / "map.csv")
        manifest.artifacts["map.csv"] = file_sha256(out / "map.csv")
        meta = dict(image.provenance)
        meta["threshold"] = cfg.threshold
        meta["seed"] = cfg.seed
        meta["snr_db"] = "none" if cfg.snr_db is None else cfg.snr_db
        for f_idx in range(len(matrices)):
            name = f"msr_{f_idx:03d}.msr"
            meta[f"input.{name}.sha256"] = manifest.artifacts[name]
        imaging.save_metadata(meta, out / "map.meta")
        manifest.artifacts["map.meta"] = file_sha256(out / "map.meta")
        manifest.timings["imaging"] = time.perf_counter() - t0
        manifest.stages_completed.append("imaging")

        t0 = time.perf_counter()
        metrics = analysis.localization_metrics(image, crack)
        for c_idx, arc in enumerate(crack.components):
            for label, t_end in (("lo", -1.0), ("hi", 1.0)):
                endpoint = np.atleast_2d(arc.points(np.array([t_end])))[0]
                near = _endpoint_top_fraction(image, endpoint)
                metrics[f"endpoint_{c_idx}_{label}_top5"] = near
        imaging.save_metadata(metrics, out / "metrics.txt")
        manifest.artifacts["metrics.txt"] = file_sha256(out / "metrics.txt")
        manifest.timings["metrics"] = time.perf_counter() - t0
        manifest.stages_completed.append("metrics")
    finally:
        manifest.write(manifest_path)
    return manifest


def _endpoint_top_fraction(image, endpoint):
    grid = image.grid
    pts = grid.points()
    near = np.hypot(pts[:, 0] - endpoint[0], pts[:, 1] - endpoint[1]) <= 2.0 * grid.h + 1e-12
    if not near.any():
        return False
    return bool(np.max(image.values[near]) >= np.quantile(image.values, 0.95))


# ----------------------------------------------------------------- render

def render_map(map_csv, out_path):
    """8-bit grayscale PGM (P5), min-max normalized, rows from max y down;
    a constant map renders as all-zero pixels."""
    image = imaging.load_map(map_csv)
    rows = image.as_rows()
    lo, hi = float(rows.min()), float(rows.max())
    if hi > lo:
        pixels = np.floor(255.0 * (rows - lo) / (hi - lo)).astype(np.uint8)
    else:
        pixels = np.zeros_like(rows, dtype=np.uint8)
    pixels = pixels[::-1, :]  # image convention: first row = largest y
    with open(out_path, "wb") as fh:
        fh.write(f"P5\n{pixels.shape[1]} {pixels.shape[0]}\n255\n".encode())
        fh.write(pixels.tobytes())


# ----------------------------------------------------------------- verify

def identity_suite(fast=False):
    """The analysis identity checks; returns a list of (name, ok, detail)."""
    rng = np.random.default_rng(123)
    results = []
    dirs = msr.DirectionSet.full_view(256).directions()
    cases = 20 if fast else 100
    worst_a = worst_b = 0.0
    tried = 0
    while tried < cases:
        k = rng.uniform(2.0, 30.0)
        x = rng.uniform(-1.5, 1.5, 2)
        r = float(np.hypot(*x))
        if k * r > 40.0 or r < 1e-6:
            continue
        tried += 1
        discrete = np.mean(np.exp(1j * k * (dirs @ x)))
        from .backend import kernels

        worst_a = max(worst_a, abs(discrete - kernels.j0v(np.array([k * r]))[0]))
        ang = rng.uniform(0.0, 2.0 * np.pi)
        xi = np.array([math.cos(ang), math.sin(ang)])
        discrete_b = np.mean((dirs @ xi) * np.exp(1j * k * (dirs @ x)))
        expected = 1j * ((x / r) @ xi) * kernels.j1v(np.array([k * r]))[0]
        worst_b = max(worst_b, abs(discrete_b - expected))
    results.append(("circle-average-j0", worst_a <= 1e-3, f"max defect {worst_a:.3e}"))
    results.append(("circle-average-j1", worst_b <= 1e-3, f"max defect {worst_b:.3e}"))

    # ring integrals against the internal adaptive quadrature
    alpha, beta = math.pi / 6.0, 5.0 * math.pi / 6.0
    worst = 0.0
    for _ in range(5 if fast else 20):
        k = rng.uniform(10.0, 21.0)
        x = rng.uniform(-1.0, 1.0, 2)
        ang = rng.uniform(0.0, 2.0 * np.pi)
        xi = np.array([math.cos(ang), math.sin(ang)])
        res = analysis.ring_integrals(alpha, beta, k, x, xi)
        ref_p = analysis.adaptive_quad(
            lambda t: np.exp(1j * k * (math.cos(t) * x[0] + math.sin(t) * x[1])),
            alpha, beta, tol=1e-12,
        )
        ref_w = analysis.adaptive_quad(
            lambda t: (math.cos(t) * xi[0] + math.sin(t) * xi[1])
            * np.exp(1j * k * (math.cos(t) * x[0] + math.sin(t) * x[1])),
            alpha, beta, tol=1e-12,
        )
        worst = max(worst, abs(res.plain - ref_p), abs(res.weighted - ref_w))
    results.append(("ring-integrals", worst <= 1e-8, f"max defect {worst:.3e}"))

    full = analysis.ring_integrals(
        0.0, 2.0 * math.pi, 12.0, np.array([0.2, 0.1]), np.array([0.0, 1.0])
    )
    from .backend import kernels

    defect = abs(full.plain - 2.0 * math.pi * kernels.j0v(np.array([12.0 * math.hypot(0.2, 0.1)]))[0])
    results.append(
        ("ring-full-aperture", defect == 0.0 and full.tail_bound == 0.0, f"defect {defect:.3e}")
    )

    k1, kf = 2.0 * math.pi / 0.5, 2.0 * math.pi / 0.4
    band = analysis.kernel_predict(
        "TM_BAND", [0.3, 0.0], np.array([[0.0, 0.0]]),
        k_first=k1, k_last=kf, include_remainder=True,
    )
    ref = analysis.adaptive_quad(
        lambda k: kernels.j0v(np.array([k * 0.3]))[0] ** 2, k1, kf, tol=1e-12
    ).real / (kf - k1)
    results.append(("tm-band-kernel", abs(band - ref) <= 1e-6, f"defect {abs(band - ref):.3e}"))

    osc = analysis.halfline_oscillatory_j0(0.3, 1.0, t_max=500.0 if fast else 2000.0)
    defect = abs(osc - 1.0 / math.sqrt(1.0 - 0.09))
    results.append(("oscillatory-halfline", defect <= 1e-3, f"defect {defect:.3e}"))
    return results


# -------------------------------------------------------------------- CLI

def _add_common(parser):
    parser.add_argument("--config", type=str, help="config file path")
    parser.add_argument("--preset", type=str, help="catalog preset, e.g. G1,TM")
    parser.add_argument("--aperture", type=str, default="full", help=f"one of {sorted(APERTURES)}")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--snr", type=float, default=None, help="noise SNR in dB")
    parser.add_argument("--out", type=str, required=True)
    parser.add_argument("--threads", type=int, default=1)
    parser.add_argument("--mode", type=str, default=None, help="tm | te-search | te-plain")
    parser.add_argument("--weight", type=str, default=None, help="unit | power:p | log")


def _config_from_args(args):
    if args.config:
        cfg = ExperimentConfig.from_tables(
            parse_config_text(Path(args.config).read_text(), args.config)
        )
        if args.snr is not None:
            cfg.snr_db = args.snr
        if args.seed:
            cfg.seed = args.seed
    elif args.preset:
        cfg = preset_config(args.preset, args.aperture, seed=args.seed, snr_db=args.snr)
    else:
        raise ConfigError("either --config or --preset is required")
    if args.mode:
        cfg.mode = args.mode
        if args.mode in ("te-search", "te-plain"):
            cfg.bc = "neumann"
    if args.weight:
        cfg.weight = args.weight
    return cfg.validate()


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="arcmig",
        description="Far-field crack scattering and subspace-migration imaging",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_forward = sub.add_parser("forward", help="synthesize and store MSR matrices")
    _add_common(p_forward)

    p_image = sub.add_parser("image", help="full pipeline: MSR, map, metrics")
    _add_common(p_image)

    p_verify = sub.add_parser("verify", help="run the analysis identity suites")
    p_verify.add_argument("--manifest", type=str, help="re-hash artifacts of a manifest")
    p_verify.add_argument("--fast", action="store_true")

    p_refine = sub.add_parser("refine", help="Gauss-Newton shape refinement")
    p_refine.add_argument("--out", type=str, required=True)
    p_refine.add_argument("--snr", type=float, default=None)
    p_refine.add_argument("--seed", type=int, default=0)

    p_render = sub.add_parser("render", help="render a map CSV to grayscale PGM")
    p_render.add_argument("--in", dest="input", type=str, required=True)
    p_render.add_argument("--out", type=str, required=True)

    args = parser.parse_args(argv)
    try:
        return _dispatch(args)
    except _CONFIG_ERRORS as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except _NUMERIC_ERRORS as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


def _dispatch(args):
    if args.command == "forward":
        cfg = _config_from_args(args)
        manifest = run_experiment(cfg, args.out, threads=args.threads, stop_after="forward")
        print(f"wrote {len(manifest.artifacts)} MSR files to {args.out}")
        return EXIT_OK

    if args.command == "image":
        cfg = _config_from_args(args)
        manifest = run_experiment(cfg, args.out, threads=args.threads)
        print(f"stages: {', '.join(manifest.stages_completed)}; artifacts in {args.out}")
        return EXIT_OK

    if args.command == "verify":
        if args.manifest:
            mismatches = verify_manifest(args.manifest)
            if mismatches:
                for item in mismatches:
                    print(f"FAIL manifest: {item}")
                return EXIT_NUMERIC
            print("PASS manifest: all artifact hashes match")
        ok = True
        for name, passed, detail in identity_suite(fast=args.fast):
            print(f"{'PASS' if passed else 'FAIL'} {name}: {detail}")
            ok &= passed
        return EXIT_OK if ok else EXIT_NUMERIC

    if args.command == "refine":
        noise = None if args.snr is None else (args.snr, args.seed)
        initial, truth, data = refine.reference_scenario(noise=noise)
        trajectory = refine.newton_refine(initial, data)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        refine.save_trajectory(trajectory, out / "trajectory.csv")
        for state in trajectory:
            coeffs = " ".join(format(a, "+.4f") for a in state.coefficients)
            print(f"iter {state.iteration}: R = {state.residual_value:.6f}  a = {coeffs}")
        final = trajectory[-1].coefficients
        dev = float(np.max(np.abs(final - truth.coefficients)))
        print(f"max coefficient deviation from truth: {dev:.4f}")
        return EXIT_OK

    if args.command == "render":
        render_map(args.input, args.out)
        print(f"rendered {args.input} -> {args.out}")
        return EXIT_OK

    raise ConfigError(f"unknown command {args.command!r}")


if __name__ == "__main__":
    sys.exit(main())
