"""Command-line front end: model construction from JSON configs, invariant
computation commands, verification suites, machine-readable reports.

Exit codes: 0 success, 2 validation error, 3 convergence/integerness
failure, 4 spectral gap closed.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time

import numpy as np

from . import floquet as fl
from . import models, pairing
from .grid_alg import AlgElement, TorusGrid, check_invariance
from .kclass import BasePoint, GapClosedError, make_osu_from_hamiltonian
from .pairing import integer_check

REPORT_SCHEMA = "dkpair-report/1"

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_CONVERGENCE = 3
EXIT_GAP = 4


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# config parsing
# ---------------------------------------------------------------------------

def _as_complex_matrix(rows, m, where):
    arr = np.asarray(rows, dtype=float)
    if arr.shape != (m, m, 2):
        raise ConfigError(f"{where}: expected {m}x{m} [re, im] pairs, "
                          f"got shape {arr.shape}")
    return arr[..., 0] + 1j * arr[..., 1]


class ModelConfig:
    """Validated model description.

    JSON fields: dimension, matrix_size, hoppings (list of {offset, matrix}),
    optional spin_doubling, rashba (hopping list for the off-diagonal block),
    drive ({period, segments: [{duration, hoppings}]}), real_structure.
    """

    def __init__(self, raw: dict):
        self.raw = raw
        self.dimension = int(raw.get("dimension", 2))
        if not 0 <= self.dimension <= 3:
            raise ConfigError("dimension must be 0..3")
        self.matrix_size = int(raw.get("matrix_size", 1))
        if self.matrix_size < 1:
            raise ConfigError("matrix_size must be positive")
        self.spin_doubling = bool(raw.get("spin_doubling", False))
        self.hoppings = self._parse_hoppings(raw.get("hoppings", []), "hoppings")
        self.rashba = self._parse_hoppings(raw.get("rashba", []), "rashba") \
            if "rashba" in raw else None
        self.real_structure = raw.get("real_structure", "none")
        if self.real_structure not in ("none", "quaternionic"):
            raise ConfigError(f"unknown real_structure {self.real_structure!r}")
        self.drive = raw.get("drive")
        if self.drive is not None:
            if "period" not in self.drive or "segments" not in self.drive:
                raise ConfigError("drive needs period and segments")

    def _parse_hoppings(self, items, where):
        out = {}
        m = self.matrix_size
        for i, item in enumerate(items):
            try:
                offset = tuple(int(v) for v in item["offset"])
            except (KeyError, TypeError) as exc:
                raise ConfigError(f"{where}[{i}]: bad offset") from exc
            if len(offset) != self.dimension:
                raise ConfigError(f"{where}[{i}]: offset dimension mismatch")
            mat = _as_complex_matrix(item.get("matrix"), m, f"{where}[{i}].matrix")
            if offset in out:
                raise ConfigError(f"{where}[{i}]: duplicate offset {offset}")
            out[offset] = mat
        return out

    @classmethod
    def load(cls, path: str) -> "ModelConfig":
        with open(path) as fh:
            return cls(json.load(fh))

    def digest(self) -> str:
        return hashlib.sha256(
            json.dumps(self.raw, sort_keys=True).encode()).hexdigest()[:16]

    # -- builders -----------------------------------------------------
    def grid(self, n: int) -> TorusGrid:
        return TorusGrid((n,) * self.dimension)

    def block_symbol(self, grid: TorusGrid) -> AlgElement:
        try:
            return models.symbol_from_hoppings(grid, self.hoppings,
                                               self.matrix_size)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def symbol(self, grid: TorusGrid) -> AlgElement:
        h1 = self.block_symbol(grid)
        if not self.spin_doubling:
            if self.rashba:
                raise ConfigError("rashba terms need spin_doubling")
            return h1
        h = models.spin_double(h1)
        if self.rashba:
            r = models.block_from_hoppings(grid, self.rashba, self.matrix_size)
            m1 = self.matrix_size
            h.data[0][..., :m1, m1:] += r.data[0]
            h.data[0][..., m1:, :m1] += np.conj(np.swapaxes(r.data[0], -1, -2))
        return h

    def drive_object(self, grid: TorusGrid) -> fl.FloquetDrive:
        if self.drive is None:
            raise ConfigError("config has no drive section")
        segments = []
        try:
            for i, seg in enumerate(self.drive["segments"]):
                hop = self._parse_hoppings(seg.get("hoppings", []), f"drive[{i}]")
                h1 = models.symbol_from_hoppings(grid, hop, self.matrix_size)
                h = models.spin_double(h1) if self.spin_doubling else h1
                segments.append((float(seg["duration"]), h))
            return fl.FloquetDrive(float(self.drive["period"]), tuple(segments))
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------

class Report:
    def __init__(self, command: str, config_digest: str | None, grids: dict):
        self.payload = {
            "schema": REPORT_SCHEMA,
            "command": command,
            "config_digest": config_digest,
            "grids": grids,
            "values": {},
            "checks": [],
            "status": "ok",
        }
        self._t0 = time.perf_counter()

    def value(self, name, val, **extra):
        if isinstance(val, complex):
            entry = {"re": val.real, "im": val.imag}
        else:
            entry = {"value": val}
        entry.update(extra)
        self.payload["values"][name] = entry

    def check(self, name, passed, residual=None, tolerance=None):
        self.payload["checks"].append({
            "name": name, "passed": bool(passed),
            "residual": None if residual is None else float(residual),
            "tolerance": tolerance,
        })
        if not passed:
            self.payload["status"] = "failed"

    def finish(self, path=None):
        self.payload["wall_time_s"] = round(time.perf_counter() - self._t0, 4)
        text = json.dumps(self.payload, indent=2)
        if path:
            with open(path, "w") as fh:
                fh.write(text + "\n")
        print(text)
        return self.payload


def _quantized(report: Report, name: str, coarse: float, fine: float,
               tol: float) -> int:
    """Record a quantized value with its refinement check; raises on failure."""
    n_coarse = integer_check(coarse, tol)
    n_fine = integer_check(fine, tol)
    stable = n_coarse == n_fine
    report.value(name, coarse, rounded=n_coarse,
                 residual=abs(coarse - n_coarse), refined=fine,
                 refinement_stable=stable)
    if not stable:
        raise ValueError(f"{name}: rounded value changed under grid doubling "
                         f"({n_coarse} vs {n_fine})")
    return n_coarse


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_pair(cfg: ModelConfig, args) -> int:
    grids = {"momentum": args.grid, "time": args.tgrid}
    report = Report("pair", cfg.digest(), grids)
    cycle_name = args.cycle
    if cycle_name == "ch0":
        grid = cfg.grid(args.grid) if cfg.dimension else TorusGrid(())
        h = cfg.symbol(grid)
        x = make_osu_from_hamiltonian(h)
        e = BasePoint.standard_rho(grid, h.m, 1, sign=-1)
        val = pairing.pair(pairing.ch0(), x, e).value
        report.value("pairing", val)
        rank = integer_check(val.real, args.tol)
        report.value("rank", float(rank), rounded=rank)
        report.check("integer", True, abs(val.real - rank), args.tol)
    elif cycle_name == "ch1":
        if cfg.dimension != 1:
            raise ConfigError("ch1 needs a one-dimensional model")
        grid = TorusGrid((args.tgrid,), ("time",))
        u = models.unitary_loop_from_modes(grid, cfg.hoppings, cfg.matrix_size)
        try:
            w = pairing.winding_number(u)
        except ValueError as exc:
            raise ConfigError(f"loop modes do not define a unitary: {exc}")
        n = integer_check((w / (2j * np.pi)).real, args.tol)
        report.value("pairing", w, winding=n)
        report.check("integer", True, abs(w / (2j * np.pi) - n), args.tol)
    elif cycle_name == "ch2":
        if cfg.dimension != 2:
            raise ConfigError("ch2 needs a two-dimensional model")
        from .kclass import flatten
        values = []
        for n in (args.grid, 2 * args.grid):
            grid = cfg.grid(n)
            s = flatten(cfg.symbol(grid))
            p = (s + AlgElement.unit(grid, s.m, 0)).scale(0.5)
            values.append(pairing.chern_number(p))
        ch = _quantized(report, "chern", values[0], values[1], args.tol)
        x = make_osu_from_hamiltonian(cfg.symbol(cfg.grid(args.grid)))
        e = BasePoint.standard_rho(x.body.grid, x.body.m, 1, sign=-1)
        val = pairing.pair(pairing.ch2(), x, e).value
        report.value("pairing", val, two_pi_times=2 * np.pi * val.real)
        report.check("ray", abs(val.imag) <= args.tol, abs(val.imag), args.tol)
        report.check("chern_consistency",
                     abs(2 * np.pi * val.real - ch) <= 1e-6,
                     abs(2 * np.pi * val.real - ch), 1e-6)
    else:
        raise ConfigError(f"unknown cycle {cycle_name!r} (use ch0|ch1|ch2)")
    report.finish(args.report)
    return EXIT_OK


def cmd_z2(cfg: ModelConfig, args) -> int:
    if not cfg.spin_doubling:
        raise ConfigError("z2 needs a spin-doubled model")
    if cfg.rashba:
        raise ConfigError("z2 via the closed form needs a decoupled model "
                          "(no rashba terms); supply a contraction through "
                          "the floquet command otherwise")
    report = Report("z2", cfg.digest(), {"momentum": args.grid})
    rs = models.quaternionic_structure(k=0)
    spins = []
    torsions = []
    for n in (args.grid, 2 * args.grid):
        grid = cfg.grid(n)
        h = cfg.symbol(grid)
        inv, res = check_invariance(rs, h, 1e-9)
        if n == args.grid:
            report.check("time_reversal_invariance", inv, res, 1e-9)
            if not inv:
                report.finish(args.report)
                return EXIT_VALIDATION
        h1 = models.symbol_from_hoppings(grid, cfg.hoppings, cfg.matrix_size)
        spins.append(pairing.spin_chern(h1))
        x = make_osu_from_hamiltonian(h)
        e = BasePoint.standard_rho(grid, h.m, 1, sign=-1)
        y = AlgElement(grid, h.m, 1)
        y.data[0] = np.kron(np.diag([-1j, 1j]), np.eye(h.m // 2))
        torsions.append(pairing.torsion_pairing_closed_form(
            pairing.ch2(), x, e, y, pairing.MODULUS_KANE_MELE_CH2))
    sc = _quantized(report, "spin_chern", spins[0], spins[1], args.tol)
    report.value("torsion_pairing", torsions[0].reduced,
                 modulus=torsions[0].modulus)
    report.check("torsion_refinement",
                 torsions[0].distance(torsions[1]) <= 1e-6,
                 torsions[0].distance(torsions[1]), 1e-6)
    z2 = torsions[0].z2_class(2 * np.pi)
    report.value("z2_class", float(z2), rounded=z2)
    report.check("parity_consistency", z2 == sc % 2)
    report.finish(args.report)
    return EXIT_OK


def cmd_floquet(cfg: ModelConfig, args) -> int:
    report = Report("floquet", cfg.digest(),
                    {"momentum": args.grid, "time": args.tgrid})
    grid = cfg.grid(args.grid)
    drive = cfg.drive_object(grid)
    z0 = complex(np.exp(1j * args.arc0))
    z1 = complex(np.exp(1j * args.arc1))
    rs = models.quaternionic_structure(k=0) if cfg.spin_doubling else None
    b0, b1 = fl.branch_pair(z0, z1, drive.period)
    h0 = fl.effective_hamiltonian(drive, b0)
    h1 = fl.effective_hamiltonian(drive, b1)
    arc = fl.arc_projection(drive, z0, z1)
    ident = (h1 - h0).scale(-1j * drive.period) \
        - arc.projection.scale(2j * np.pi)
    report.value("branch_gap_margin", arc.gap_margin)
    report.value("arc_rank", float(arc.rank))
    report.check("branch_identity", ident.norm_inf() <= 1e-9,
                 ident.norm_inf(), 1e-9)
    if rs is not None:
        tri = fl.check_time_reversal(drive, rs)
        report.check("time_reversal", tri <= 1e-9, tri, 1e-9)
        loop0 = fl.periodized_evolution(drive, b0, args.tgrid)
        report.check("periodicity", fl.periodicity_residual(loop0) <= 1e-9,
                     fl.periodicity_residual(loop0), 1e-9)
        contractions = None
        if args.strategy == "user_supplied":
            if not args.contraction:
                raise ConfigError("user_supplied strategy needs --contraction")
            from .gridio import read_contraction_grid
            contractions = tuple(read_contraction_grid(f) for f in args.contraction)
        kval, info = fl.kane_mele_floquet_invariant(
            drive, z0, z1, strategy=args.strategy, rs=rs,
            contractions=contractions, t_samples=args.tgrid,
            integer_tol=args.tol)
        report.value("k_invariant", kval.reduced, modulus=kval.modulus)
        for key, val in info.items():
            if isinstance(val, (int, float)):
                report.value(key, float(val))
        if args.strategy == "decoupled":
            fine_drive = cfg.drive_object(cfg.grid(2 * args.grid))
            kfine, _ = fl.kane_mele_floquet_invariant(
                fine_drive, z0, z1, strategy="decoupled", rs=rs,
                integer_tol=args.tol)
            report.check("k_refinement_stable", kval.reduced == kfine.reduced)
        else:
            report.value("k_refinement", 0.0,
                         note="fixed user-supplied contraction grid")
    report.finish(args.report)
    return EXIT_OK


def cmd_verify(args) -> int:
    from . import verify as verify_mod
    suites = {
        "clifford": verify_mod.suite_clifford,
        "selection-rules": verify_mod.suite_selection_rules,
        "pimsner": verify_mod.suite_pimsner,
        "torsion": verify_mod.suite_torsion,
        "ko-examples": verify_mod.suite_ko_examples,
    }
    if args.suite not in suites:
        raise ConfigError(f"unknown suite {args.suite!r}; "
                          f"choose from {sorted(suites)}")
    report = Report(f"verify:{args.suite}", None,
                    {"momentum": args.grid, "time": args.tgrid})
    suites[args.suite](report, grid_n=args.grid, t_n=args.tgrid)
    report.finish(args.report)
    return EXIT_OK if report.payload["status"] == "ok" else EXIT_CONVERGENCE


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="dkpair",
        description="Character pairings, torsion-valued pairings and Floquet "
                    "invariants of tight-binding torus models.")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, needs_config=True):
        if needs_config:
            p.add_argument("--config", required=True, help="model JSON file")
        p.add_argument("--grid", type=int, default=32,
                       help="momentum samples per axis (default 32)")
        p.add_argument("--tgrid", type=int, default=256,
                       help="time samples per period (default 256)")
        p.add_argument("--tol", type=float, default=1e-6,
                       help="integerness tolerance (default 1e-6)")
        p.add_argument("--report", help="write the JSON report to this file")

    p = sub.add_parser("pair", help="pair a character with the model's class")
    p.add_argument("--cycle", required=True, choices=["ch0", "ch1", "ch2"])
    common(p)

    p = sub.add_parser("z2", help="spin Chern number and Kane-Mele class")
    common(p)

    p = sub.add_parser("floquet", help="driven-model branch data and K invariant")
    p.add_argument("--arc0", type=float, required=True,
                   help="phase of the first gap point z0")
    p.add_argument("--arc1", type=float, required=True,
                   help="phase of the second gap point z1")
    p.add_argument("--strategy", default="decoupled",
                   choices=["decoupled", "user_supplied"])
    p.add_argument("--contraction", nargs=2, metavar=("FILE0", "FILE1"),
                   help="contraction grids for the two branches")
    common(p)

    p = sub.add_parser("verify", help="run a built-in verification suite")
    p.add_argument("suite", help="clifford | selection-rules | pimsner | "
                                 "torsion | ko-examples")
    common(p, needs_config=False)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "verify":
            return cmd_verify(args)
        cfg = ModelConfig.load(args.config)
        if args.command == "pair":
            return cmd_pair(cfg, args)
        if args.command == "z2":
            return cmd_z2(cfg, args)
        if args.command == "floquet":
            return cmd_floquet(cfg, args)
        raise ConfigError(f"unknown command {args.command!r}")
    except (ConfigError, json.JSONDecodeError, FileNotFoundError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except GapClosedError as exc:
        print(f"gap closed: {exc}", file=sys.stderr)
        return EXIT_GAP
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE


if __name__ == "__main__":
    sys.exit(main())
