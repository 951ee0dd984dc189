"""Experiment drivers, instance serialization, and machine-readable reports.

Each driver samples with per-trial child streams of one master seed, so a
rerun with the same configuration reproduces the same report.  Reports embed
the exact rational constants they test against (as "p/q" strings) next to the
measured values; wall-clock runtimes are recorded per check but excluded from
the canonical byte form used to compare reruns.
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import asdict, dataclass
from fractions import Fraction
from pathlib import Path
from statistics import mean
from typing import Optional

import numpy as np

from .construction import (
    Basis,
    ConstructionError,
    Instance,
    VARIANTS,
    constant_vectors,
    sample_instance,
)
from .itemsets import ItemSet, part_cells
from .infotheory import verify_identities
from .protocols import PROTOCOL_NAMES, run_on_instance
from .rng import RngStream
from .sampling import PartitionParameter, expected_intersection
from .stats import independence_chi2, two_sample_chi2, uniform_chi2
from .valuations import (
    RECOVER_AMBIGUOUS,
    RECOVER_NONE,
    build_valuations,
    cross_intersections,
    eps_fraction,
    opt_clause_pair,
    oracle_allocation,
    recover_theta,
    recovery_threshold,
)

SIGNIFICANCE = 0.001

# Stream-id bases keep the draw sequences of different drivers disjoint.
_STREAM_CONCENTRATION = 1 << 20
_STREAM_THETA = 2 << 20
_STREAM_NU = 3 << 20
_STREAM_NU_PRIME = 4 << 20
_STREAM_PROTOCOL = 5 << 20
_STREAM_GEN = 6 << 20


class ConfigError(ValueError):
    """Raised for configurations outside the supported parameter ranges."""


@dataclass(frozen=True)
class ExperimentConfig:
    m: int
    n: int = 4
    eps: float = 0.002
    trials: int = 1
    seed: int = 0
    variant: str = "nu"
    protocol: Optional[str] = None
    out: Optional[str] = None

    def validate(self) -> None:
        if self.m < 16 or self.m % 16 != 0:
            raise ConfigError(f"m must be a positive multiple of 16, got {self.m}")
        if self.n < 1:
            raise ConfigError("n must be at least 1")
        if not 0 < self.eps < 0.25:
            raise ConfigError(f"eps must lie in (0, 1/4), got {self.eps}")
        if self.trials < 1:
            raise ConfigError("trials must be at least 1")
        if self.variant not in VARIANTS:
            raise ConfigError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if self.protocol is not None and self.protocol not in PROTOCOL_NAMES:
            raise ConfigError(f"unknown protocol {self.protocol!r}; known: {', '.join(PROTOCOL_NAMES)}")


def frac_str(value: Fraction) -> str:
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


def new_report(kind: str, cfg: ExperimentConfig) -> dict:
    return {"kind": kind, "config": asdict(cfg), "checks": [], "passed": True}


def add_check(
    report: dict,
    name: str,
    status: str,
    measured: dict,
    thresholds: Optional[dict] = None,
    runtime_s: Optional[float] = None,
) -> None:
    if status not in ("pass", "fail", "info"):
        raise ValueError(f"unknown status {status!r}")
    report["checks"].append(
        {
            "name": name,
            "status": status,
            "measured": measured,
            "thresholds": thresholds or {},
            "runtime_s": runtime_s,
        }
    )
    if status == "fail":
        report["passed"] = False


def report_to_json(report: dict, canonical: bool = False) -> str:
    if not canonical:
        return json.dumps(report, indent=2)
    stripped = json.loads(json.dumps(report))
    for check in stripped.get("checks", []):
        check.pop("runtime_s", None)
    return json.dumps(stripped, indent=2)


def canonical_report_bytes(report: dict) -> bytes:
    """Byte form that is identical across reruns with the same seed."""
    return report_to_json(report, canonical=True).encode()


def write_report(report: dict, path: str | Path) -> None:
    Path(path).write_text(report_to_json(report) + "\n")


# ---------------------------------------------------------------------------
# Instance serialization.
# ---------------------------------------------------------------------------


def instance_to_json(inst: Instance) -> dict:
    """Schema: items are 0-indexed, hex is little-endian lowercase (item 0 is
    the least significant bit of the first byte), i_star is 1-based."""
    return {
        "m": inst.m,
        "n": inst.n,
        "variant": inst.variant,
        "theta": inst.theta,
        "i_star": inst.i_star + 1,
        "S": [inst.s.s1.to_hex(), inst.s.s2.to_hex()],
        "T": [inst.t.s1.to_hex(), inst.t.s2.to_hex()],
        "A1": [x.to_hex() for x in inst.a1],
        "A2": [x.to_hex() for x in inst.a2],
        "B1": [x.to_hex() for x in inst.b1],
        "B2": [x.to_hex() for x in inst.b2],
        "rA": list(inst.r_a),
        "rB": list(inst.r_b),
        "seed": inst.seed,
    }


def instance_from_json(data: dict) -> Instance:
    """Parse and re-validate; rejects any invariant violation."""
    try:
        m = int(data["m"])
        n = int(data["n"])
        sets = {
            key: tuple(ItemSet.from_hex(m, h) for h in data[key]) for key in ("S", "T", "A1", "A2", "B1", "B2")
        }
        inst = Instance(
            m=m,
            n=n,
            variant=data["variant"],
            s=Basis(*sets["S"]),
            t=Basis(*sets["T"]),
            i_star=int(data["i_star"]) - 1,
            a1=sets["A1"],
            a2=sets["A2"],
            b1=sets["B1"],
            b2=sets["B2"],
            theta=int(data["theta"]),
            r_a=tuple(int(r) for r in data["rA"]),
            r_b=tuple(int(r) for r in data["rB"]),
            seed=int(data.get("seed", 0)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ConstructionError(f"malformed instance payload: {exc}") from exc
    inst.validate()
    return inst


def dump_instance(inst: Instance, path: str | Path) -> None:
    Path(path).write_text(json.dumps(instance_to_json(inst), indent=2) + "\n")


def load_instance(path: str | Path) -> Instance:
    return instance_from_json(json.loads(Path(path).read_text()))


def generate_instance(cfg: ExperimentConfig) -> Instance:
    cfg.validate()
    rng = RngStream(cfg.seed, _STREAM_GEN)
    return sample_instance(cfg.m, cfg.n, cfg.variant, rng)


# ---------------------------------------------------------------------------
# Verification drivers.
# ---------------------------------------------------------------------------


def _exact_delta_table(m: int) -> tuple[dict, bool]:
    """Exact expected cross intersections on a sampled compatible pair.

    All four regular combinations and both special combinations are computed
    by the double-sum formula and compared against the golden rationals
    51m/200 and 61m/240.
    """
    rng = RngStream(981, 0)
    inst = sample_instance(m, 1, "nu", rng)
    vec = constant_vectors(m)
    s, t = inst.s, inst.t

    def clause_param(basis: Basis) -> PartitionParameter:
        return PartitionParameter(tuple(part_cells(m, basis.sets())), vec.reg)

    def special_param(profile: tuple[int, ...]) -> PartitionParameter:
        return PartitionParameter(tuple(part_cells(m, (*s.sets(), *t.sets()))), profile)

    a_side = {1: clause_param(s), 2: clause_param(s.rev)}
    b_side = {1: clause_param(t), 2: clause_param(t.rev)}
    golden_reg = Fraction(51 * m, 200)
    golden_spec = Fraction(61 * m, 240)
    regular = {
        f"regular_{i}{j}": expected_intersection(a_side[i], b_side[j])
        for i in (1, 2)
        for j in (1, 2)
    }
    special = {
        "special_1": expected_intersection(special_param(vec.spec1), b_side[2]),
        "special_2": expected_intersection(special_param(vec.spec2), b_side[1]),
    }
    ok = all(v == golden_reg for v in regular.values()) and all(
        v == golden_spec for v in special.values()
    )
    measured = {k: frac_str(v) for k, v in {**regular, **special}.items()}
    measured["golden_regular"] = frac_str(golden_reg)
    measured["golden_special"] = frac_str(golden_spec)
    return measured, ok


def verify_concentration(cfg: ExperimentConfig) -> dict:
    """Sample instances and compare every cross intersection against the
    exact expectations minus the eps*m slack; also tallies how often any of
    the three low-intersection events occurs."""
    cfg.validate()
    report = new_report("concentration", cfg)
    m = cfg.m

    t0 = time.perf_counter()
    delta_measured, delta_ok = _exact_delta_table(m)
    add_check(
        report,
        "exact_expected_intersections",
        "pass" if delta_ok else "fail",
        delta_measured,
        {"regular": frac_str(Fraction(51 * m, 200)), "special": frac_str(Fraction(61 * m, 240))},
        time.perf_counter() - t0,
    )

    reg_bar = Fraction(51 * m, 200) - eps_fraction(cfg.eps) * m
    spec_bar = Fraction(61 * m, 240) - eps_fraction(cfg.eps) * m
    regular_all: list[int] = []
    special_all: list[int] = []
    event_count = 0
    t0 = time.perf_counter()
    rng = RngStream(cfg.seed, _STREAM_CONCENTRATION)
    for trial in range(cfg.trials):
        inst = sample_instance(m, cfg.n, cfg.variant, rng.child(trial))
        cross = cross_intersections(inst)
        regular_all.extend(cross.regular)
        special_all.extend(cross.special_a)
        special_all.extend(cross.special_b)
        low_reg = any(x < reg_bar for x in cross.regular)
        low_spec = any(x < spec_bar for x in cross.special_a + cross.special_b)
        if low_reg or low_spec:
            event_count += 1
    runtime = time.perf_counter() - t0

    measured = {
        "instances": cfg.trials,
        "regular_count": len(regular_all),
        "regular_min": min(regular_all, default=None),
        "regular_mean": mean(regular_all) if regular_all else None,
        "special_count": len(special_all),
        "special_min": min(special_all, default=None),
        "special_mean": mean(special_all) if special_all else None,
        "instances_with_low_event": event_count,
    }
    thresholds = {
        "regular_floor": frac_str(reg_bar),
        "special_floor": frac_str(spec_bar),
        "eps": cfg.eps,
    }
    if cfg.n >= 2:
        ok = all(x >= reg_bar for x in regular_all) and all(x >= spec_bar for x in special_all)
        add_check(report, "cross_intersection_floors", "pass" if ok else "fail", measured, thresholds, runtime)
    else:
        # A single index has no regular/special cross pairs to test.
        add_check(report, "cross_intersection_floors", "info", measured, thresholds, runtime)
    return report


def verify_theta_recovery(cfg: ExperimentConfig) -> dict:
    """Check that the optimum is the full universe on every instance and that
    the special copy is read correctly off an optimal allocation."""
    cfg.validate()
    report = new_report("theta_recovery", cfg)
    m = cfg.m
    rng = RngStream(cfg.seed, _STREAM_THETA)
    opt_bad = 0
    tally = {"recovered": 0, "wrong": 0, RECOVER_NONE: 0, RECOVER_AMBIGUOUS: 0}
    both_good_counts: list[int] = []
    t0 = time.perf_counter()
    for trial in range(cfg.trials):
        inst = sample_instance(m, cfg.n, cfg.variant, rng.child(trial))
        va, vb, *_ = build_valuations(inst)
        _, _, value = opt_clause_pair(va, vb)
        if value != m:
            opt_bad += 1
        z = oracle_allocation(va, vb).to_alice
        guess = recover_theta(inst, z, cfg.eps)
        if guess == inst.theta:
            tally["recovered"] += 1
        elif guess in (RECOVER_NONE, RECOVER_AMBIGUOUS):
            tally[guess] += 1
        else:
            tally["wrong"] += 1
        if m == 16:
            both_good_counts.append(_count_both_good(inst, cfg.eps))
    runtime = time.perf_counter() - t0

    add_check(
        report,
        "optimum_is_full_universe",
        "pass" if opt_bad == 0 else "fail",
        {"instances": cfg.trials, "optimum_not_m": opt_bad},
        {"optimum": m},
        runtime,
    )
    add_check(
        report,
        "theta_recovered_from_optimal_allocation",
        "pass" if tally["recovered"] == cfg.trials else "fail",
        dict(tally),
        {"bar": frac_str(recovery_threshold(m, cfg.eps)), "eps": cfg.eps},
        runtime,
    )
    if both_good_counts:
        add_check(
            report,
            "exhaustive_splits_clearing_both_bars",
            "info",
            {
                "instances": len(both_good_counts),
                "splits_total": 1 << m,
                "counts": both_good_counts,
                "frequency": sum(both_good_counts) / (len(both_good_counts) * (1 << m)),
            },
            {"bar": frac_str(recovery_threshold(m, cfg.eps))},
        )
    return report


def _count_both_good(inst: Instance, eps: float) -> int:
    """Exhaustively count splits whose welfare clears the recovery bar under
    both copy envelopes at once (small universes only)."""
    m = inst.m
    if m > 20:
        raise ConfigError("exhaustive split enumeration is limited to small universes")
    _, _, va1, va2, vb1, vb2 = build_valuations(inst)
    bar = recovery_threshold(m, eps)
    min_clearing = bar.__floor__() + 1  # welfares are integers; q > bar iff q >= this
    full = np.uint32((1 << m) - 1)
    zs = np.arange(1 << m, dtype=np.uint32)
    comp = zs ^ full

    def family_max(valuation, masks):
        vals = np.zeros(masks.shape, dtype=np.uint8)
        for c in valuation.clauses:
            np.maximum(vals, np.bitwise_count(masks & np.uint32(c.bits)), out=vals)
        return vals.astype(np.int64)

    q1 = family_max(va1, zs) + family_max(vb1, comp)
    q2 = family_max(va2, zs) + family_max(vb2, comp)
    return int(np.count_nonzero((q1 >= min_clearing) & (q2 >= min_clearing)))


def _instance_statistics(inst: Instance) -> dict:
    """Summary statistics whose law must agree across the two sampling
    procedures; all are plain functions of the instance tuple."""
    star = inst.i_star
    other = 1 if star != 1 else 0
    digest = hashlib.sha256()
    for x in (inst.s.s1, inst.s.s2, *inst.a1, *inst.a2):
        digest.update(x.to_hex().encode())
    return {
        "regular_cross_11": inst.a1[0].intersection_size(inst.b1[1]),
        "regular_cross_12": inst.a1[0].intersection_size(inst.b2[1]),
        "regular_a_overlap": inst.a1[0].intersection_size(inst.a2[1]),
        "special_cross": inst.a1[star].intersection_size(inst.b2[other]),
        "i_star": star,
        "a_side_bin": digest.digest()[0] % 16,
    }


def verify_nu_equivalence(cfg: ExperimentConfig) -> dict:
    """Two-sample tests between the two sampling procedures plus uniformity
    and independence tests on the special index within each procedure.

    The statistic set is a documented choice, not an exhaustive one; the
    Bonferroni correction spans all tests in this report.
    """
    cfg.validate()
    if cfg.n < 2:
        raise ConfigError("the equivalence statistics need at least two clause indices")
    report = new_report("nu_equivalence", cfg)
    t0 = time.perf_counter()
    samples: dict[str, list[dict]] = {}
    for variant, base in (("nu", _STREAM_NU), ("nu_prime", _STREAM_NU_PRIME)):
        rng = RngStream(cfg.seed, base)
        samples[variant] = [
            _instance_statistics(sample_instance(cfg.m, cfg.n, variant, rng.child(trial)))
            for trial in range(cfg.trials)
        ]
    runtime = time.perf_counter() - t0

    stat_names = ("regular_cross_11", "regular_cross_12", "regular_a_overlap", "special_cross", "i_star")
    tests: list[tuple[str, float]] = []
    for name in stat_names:
        _, _, p = two_sample_chi2(
            [s[name] for s in samples["nu"]], [s[name] for s in samples["nu_prime"]]
        )
        tests.append((f"two_sample:{name}", p))
    for variant in VARIANTS:
        counts = [0] * cfg.n
        for s in samples[variant]:
            counts[s["i_star"]] += 1
        _, _, p = uniform_chi2(counts)
        tests.append((f"i_star_uniform:{variant}", p))
        table = [[0] * 16 for _ in range(cfg.n)]
        for s in samples[variant]:
            table[s["i_star"]][s["a_side_bin"]] += 1
        _, _, p = independence_chi2(table)
        tests.append((f"i_star_independent:{variant}", p))

    alpha = SIGNIFICANCE / len(tests)
    rejected = [name for name, p in tests if p < alpha]
    add_check(
        report,
        "distribution_equivalence",
        "pass" if not rejected else "fail",
        {
            "samples_per_variant": cfg.trials,
            "p_values": {name: p for name, p in tests},
            "rejected": rejected,
        },
        {"significance": SIGNIFICANCE, "bonferroni_alpha": alpha, "tests": len(tests)},
        runtime,
    )
    return report


def verify_info(cfg: ExperimentConfig) -> dict:
    """Run the information-measure identity suite as a report."""
    cfg.validate()
    report = new_report("info", cfg)
    t0 = time.perf_counter()
    result = verify_identities(cfg.trials, RngStream(cfg.seed, 0))
    runtime = time.perf_counter() - t0
    for name, entry in result["checks"].items():
        add_check(
            report,
            name,
            "pass" if not entry["failures"] else "fail",
            {"cases": entry["cases"], "worst": entry["worst"], "failures": entry["failures"]},
            {"tolerance": result["tolerance"]},
            runtime,
        )
    return report


def run_protocol_experiment(cfg: ExperimentConfig) -> dict:
    """Execute a registered protocol over sampled instances and record the
    welfare, approximation ratio, round, and communication distributions."""
    cfg.validate()
    if cfg.protocol is None:
        raise ConfigError("a protocol name is required")
    report = new_report("protocol", cfg)
    rng = RngStream(cfg.seed, _STREAM_PROTOCOL)
    ratios: list[Fraction] = []
    welfares: list[int] = []
    rounds: list[int] = []
    ccs: list[int] = []
    exceed_bar = Fraction(179, 240) + eps_fraction(cfg.eps)
    exceed = 0
    t0 = time.perf_counter()
    for trial in range(cfg.trials):
        stream = rng.child(trial)
        inst = sample_instance(cfg.m, cfg.n, cfg.variant, stream)
        outcome, value, ratio = run_on_instance(
            cfg.protocol, inst, seed=int(stream.np.integers(1 << 62))
        )
        ratios.append(ratio)
        welfares.append(value)
        rounds.append(outcome.rounds)
        ccs.append(outcome.cc_bits)
        if ratio > exceed_bar:
            exceed += 1
    runtime = time.perf_counter() - t0
    add_check(
        report,
        "protocol_outcomes",
        "info",
        {
            "protocol": cfg.protocol,
            "instances": cfg.trials,
            "ratio_min": frac_str(min(ratios)),
            "ratio_max": frac_str(max(ratios)),
            "ratio_mean": float(sum(ratios) / len(ratios)),
            "welfare_mean": mean(welfares),
            "rounds": sorted(set(rounds)),
            "cc_bits_max": max(ccs),
            "exceedance_probability": exceed / cfg.trials,
        },
        {"exceedance_bar": frac_str(exceed_bar)},
        runtime,
    )
    return report
