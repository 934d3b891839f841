"""Batch command-line interface.

Subcommands:

``run``         run an experiment described by a config file and write
                ``report.jsonl``, ``summary.csv`` and ``transcripts.txt``
``bounds``      print the round counts and bound formulas for a parameter set
``share-demo``  share a hex secret and reconstruct it
``validate``    check a config file and print it in normalized form

Exit codes: 0 success (all checks pass), 1 a bound check failed, 2 invalid
configuration or parameters, 3 enumeration or size capacity exceeded.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from . import sharing
from .adversary import STRATEGY_NAMES, StrategyFactory
from .analysis import BoundReport, bound_formulas, compare_real_ideal
from .auth import Ed25519SignatureProvider
from .dealer import VARIANTS, run_dealer_protocol
from .dealerless import ideal_provider, run_mpc
from .errors import CapacityError, ConfigError, PartialFairError
from .functionality import (
    BUILTINS,
    DETERMINISTIC,
    KINDS,
    FunctionalitySpec,
    ProtocolConfig,
    load,
    rounds_for_domain,
    rounds_for_range,
)
from .seeding import make_rng

EXIT_OK = 0
EXIT_BOUND_FAILED = 1
EXIT_INVALID = 2
EXIT_CAPACITY = 3

ENGINES = ("dealer", "dealerless")
SIGNATURES = ("ideal", "ed25519")
# executions keep per-round state, so "auto" round counts beyond these are refused
MAX_ROUNDS = {"dealer": 1 << 16, "dealerless": 1 << 12}

KEYS = (
    "functionality",
    "m",
    "t",
    "p",
    "r",
    "variant",
    "engine",
    "signatures",
    "adversary",
    "corrupt",
    "inputs",
    "trials",
    "seed",
    "transcripts",
)


def _indices(text: str) -> tuple[int, ...]:
    text = text.strip()
    if not text or text in ("-", "none"):
        return ()
    return tuple(int(v) for v in text.replace(",", " ").split())


@dataclass
class ExperimentConfig:
    functionality: str
    m: int | None = None
    t: int | None = None
    p: Fraction = Fraction(1)
    r: int | str = "auto"
    variant: str = "domain"
    engine: str = "dealer"
    signatures: str = "ideal"
    adversary: str = "honest"
    adversary_params: dict = field(default_factory=dict)
    corrupt: tuple[int, ...] | None = None
    inputs: tuple[int, ...] | None = None
    trials: int = 10000
    seed: int = 0
    transcripts: int = 3
    base_dir: Path = Path(".")

    @classmethod
    def parse(cls, text: str, base_dir: Path | str = ".") -> "ExperimentConfig":
        values: dict[str, str] = {}
        params: dict[str, str] = {}
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            key, value = key.strip(), value.strip()
            if not sep or not key:
                raise ConfigError(f"line {lineno}: expected 'key = value'")
            if key.startswith("adversary."):
                params[key[len("adversary."):]] = value
                continue
            if key not in KEYS:
                raise ConfigError(f"line {lineno}: unknown key {key!r}")
            if key in values:
                raise ConfigError(f"line {lineno}: duplicate key {key!r}")
            values[key] = value
        if "functionality" not in values:
            raise ConfigError("missing required key 'functionality'")
        try:
            cfg = cls(values["functionality"], adversary_params=params, base_dir=Path(base_dir))
            for key in ("m", "t", "trials", "seed", "transcripts"):
                if key in values:
                    setattr(cfg, key, int(values[key]))
            if "p" in values:
                cfg.p = Fraction(values["p"])
            if "r" in values:
                cfg.r = "auto" if values["r"] == "auto" else int(values["r"])
            for key in ("variant", "engine", "signatures", "adversary"):
                if key in values:
                    setattr(cfg, key, values[key])
            if "corrupt" in values:
                cfg.corrupt = _indices(values["corrupt"])
            if "inputs" in values:
                cfg.inputs = _indices(values["inputs"])
        except (ValueError, ZeroDivisionError) as exc:
            raise ConfigError(f"bad value: {exc}") from None
        cfg.validate()
        return cfg

    @classmethod
    def read(cls, path: str | Path) -> "ExperimentConfig":
        path = Path(path)
        try:
            text = path.read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
        return cls.parse(text, path.parent)

    # -- derived objects ------------------------------------------------

    def spec(self) -> FunctionalitySpec:
        name = self.functionality
        if name.startswith("builtin:"):
            key = name[len("builtin:"):]
            if key not in BUILTINS:
                raise ConfigError(f"unknown builtin {key!r}; choose from {sorted(BUILTINS)}")
            return BUILTINS[key](self.m or 4)
        path = Path(name)
        if not path.is_absolute():
            path = self.base_dir / path
        try:
            spec = load(path)
        except OSError as exc:
            raise ConfigError(f"cannot read functionality: {exc}") from None
        if self.m is not None and self.m != spec.party_count:
            raise ConfigError(f"m = {self.m} but the functionality has {spec.party_count} parties")
        return spec

    def rounds(self, spec: FunctionalitySpec, t: int) -> int:
        if self.r != "auto":
            return self.r
        if self.variant == "range":
            r = rounds_for_range(self.p, spec.range_size, t)
        else:
            r = rounds_for_domain(self.p, spec.domain_size, spec.range_size, spec.party_count, t, spec.deterministic)
        if r > MAX_ROUNDS[self.engine]:
            raise CapacityError(f"r = auto gives {r} rounds, above the {self.engine} limit {MAX_ROUNDS[self.engine]}")
        return r

    def protocol(self) -> ProtocolConfig:
        spec = self.spec()
        m = spec.party_count
        t = self.t if self.t is not None else (m + 1) // 2
        corrupt = self.corrupt if self.corrupt is not None else tuple(range(1, t + 1))
        return ProtocolConfig(spec, t, self.p, self.rounds(spec, t), frozenset(corrupt), self.seed)

    def true_inputs(self, spec: FunctionalitySpec) -> tuple[int, ...]:
        xs = self.inputs if self.inputs is not None else (0,) * spec.party_count
        if len(xs) != spec.party_count or any(not 0 <= x < spec.domain_size for x in xs):
            raise ConfigError(f"inputs must be {spec.party_count} values in [0, {spec.domain_size})")
        return tuple(xs)

    def strategy_factory(self) -> StrategyFactory:
        factory = StrategyFactory(self.adversary, dict(sorted(self.adversary_params.items())))
        factory()
        return factory

    def validate(self) -> ProtocolConfig:
        if self.variant not in VARIANTS:
            raise ConfigError(f"variant must be one of {VARIANTS}")
        if self.engine not in ENGINES:
            raise ConfigError(f"engine must be one of {ENGINES}")
        if self.signatures not in SIGNATURES:
            raise ConfigError(f"signatures must be one of {SIGNATURES}")
        if self.adversary not in STRATEGY_NAMES:
            raise ConfigError(f"adversary must be one of {STRATEGY_NAMES}")
        if self.trials < 1 or self.transcripts < 0:
            raise ConfigError("trials must be positive and transcripts nonnegative")
        if self.r != "auto" and self.r > MAX_ROUNDS[self.engine]:
            raise CapacityError(f"r = {self.r} is above the {self.engine} limit {MAX_ROUNDS[self.engine]}")
        config = self.protocol()
        self.true_inputs(config.functionality)
        self.strategy_factory()
        return config

    def normalized(self) -> dict:
        config = self.protocol()
        return {
            "functionality": self.functionality,
            "m": config.m,
            "t": config.t,
            "p": str(config.p),
            "r": config.r,
            "variant": self.variant,
            "engine": self.engine,
            "signatures": self.signatures,
            "adversary": self.adversary,
            "adversary_params": dict(sorted(self.adversary_params.items())),
            "corrupt": sorted(config.corrupt),
            "inputs": list(self.true_inputs(config.functionality)),
            "trials": self.trials,
            "seed": self.seed,
            "transcripts": self.transcripts,
        }

    def dumps(self) -> str:
        lines = []
        for key, value in self.normalized().items():
            if key == "adversary_params":
                lines.extend(f"adversary.{k} = {v}" for k, v in value.items())
            elif isinstance(value, list):
                lines.append(f"{key} = {','.join(map(str, value)) or '-'}")
            else:
                lines.append(f"{key} = {value}")
        return "\n".join(lines) + "\n"


# -- experiment runner ----------------------------------------------------


def _runner(cfg: ExperimentConfig):
    if cfg.engine == "dealer":
        return run_dealer_protocol
    provider = ideal_provider if cfg.signatures == "ideal" else (lambda streams: Ed25519SignatureProvider())

    def run(config, inputs, adversary=None, variant="domain", **kw):
        return run_mpc(config, inputs, adversary, variant, provider_factory=provider, **kw)

    return run


def run_experiment(cfg: ExperimentConfig, out_dir: str | Path) -> BoundReport:
    """Run the configured batch and write the three report files."""
    config = cfg.validate()
    inputs = cfg.true_inputs(config.functionality)
    factory = cfg.strategy_factory()
    runner = _runner(cfg)
    report = compare_real_ideal(config, inputs, factory, cfg.trials, cfg.variant, runner=runner)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    record = {"config": cfg.normalized(), **report.to_record()}
    (out / "report.jsonl").write_text(json.dumps(record, sort_keys=True) + "\n")
    (out / "summary.csv").write_text(summary_csv(report))
    parts = []
    for k in range(min(cfg.transcripts, cfg.trials)):
        res = runner(config, inputs, factory(), cfg.variant, trial=k, record=True)
        parts.append(
            f"# trial {k} engine={res.engine} termination={res.termination} "
            f"round={res.termination_round} special={res.special_round} output={res.honest_output}\n"
        )
        parts.append(res.transcript.dumps())
    (out / "transcripts.txt").write_text("".join(parts))
    return report


def summary_csv(report: BoundReport) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["check", "empirical", "radius", "bound", "passed"])
    for c in report.checks:
        writer.writerow([c.name, repr(c.empirical), repr(c.radius), repr(c.bound), int(c.passed)])
    return buf.getvalue()


# -- subcommands ----------------------------------------------------------


def cmd_run(args) -> int:
    cfg = _load_config(args)
    report = run_experiment(cfg, args.out)
    verdict = "PASS" if report.passed else "FAIL"
    for c in report.checks:
        print(f"{c.name}: {c.empirical:.6g} <= {c.bound:.6g} + {c.radius:.3g} {'ok' if c.passed else 'FAILED'}")
    print(f"{verdict} ({cfg.trials} trials, reports in {args.out})")
    return EXIT_OK if report.passed else EXIT_BOUND_FAILED


def cmd_bounds(args) -> BoundReport:
    """Build the bound report for the parameters given by flags or config."""
    if args.config:
        cfg = _load_config(args)
        config = cfg.protocol()
        spec = config.functionality
        m, t, d, g = config.m, config.t, config.d, config.g
        p, r, variant, deterministic = config.p, config.r, cfg.variant, spec.deterministic
    else:
        missing = [k for k in ("m", "t") if getattr(args, k) is None]
        if missing:
            raise ConfigError(f"bounds needs --{' --'.join(missing)} or --config")
        m, t, d, g = args.m, args.t, args.d, args.g
        p, variant, deterministic = Fraction(args.p), args.variant, args.kind == DETERMINISTIC
        r = args.r
        if r is None:
            if variant == "range":
                r = rounds_for_range(p, g, t)
            else:
                r = rounds_for_domain(p, d, g, m, t, deterministic)
    alpha = Fraction(args.alpha) if args.alpha is not None else None
    return bound_formulas(d, g, m, t, r, p, variant, alpha, deterministic)


def _cmd_bounds(args) -> int:
    print(cmd_bounds(args).to_json())
    return EXIT_OK


def cmd_share_demo(args) -> int:
    secret = bytes.fromhex(args.secret)
    rng = make_rng(args.seed)
    if args.scheme == "xor":
        shares = sharing.xor_share(secret, args.k, rng)
        back = sharing.xor_reconstruct(shares)
    elif args.scheme == "shamir":
        shares = sharing.shamir_share(secret, args.threshold, args.m, rng)
        back = sharing.shamir_reconstruct(shares[-args.threshold:], args.threshold)
    else:
        masking, complements = sharing.share_with_respect_to(secret, args.j, args.threshold, args.m, rng)
        shares = [masking, *complements]
        back = sharing.reconstruct_with_respect_to(masking, complements[-(args.threshold - 1):], args.threshold)
    for s in shares:
        print("share", s.as_record())
    print("reconstructed", back.hex())
    ok = back == secret
    print("round trip", "ok" if ok else "MISMATCH")
    return EXIT_OK if ok else EXIT_BOUND_FAILED


def cmd_validate(args) -> int:
    cfg = _load_config(args)
    print(cfg.dumps(), end="")
    return EXIT_OK


def _load_config(args) -> ExperimentConfig:
    if not args.config:
        raise ConfigError("--config is required")
    cfg = ExperimentConfig.read(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    if args.trials is not None:
        cfg.trials = args.trials
    cfg.validate()
    return cfg


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="experiment config file (key = value lines)")
    common.add_argument("--seed", type=int, help="override the master seed")
    common.add_argument("--trials", type=int, help="override the trial count")
    common.add_argument("--out", default="partialfair-out", help="output directory")

    parser = argparse.ArgumentParser(prog="partialfair", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("run", parents=[common], help="run an experiment").set_defaults(func=cmd_run)

    b = sub.add_parser("bounds", parents=[common], help="print round counts and bounds")
    b.add_argument("--m", type=int)
    b.add_argument("--t", type=int)
    b.add_argument("--d", type=int, default=2, help="domain size")
    b.add_argument("--g", type=int, default=2, help="range size")
    b.add_argument("--p", default="1")
    b.add_argument("--r", type=int, help="round count (default: the formula for the variant)")
    b.add_argument("--variant", choices=VARIANTS, default="domain")
    b.add_argument("--kind", choices=KINDS, default=DETERMINISTIC)
    b.add_argument("--alpha", help="rational alpha for the guessing bound")
    b.set_defaults(func=_cmd_bounds)

    s = sub.add_parser("share-demo", parents=[common], help="share and reconstruct a secret")
    s.add_argument("--scheme", choices=("xor", "shamir", "construction1"), default="xor")
    s.add_argument("--secret", default="2a")
    s.add_argument("--k", type=int, default=3, help="xor share count")
    s.add_argument("--threshold", type=int, default=2)
    s.add_argument("--m", type=int, default=3, help="party count")
    s.add_argument("--j", type=int, default=1, help="designated party for construction1")
    s.set_defaults(func=cmd_share_demo)

    sub.add_parser("validate", parents=[common], help="check a config file").set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CapacityError as exc:
        print(f"capacity error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except (PartialFairError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
